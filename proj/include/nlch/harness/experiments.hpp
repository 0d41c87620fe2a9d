#pragma once

// Experiment drivers. Each takes a Lab (resolved config plus the mesh and kernel
// operators built from it) and returns a report with the measured quantities and
// pass flags. Sweeps run their member trajectories concurrently; every
// trajectory is sequential, so results do not depend on scheduling.

#include <algorithm>
#include <cmath>
#include <functional>
#include <future>
#include <limits>
#include <optional>
#include <string>
#include <type_traits>
#include <vector>

#include "nlch/evolve.hpp"
#include "nlch/harness/config.hpp"
#include "nlch/initial.hpp"
#include "nlch/mesh.hpp"
#include "nlch/nonlocal.hpp"
#include "nlch/potentials.hpp"
#include "nlch/spaces.hpp"
#include "nlch/stationary.hpp"

namespace nlch::harness {

struct Lab {
  RunConfig cfg;
  DiskMesh mesh;
  KernelPair kp;

  explicit Lab(RunConfig c)
      : cfg(std::move(c)),
        mesh(build_disk_mesh(cfg.mesh_level)),
        kp(build_kernel_pair(cfg.bulk_kernel, cfg.surf_kernel, mesh)) {}

  BulkSurfaceField initial(unsigned long long seed) const { return make_initial(cfg.ic, mesh, seed); }
  BulkSurfaceField initial() const { return initial(cfg.seed); }
};

/// Calls f with the potential selected by the scheme mode.
template <class F>
decltype(auto) with_potential(const SchemeConfig& sc, const LogPotential& pot, F&& f) {
  if (sc.mode == SchemeMode::yosida) return f(YosidaLogPotential{pot, sc.epsilon});
  return f(pot);
}

inline Trajectory simulate(const Lab& lab, const BulkSurfaceField& phi0, const SchemeConfig& sc, double L,
                           const RunOptions& opts = {}) {
  return with_potential(sc, lab.cfg.potential, [&](const auto& pot) {
    using P = std::decay_t<decltype(pot)>;
    const Stepper<P> stepper(lab.mesh, lab.kp, pot, CouplingParam(L), sc);
    return run(phi0, stepper, lab.mesh, lab.kp, opts);
  });
}

/// Least-squares slope of log(y) against log(x).
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    mx += std::log(x[k]) / n;
    my += std::log(y[k]) / n;
  }
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxy += (std::log(x[k]) - mx) * (std::log(y[k]) - my);
    sxx += (std::log(x[k]) - mx) * (std::log(x[k]) - mx);
  }
  return sxy / sxx;
}

// ---------------------------------------------------------------- simulate

struct SeparationSample {
  double tau = 0.0;
  /// min over t >= tau of 1 - ||phi(t)||_inf
  double delta = 0.0;
};

inline std::vector<SeparationSample> separation_profile(const std::vector<Diagnostics>& diags,
                                                        const std::vector<double>& taus) {
  std::vector<SeparationSample> out;
  for (double tau : taus) {
    double d = std::numeric_limits<double>::infinity();
    for (const auto& row : diags) {
      if (row.t >= tau - 1e-12) d = std::min(d, row.sep_gap);
    }
    if (std::isfinite(d)) out.push_back({tau, d});
  }
  return out;
}

struct SimulateReport {
  Trajectory trajectory;
  double max_mass_drift = 0.0;
  /// max_n (E^{n+1} - E^n), positive values are energy increases
  double max_energy_increase = -std::numeric_limits<double>::infinity();
  std::vector<SeparationSample> separation;
  bool pass = false;
};

inline SimulateReport exp_simulate(const Lab& lab, const BulkSurfaceField& phi0) {
  RunOptions opts;
  opts.snapshot_every = lab.cfg.snapshot_every;
  SimulateReport rep;
  rep.trajectory = simulate(lab, phi0, lab.cfg.scheme, lab.cfg.L, opts);
  const auto& d = rep.trajectory.diagnostics;
  for (std::size_t k = 1; k < d.size(); ++k) {
    rep.max_mass_drift = std::max(rep.max_mass_drift, std::abs(d[k].mean - d[0].mean));
    rep.max_energy_increase = std::max(rep.max_energy_increase, d[k].energy - d[k - 1].energy);
  }
  if (d.size() < 2) rep.max_energy_increase = 0.0;
  rep.separation = separation_profile(d, {1.0, 2.0, 3.0, 4.0, 5.0});
  rep.pass = rep.max_mass_drift <= 1e-10 && rep.max_energy_increase <= 1e-10;
  return rep;
}

// ------------------------------------------------------------- dissipative

struct ExpFit {
  double A = 0.0;
  double B = 0.0;
  double omega = 0.0;
  double r2 = 0.0;
  /// Energy is constant: only the plateau B is meaningful.
  bool degenerate = false;
};

/// Fits y = A exp(-omega t) + B: golden-section search in log(omega) on the
/// residual of the linear least-squares fit for (A, B).
inline ExpFit fit_exponential(const std::vector<double>& t, const std::vector<double>& y) {
  ExpFit fit;
  const double n = static_cast<double>(y.size());
  double ymean = 0.0;
  for (double v : y) ymean += v / n;
  double sstot = 0.0;
  for (double v : y) sstot += (v - ymean) * (v - ymean);
  const double scale = std::max(1.0, std::abs(ymean));
  if (y.size() < 3 || std::sqrt(sstot / n) <= 1e-12 * scale) {
    fit.degenerate = true;
    fit.B = ymean;
    fit.r2 = 1.0;
    return fit;
  }
  auto solve_ab = [&](double omega, double& a, double& b) {
    double s11 = 0.0, s12 = 0.0, s22 = n, r1 = 0.0, r2 = 0.0;
    for (std::size_t k = 0; k < t.size(); ++k) {
      const double e = std::exp(-omega * t[k]);
      s11 += e * e;
      s12 += e;
      r1 += e * y[k];
      r2 += y[k];
    }
    const double det = s11 * s22 - s12 * s12;
    a = (r1 * s22 - s12 * r2) / det;
    b = (s11 * r2 - s12 * r1) / det;
    double ss = 0.0;
    for (std::size_t k = 0; k < t.size(); ++k) {
      const double res = y[k] - a * std::exp(-omega * t[k]) - b;
      ss += res * res;
    }
    return ss;
  };
  const double span = t.back() - t.front();
  double lo = std::log(1e-2 / span), hi = std::log(1e3 / span);
  // coarse scan, then golden section around the best bracket
  const int grid = 200;
  double best_x = lo, best = std::numeric_limits<double>::infinity();
  double a = 0.0, b = 0.0;
  for (int k = 0; k <= grid; ++k) {
    const double x = lo + (hi - lo) * k / grid;
    const double ss = solve_ab(std::exp(x), a, b);
    if (ss < best) {
      best = ss;
      best_x = x;
    }
  }
  const double h = (hi - lo) / grid;
  double l = best_x - h, r = best_x + h;
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int it = 0; it < 100; ++it) {
    const double x1 = r - g * (r - l), x2 = l + g * (r - l);
    if (solve_ab(std::exp(x1), a, b) < solve_ab(std::exp(x2), a, b)) {
      r = x2;
    } else {
      l = x1;
    }
  }
  fit.omega = std::exp(0.5 * (l + r));
  const double ss = solve_ab(fit.omega, fit.A, fit.B);
  fit.r2 = 1.0 - ss / sstot;
  return fit;
}

struct DissipativeReport {
  ExpFit fit;
  ExpFit fit_second;
  double e0 = 0.0;
  double e0_second = 0.0;
  double plateau_rel_diff = 0.0;
  bool decaying = false;
  bool pass = false;
};

/// Two runs with equal-mass initial data (seeds s and s + 1).
inline DissipativeReport exp_dissipative(const Lab& lab) {
  auto one = [&](unsigned long long seed, double& e0) {
    const Trajectory tr = simulate(lab, lab.initial(seed), lab.cfg.scheme, lab.cfg.L);
    std::vector<double> t, e;
    for (const auto& d : tr.diagnostics) {
      t.push_back(d.t);
      e.push_back(d.energy);
    }
    e0 = e.front();
    bool monotone = true;
    for (std::size_t k = 1; k < e.size(); ++k) monotone = monotone && e[k] <= e[k - 1] + 1e-10;
    if (!monotone) throw SolverError("dissipative: energy increased along the trajectory");
    return fit_exponential(t, e);
  };
  DissipativeReport rep;
  auto second = std::async(std::launch::async, [&] { return one(lab.cfg.seed + 1, rep.e0_second); });
  rep.fit = one(lab.cfg.seed, rep.e0);
  rep.fit_second = second.get();
  const double scale = std::max(std::abs(rep.fit.B), std::abs(rep.fit_second.B));
  rep.plateau_rel_diff = scale > 0.0 ? std::abs(rep.fit.B - rep.fit_second.B) / scale : 0.0;
  auto ok = [](const ExpFit& f, double e0) {
    if (f.degenerate) return f.B <= e0 + 1e-12;
    return f.omega > 0.0 && f.r2 >= 0.9 && f.B <= e0;
  };
  rep.decaying = !rep.fit.degenerate && !rep.fit_second.degenerate;
  rep.pass = ok(rep.fit, rep.e0) && ok(rep.fit_second, rep.e0_second) &&
             rep.plateau_rel_diff <= lab.cfg.plateau_tol;
  return rep;
}

// ----------------------------------------------------------------- l-limit

struct LLimitReport {
  std::vector<double> L;
  /// ||phi^L - phi^0||_{L^2(0,T;L^2)}
  std::vector<double> e;
  /// max_{t in [1,T]} ||phi^L(t) - phi^0(t)||_{L^2}
  std::vector<double> f;
  double slope_e = 0.0;
  double slope_f = 0.0;
  bool monotone_e = false;
  bool monotone_f = false;
  bool pass = false;
};

inline LLimitReport exp_l_limit(const Lab& lab, const std::vector<double>& l_list) {
  if (l_list.size() < 3) throw ConfigError("l-limit: need at least 3 positive values of L");
  for (double L : l_list) {
    if (!(L > 0.0)) throw ConfigError("l-limit: every L must be positive (L = 0 is the reference)");
  }
  const auto& sc = lab.cfg.scheme;
  if (sc.t_end < 1.0) throw ConfigError("l-limit: scheme.t_end must be >= 1");
  const BulkSurfaceField phi0 = lab.initial();

  std::vector<BulkSurfaceField> ref{phi0};
  RunOptions ref_opts;
  ref_opts.observer = [&ref](const StepState& st, const Diagnostics&) { ref.push_back(st.phi); };
  simulate(lab, phi0, sc, 0.0, ref_opts);

  auto member = [&](double L) {
    double e2 = 0.0, fmax = 0.0;
    std::size_t n = 0;
    RunOptions opts;
    opts.observer = [&](const StepState& st, const Diagnostics&) {
      ++n;
      const double d = l2_norm(st.phi - ref[n], lab.mesh);
      e2 += sc.dt * d * d;
      if (st.t >= 1.0 - 1e-9) fmax = std::max(fmax, d);
    };
    simulate(lab, phi0, sc, L, opts);
    return std::pair{std::sqrt(e2), fmax};
  };
  std::vector<std::future<std::pair<double, double>>> jobs;
  for (double L : l_list) jobs.push_back(std::async(std::launch::async, member, L));

  LLimitReport rep;
  rep.L = l_list;
  for (auto& j : jobs) {
    const auto [e, f] = j.get();
    rep.e.push_back(e);
    rep.f.push_back(f);
  }
  rep.slope_e = loglog_slope(rep.L, rep.e);
  rep.slope_f = loglog_slope(rep.L, rep.f);
  rep.monotone_e = rep.monotone_f = true;
  for (std::size_t k = 1; k < rep.L.size(); ++k) {
    rep.monotone_e = rep.monotone_e && rep.e[k] < rep.e[k - 1];
    rep.monotone_f = rep.monotone_f && rep.f[k] < rep.f[k - 1];
  }
  rep.pass = rep.slope_e >= 0.4 && rep.slope_f >= 0.2 && rep.monotone_e && rep.monotone_f;
  return rep;
}

// ---------------------------------------------------------------- cont-dep

struct ContDepReport {
  double identical_max_diff = 0.0;
  double initial_dual = 0.0;
  /// max_t (||dphi(t)||_*^2 + int_0^t ||dphi||_{L^2}^2) / ||dphi_0||_*^2
  double gronwall_constant = 0.0;
  /// max_t ||dphi(t)||_* / ||dphi_0||_*
  double sup_ratio = 0.0;
  double c_star = 0.0;
  /// Smallest M with ||dphi(t)||_*^2 <= e^{-C_* t}||dphi_0||_*^2 + M int_0^t ||dphi||_*^2.
  double contraction_constant = 0.0;
  std::vector<double> holder_gaps;
  std::vector<double> holder_ratios;
  double holder_spread = 0.0;
  bool pass = false;
};

inline ContDepReport exp_continuous_dependence(const Lab& lab, double perturbation) {
  const auto& sc = lab.cfg.scheme;
  const int kmax = 8;
  if (sc.t_end < 1.0 + 0.5 - 1e-12) throw ConfigError("cont-dep: scheme.t_end must be >= 1.5");
  auto on_grid = [&](double t) { return std::abs(t / sc.dt - std::round(t / sc.dt)) < 1e-9; };
  for (int k = 1; k <= kmax; ++k) {
    if (!on_grid(1.0 + std::ldexp(1.0, -k))) {
      throw ConfigError("cont-dep: scheme.dt must divide 2^-8 so that the sampled times are grid points");
    }
  }
  const BulkSurfaceField phi1 = lab.initial();
  Rng rng(lab.cfg.seed + 7);
  BulkSurfaceField pert = smoothed_noise(lab.mesh, rng);
  pert *= perturbation / pert.linf();
  const BulkSurfaceField phi2 = phi1 + pert;
  if (phi2.linf() >= 1.0 - lab.cfg.ic.delta / 2) throw ConfigError("cont-dep: perturbation leaves the admissible range");
  if (std::abs(generalized_mean(phi1, lab.mesh) - generalized_mean(phi2, lab.mesh)) > 1e-12) {
    throw ConfigError("cont-dep: initial data must have equal generalized mean");
  }

  const EllipticSolver solver(lab.mesh, CouplingParam(lab.cfg.L));
  std::vector<BulkSurfaceField> a_path{phi1};
  RunOptions oa;
  oa.observer = [&](const StepState& st, const Diagnostics&) { a_path.push_back(st.phi); };

  ContDepReport rep;
  auto run_b = std::async(std::launch::async, [&] {
    std::vector<BulkSurfaceField> b_path{phi1};
    RunOptions ob;
    ob.observer = [&](const StepState& st, const Diagnostics&) { b_path.push_back(st.phi); };
    simulate(lab, phi1, sc, lab.cfg.L, ob);
    return b_path;
  });
  simulate(lab, phi1, sc, lab.cfg.L, oa);
  const auto b_path = run_b.get();
  for (std::size_t k = 0; k < a_path.size(); ++k) {
    rep.identical_max_diff = std::max(rep.identical_max_diff, (a_path[k] - b_path[k]).linf());
  }

  rep.initial_dual = dual_norm(phi2 - phi1, solver);
  const double d0 = rep.initial_dual * rep.initial_dual;
  rep.c_star = validate_assumptions(lab.cfg.potential, lab.kp).c_star;
  double int_l2 = 0.0, int_dual = 0.0;
  std::size_t n = 0;
  RunOptions oc;
  oc.observer = [&](const StepState& st, const Diagnostics&) {
    ++n;
    const BulkSurfaceField diff = st.phi - a_path[n];
    const double dual = dual_norm(diff, solver);
    const double l2 = l2_norm(diff, lab.mesh);
    int_l2 += sc.dt * l2 * l2;
    int_dual += sc.dt * dual * dual;
    rep.gronwall_constant = std::max(rep.gronwall_constant, (dual * dual + int_l2) / d0);
    rep.sup_ratio = std::max(rep.sup_ratio, dual / rep.initial_dual);
    const double excess = dual * dual - std::exp(-rep.c_star * st.t) * d0;
    if (excess > 0.0) rep.contraction_constant = std::max(rep.contraction_constant, excess / int_dual);
  };
  simulate(lab, phi2, sc, lab.cfg.L, oc);

  const auto idx = [&](double t) { return static_cast<std::size_t>(std::llround(t / sc.dt)); };
  const BulkSurfaceField& base = a_path[idx(1.0)];
  for (int k = 1; k <= kmax; ++k) {
    const double gap = std::ldexp(1.0, -k);
    rep.holder_gaps.push_back(gap);
    rep.holder_ratios.push_back(dual_norm(a_path[idx(1.0 + gap)] - base, solver) / std::sqrt(gap));
  }
  const auto [mn, mx] = std::minmax_element(rep.holder_ratios.begin(), rep.holder_ratios.end());
  rep.holder_spread = *mn > 0.0 ? *mx / *mn : std::numeric_limits<double>::infinity();
  rep.pass = rep.identical_max_diff == 0.0 && std::isfinite(rep.gronwall_constant) &&
             std::isfinite(rep.contraction_constant) && rep.c_star > 0.0 && rep.holder_spread <= 10.0;
  return rep;
}

// ------------------------------------------------------------- equilibrium

struct EquilibriumReport {
  SteadyState steady;
  Trajectory trajectory;
  std::vector<DistanceSample> distances;
  double terminal_linf = 0.0;
  double terminal_l2 = 0.0;
  bool tail_decreasing = false;
  double mass_defect = 0.0;
  double fixed_point_defect = 0.0;
  double averaging_defect = 0.0;
  LSFit ls;
  std::optional<double> smoothing;
  GradientRegularityReport gradient;
  std::vector<SeparationSample> separation;
  /// beta(1 - sep_gap) <= 2a^* + sup|pi| + |mu_inf|
  bool steady_separation_bound = false;
  /// terminal distance below the configured threshold
  bool converged = false;
  /// structural checks (steady residual, mass, fixed point) hold
  bool consistent = false;
};

inline EquilibriumReport exp_equilibrium(const Lab& lab, const std::optional<BulkSurfaceField>& phi0_in = std::nullopt) {
  const auto& sc = lab.cfg.scheme;
  if (sc.mode != SchemeMode::singular) throw ConfigError("equilibrium: requires scheme.mode = singular");
  const BulkSurfaceField phi0 = phi0_in ? *phi0_in : lab.initial();
  RunOptions opts;
  opts.snapshot_every = std::max(1, static_cast<int>(std::llround(0.05 / sc.dt)));
  EquilibriumReport rep;
  const Stepper<LogPotential> stepper(lab.mesh, lab.kp, lab.cfg.potential, CouplingParam(lab.cfg.L), sc);
  rep.trajectory = run(phi0, stepper, lab.mesh, lab.kp, opts);
  const double m0 = generalized_mean(phi0, lab.mesh);
  rep.steady = solve_steady(m0, rep.trajectory.final_state.phi, lab.kp, lab.cfg.potential, lab.mesh);
  rep.distances = distance_series(rep.trajectory.snapshots, rep.steady, lab.mesh);
  rep.terminal_linf = rep.distances.back().linf;
  rep.terminal_l2 = rep.distances.back().l2;
  const double t_end = rep.distances.back().t;
  rep.tail_decreasing = true;
  for (std::size_t k = 1; k < rep.distances.size(); ++k) {
    if (rep.distances[k].t < 0.5 * t_end) continue;
    rep.tail_decreasing = rep.tail_decreasing && rep.distances[k].linf <= rep.distances[k - 1].linf + 1e-12;
  }
  rep.mass_defect = std::abs(generalized_mean(rep.steady.phi_inf, lab.mesh) - m0);
  rep.fixed_point_defect = fixed_point_defect(rep.steady, stepper);
  rep.averaging_defect = std::max(std::abs(rep.steady.bulk_average - rep.steady.mu_inf),
                                  std::abs(rep.steady.surf_average - rep.steady.mu_inf));
  const double e_inf = energy(rep.steady.phi_inf, lab.kp, lab.cfg.potential, lab.mesh);
  rep.ls = ls_diagnostic(rep.trajectory.diagnostics, e_inf, rep.terminal_l2);
  if (t_end >= 2.0 * lab.cfg.equilibrium_tau) rep.smoothing = smoothing_ratio(rep.distances, lab.cfg.equilibrium_tau);
  rep.gradient = check_gradient_regularity(rep.steady, lab.kp, lab.cfg.potential, lab.mesh);
  rep.separation = separation_profile(rep.trajectory.diagnostics, {1.0, 2.0, 3.0, 4.0, 5.0});
  rep.steady_separation_bound =
      rep.steady.sep_gap > 0.0 &&
      lab.cfg.potential.beta(1.0 - rep.steady.sep_gap) <= steady_beta_bound(rep.steady, lab.kp, lab.cfg.potential);
  rep.converged = rep.terminal_linf <= lab.cfg.equilibrium_threshold;
  rep.consistent = rep.steady.residual <= 1e-10 && rep.mass_defect <= 1e-11 &&
                   rep.fixed_point_defect <= 10.0 * sc.newton_tol && rep.averaging_defect <= 1e-8 &&
                   rep.steady_separation_bound;
  return rep;
}

// ------------------------------------------------------------ yosida-sweep

struct YosidaSweepReport {
  std::vector<double> eps;
  /// ||phi_eps(T) - phi(T)||_{L^2}
  std::vector<double> distance;
  double epsilon_star = 0.0;
  bool monotone = false;
  bool pass = false;
};

inline YosidaSweepReport exp_yosida_sweep(const Lab& lab, const std::vector<double>& eps_list) {
  SchemeConfig sc = lab.cfg.scheme;
  sc.mode = SchemeMode::singular;
  const BulkSurfaceField phi0 = lab.initial();
  YosidaSweepReport rep;
  rep.eps = eps_list;
  rep.epsilon_star = epsilon_star(lab.cfg.potential, lab.kp);
  auto reference = std::async(std::launch::async, [&] { return simulate(lab, phi0, sc, lab.cfg.L).final_state.phi; });
  std::vector<std::future<BulkSurfaceField>> jobs;
  for (double e : eps_list) {
    SchemeConfig ys = sc;
    ys.mode = SchemeMode::yosida;
    ys.epsilon = e;
    jobs.push_back(std::async(std::launch::async,
                              [&lab, &phi0, ys] { return simulate(lab, phi0, ys, lab.cfg.L).final_state.phi; }));
  }
  const BulkSurfaceField ref = reference.get();
  for (auto& j : jobs) rep.distance.push_back(l2_norm(j.get() - ref, lab.mesh));
  rep.monotone = true;
  for (std::size_t k = 1; k < rep.distance.size(); ++k) rep.monotone = rep.monotone && rep.distance[k] < rep.distance[k - 1];
  rep.pass = rep.monotone;
  return rep;
}

// ------------------------------------------------------------------ steady

struct SteadyReport {
  Trajectory trajectory;
  SteadyState steady;
  double fixed_point_defect = 0.0;
  double mass_defect = 0.0;
  bool pass = false;
};

/// Evolves to t_end and continues the terminal state into a steady state.
inline SteadyReport exp_steady(const Lab& lab) {
  const auto& sc = lab.cfg.scheme;
  if (sc.mode != SchemeMode::singular) throw ConfigError("steady: requires scheme.mode = singular");
  const BulkSurfaceField phi0 = lab.initial();
  const Stepper<LogPotential> stepper(lab.mesh, lab.kp, lab.cfg.potential, CouplingParam(lab.cfg.L), sc);
  SteadyReport rep;
  rep.trajectory = run(phi0, stepper, lab.mesh, lab.kp);
  const double m0 = generalized_mean(phi0, lab.mesh);
  rep.steady = solve_steady(m0, rep.trajectory.final_state.phi, lab.kp, lab.cfg.potential, lab.mesh);
  rep.fixed_point_defect = fixed_point_defect(rep.steady, stepper);
  rep.mass_defect = rep.steady.mass_residual;
  rep.pass = rep.steady.residual <= 1e-10 && rep.mass_defect <= 1e-11 && rep.fixed_point_defect <= 10.0 * sc.newton_tol;
  return rep;
}

}  // namespace nlch::harness
