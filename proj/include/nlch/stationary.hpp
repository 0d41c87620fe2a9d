#pragma once

// Steady states with prescribed generalized mean, and the diagnostics that
// compare a trajectory with its limit: gradient regularity, a fitted
// Lojasiewicz-Simon exponent and the L^2 -> L^infinity smoothing ratio.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nlch/evolve.hpp"
#include "nlch/mesh.hpp"
#include "nlch/nonlocal.hpp"
#include "nlch/potentials.hpp"
#include "nlch/spaces.hpp"
#include "nlch/types.hpp"

namespace nlch {

struct SteadyState {
  BulkSurfaceField phi_inf;
  /// Common constant value of the bulk and surface chemical potentials.
  double mu_inf = 0.0;
  /// Max-norm of the nodewise stationarity residual and the mass row.
  double residual = 0.0;
  double sep_gap = 0.0;
  double mass_residual = 0.0;
  int newton_iters = 0;
  /// Weighted averages of the stationarity expressions over Omega and Gamma.
  double bulk_average = 0.0;
  double surf_average = 0.0;
};

struct SteadyOptions {
  double tol = 1e-10;
  int max_iter = 100;
};

/// Newton on (phi_bulk, phi_surf, mu_inf) for
///   a phi - J*phi + beta(phi) + pi(phi) = mu_inf   (bulk and surface),
///   generalized_mean(phi) = m.
/// Trial points are halved until they stay inside (-1, 1) and reduce the residual.
template <SplitPotential P>
SteadyState solve_steady(double m, const BulkSurfaceField& guess, const KernelPair& kp, const P& pot,
                         const DiskMesh& mesh, const SteadyOptions& opts = {}) {
  if (!(std::abs(m) < 1.0)) throw ConfigError("solve_steady: target mass must lie in (-1, 1)");
  require_size(guess.bulk, mesh.n_bulk(), "solve_steady guess bulk");
  require_size(guess.surf, mesh.n_surf(), "solve_steady guess surf");
  if (P::singular && !(guess.linf() < 1.0)) {
    throw ConfigError("solve_steady: initial guess must satisfy |phi| < 1 nodewise");
  }
  const auto nb = mesh.n_bulk();
  const auto ns = mesh.n_surf();
  const auto n = nb + ns + 1;
  const double total = mesh.bulk_measure() + mesh.surf_measure();

  BulkSurfaceField phi = guess;
  // shift the guess onto the mass constraint when this keeps it admissible
  {
    const double defect = m - generalized_mean(phi, mesh);
    BulkSurfaceField shifted = phi;
    shifted.bulk.array() += defect;
    shifted.surf.array() += defect;
    if (!P::singular || shifted.linf() < 1.0) phi = shifted;
  }
  BulkSurfaceField expr = chemical_potential(phi, kp, pot);
  double mu = generalized_mean(expr, mesh);

  auto residual = [&](const BulkSurfaceField& f, double mu_val, Vec& r) {
    const BulkSurfaceField e = chemical_potential(f, kp, pot);
    r.resize(n);
    r.head(nb) = (e.bulk.array() - mu_val).matrix();
    r.segment(nb, ns) = (e.surf.array() - mu_val).matrix();
    r[n - 1] = generalized_mean(f, mesh) - m;
  };
  auto admissible = [&](const BulkSurfaceField& f) { return !P::singular || f.linf() < 1.0; };

  Vec r;
  residual(phi, mu, r);
  double rnorm = r.cwiseAbs().maxCoeff();
  std::vector<double> history{rnorm};
  int iters = 0;
  Mat jac(n, n);
  while (rnorm > opts.tol) {
    if (iters >= opts.max_iter) {
      throw SolverError("solve_steady: Newton did not converge; try the terminal state of a long run as guess",
                        history);
    }
    ++iters;
    jac.setZero();
    jac.topLeftCorner(nb, nb) = -kp.conv_bulk;
    jac.block(nb, nb, ns, ns) = -kp.conv_surf;
    for (Eigen::Index i = 0; i < nb; ++i) {
      jac(i, i) += kp.a_omega[i] + pot.beta_prime(phi.bulk[i]) + pot.pi_prime(phi.bulk[i]);
      jac(i, n - 1) = -1.0;
      jac(n - 1, i) = mesh.lumped_bulk_weights[i] / total;
    }
    for (Eigen::Index j = 0; j < ns; ++j) {
      jac(nb + j, nb + j) += kp.a_gamma[j] + pot.beta_prime(phi.surf[j]) + pot.pi_prime(phi.surf[j]);
      jac(nb + j, n - 1) = -1.0;
      jac(n - 1, nb + j) = mesh.lumped_surf_weights[j] / total;
    }
    const Vec delta = jac.partialPivLu().solve(-r);
    if (!delta.allFinite()) throw SolverError("solve_steady: singular Jacobian", history);

    double lambda = 1.0;
    bool accepted = false;
    BulkSurfaceField trial = phi;
    double trial_mu = mu;
    Vec trial_r;
    for (int ls = 0; ls < 60; ++ls) {
      trial.bulk = phi.bulk + lambda * delta.head(nb);
      trial.surf = phi.surf + lambda * delta.segment(nb, ns);
      trial_mu = mu + lambda * delta[n - 1];
      if (admissible(trial)) {
        residual(trial, trial_mu, trial_r);
        const double tn = trial_r.cwiseAbs().maxCoeff();
        if (tn < rnorm || tn <= opts.tol) {
          accepted = true;
          rnorm = tn;
          break;
        }
      }
      lambda *= 0.5;
    }
    if (!accepted) throw SolverError("solve_steady: line search failed", history);
    phi = trial;
    mu = trial_mu;
    r = trial_r;
    history.push_back(rnorm);
  }

  SteadyState ss;
  ss.phi_inf = phi;
  ss.mu_inf = mu;
  ss.residual = rnorm;
  ss.sep_gap = 1.0 - phi.linf();
  ss.mass_residual = std::abs(generalized_mean(phi, mesh) - m);
  ss.newton_iters = iters;
  expr = chemical_potential(phi, kp, pot);
  ss.bulk_average = mesh.lumped_bulk_weights.dot(expr.bulk) / mesh.bulk_measure();
  ss.surf_average = mesh.lumped_surf_weights.dot(expr.surf) / mesh.surf_measure();
  return ss;
}

/// Upper bound for |beta(phi_inf)| from the steady equation:
/// 2 max(a^*, a^(circled *)) + sup_{[-1,1]} |pi| + |mu_inf|.
inline double steady_beta_bound(const SteadyState& ss, const KernelPair& kp, const LogPotential& pot) {
  const double a = std::max(kp.constants.a_upper, kp.constants.a_upper_surf);
  return 2.0 * a + std::abs(pot.theta0) + std::abs(ss.mu_inf);
}

/// L^infinity change of phi_inf after one time step started from it.
template <SplitPotential P>
double fixed_point_defect(const SteadyState& ss, const Stepper<P>& stepper) {
  const StepState s0 = stepper.initial_state(ss.phi_inf);
  const StepState s1 = stepper.step(s0);
  return (s1.phi - ss.phi_inf).linf();
}

struct GradientRegularityReport {
  /// max_i |formula_i - recovered_i| over all bulk nodes.
  double max_discrepancy = 0.0;
  /// max_i |formula_i|, the L^infinity bound of the gradient.
  double linf_formula = 0.0;
  double linf_recovered = 0.0;
  double min_denominator = 0.0;
  /// a_* + alpha - gamma
  double denominator_bound = 0.0;
  bool denominator_positive = false;
};

/// Compares the finite-element gradient of phi_inf with
///   (grad J * phi - grad a_Omega phi) / (a_Omega + beta'(phi) + pi'(phi)),
/// where the kernel gradients are evaluated analytically at the nodes.
inline GradientRegularityReport check_gradient_regularity(const SteadyState& ss, const KernelPair& kp,
                                                          const LogPotential& pot, const DiskMesh& mesh) {
  const auto nb = mesh.n_bulk();
  const Vec& phi = ss.phi_inf.bulk;
  const auto& w = mesh.lumped_bulk_weights;
  const auto fe = recovered_gradient(phi, mesh);
  GradientRegularityReport rep;
  rep.min_denominator = std::numeric_limits<double>::infinity();
  rep.denominator_bound = kp.constants.a_lower + pot.alpha() - pot.gamma();
  for (Eigen::Index i = 0; i < nb; ++i) {
    double gjx = 0.0, gjy = 0.0, gax = 0.0, gay = 0.0;
    for (Eigen::Index j = 0; j < nb; ++j) {
      const auto g = kp.bulk_spec.gradient(mesh.nodes[i][0] - mesh.nodes[j][0], mesh.nodes[i][1] - mesh.nodes[j][1]);
      gjx += w[j] * g[0] * phi[j];
      gjy += w[j] * g[1] * phi[j];
      gax += w[j] * g[0];
      gay += w[j] * g[1];
    }
    const double denom = kp.a_omega[i] + pot.beta_prime(phi[i]) + pot.pi_prime(phi[i]);
    rep.min_denominator = std::min(rep.min_denominator, denom);
    const double fx = (gjx - gax * phi[i]) / denom;
    const double fy = (gjy - gay * phi[i]) / denom;
    rep.linf_formula = std::max(rep.linf_formula, std::hypot(fx, fy));
    rep.linf_recovered = std::max(rep.linf_recovered, std::hypot(fe[i][0], fe[i][1]));
    rep.max_discrepancy = std::max(rep.max_discrepancy, std::hypot(fx - fe[i][0], fy - fe[i][1]));
  }
  rep.denominator_positive = rep.min_denominator >= rep.denominator_bound - 1e-12 && rep.min_denominator > 0.0;
  return rep;
}

struct LSFit {
  bool applicable = false;
  std::string message;
  double gamma = 0.0;
  double C = 0.0;
  /// Log-log slope of |E - E_inf| against ||mu - mean(mu)||.
  double slope = 0.0;
  int points = 0;
  /// The bound with the same C is violated somewhere on the tail at gamma + 0.2.
  bool tight = false;
};

/// Fits |E - E_inf|^(1 - gamma) <= C ||mu - mean(mu)||_{L^2} over the tail
/// [tail_from * T_c, T_c] of the converging part of the trajectory, where T_c is
/// the last time at which both sides are still above the roundoff floors. With
/// |E - E_inf| ~ y^k the largest admissible exponent is 1 - 1/k, capped at 1/2.
inline LSFit ls_diagnostic(const std::vector<Diagnostics>& diags, double e_inf, double terminal_distance,
                           double threshold = 1e-2, double tail_from = 0.5) {
  LSFit fit;
  if (diags.empty() || !(terminal_distance <= threshold)) {
    fit.message = "inapplicable: trajectory has not converged";
    return fit;
  }
  const double x_floor = 1e-11;
  const double y_floor = 1e-6;
  double t_c = 0.0;
  for (const auto& d : diags) {
    if (std::abs(d.energy - e_inf) > x_floor && d.mu_deviation > y_floor) t_c = d.t;
  }
  std::vector<double> lx, ly;
  std::vector<std::pair<double, double>> pts;
  for (const auto& d : diags) {
    if (d.t < tail_from * t_c || d.t > t_c) continue;
    const double x = std::abs(d.energy - e_inf);
    const double y = d.mu_deviation;
    if (x <= x_floor || y <= y_floor) continue;
    lx.push_back(std::log(x));
    ly.push_back(std::log(y));
    pts.emplace_back(x, y);
  }
  fit.applicable = true;
  fit.points = static_cast<int>(pts.size());
  if (pts.size() < 3) {
    fit.message = "at steady state: both sides vanish on the tail";
    fit.gamma = 0.5;
    return fit;
  }
  const double n = static_cast<double>(lx.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < lx.size(); ++k) {
    mx += lx[k] / n;
    my += ly[k] / n;
  }
  double sxy = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < lx.size(); ++k) {
    sxy += (ly[k] - my) * (lx[k] - mx);
    syy += (ly[k] - my) * (ly[k] - my);
  }
  fit.slope = syy > 0.0 ? sxy / syy : 2.0;
  fit.gamma = fit.slope > 1.0 ? std::min(0.5, 1.0 - 1.0 / fit.slope) : 0.0;
  if (fit.gamma <= 0.0) {
    fit.message = "no positive exponent fits the tail";
    fit.applicable = true;
    return fit;
  }
  for (const auto& [x, y] : pts) fit.C = std::max(fit.C, std::pow(x, 1.0 - fit.gamma) / y);
  const double inflated = fit.gamma + 0.2;
  for (const auto& [x, y] : pts) {
    if (std::pow(x, 1.0 - inflated) > fit.C * y * (1.0 + 1e-12)) fit.tight = true;
  }
  fit.message = "fitted";
  return fit;
}

struct DistanceSample {
  double t = 0.0;
  double linf = 0.0;
  double l2 = 0.0;
};

inline std::vector<DistanceSample> distance_series(const std::vector<Snapshot>& snaps, const SteadyState& ss,
                                                   const DiskMesh& mesh) {
  std::vector<DistanceSample> out;
  out.reserve(snaps.size());
  for (const auto& s : snaps) {
    const BulkSurfaceField d = s.phi - ss.phi_inf;
    out.push_back({s.t, d.linf(), l2_norm(d, mesh)});
  }
  return out;
}

/// sup_{t >= 2 tau} ||phi - phi_inf||_inf / (sup_{t >= tau} ||phi - phi_inf||_{L^2})^2.
/// Empty when the denominator vanishes (trajectory at the steady state).
inline std::optional<double> smoothing_ratio(const std::vector<DistanceSample>& series, double tau) {
  if (!(tau > 0.0)) throw ConfigError("smoothing_ratio: tau must be positive");
  if (series.empty() || series.back().t < 2.0 * tau - 1e-12) {
    throw ConfigError("smoothing_ratio: series must extend to t >= 2 tau");
  }
  double num = 0.0, den = 0.0;
  for (const auto& s : series) {
    if (s.t >= tau - 1e-12) den = std::max(den, s.l2);
    if (s.t >= 2.0 * tau - 1e-12) num = std::max(num, s.linf);
  }
  if (den == 0.0) return std::nullopt;
  return num / (den * den);
}

}  // namespace nlch
