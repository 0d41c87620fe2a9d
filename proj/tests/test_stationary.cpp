#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "nlch/evolve.hpp"
#include "nlch/initial.hpp"
#include "nlch/mesh.hpp"
#include "nlch/nonlocal.hpp"
#include "nlch/potentials.hpp"
#include "nlch/stationary.hpp"

namespace {

using namespace nlch;

struct Quench {
  DiskMesh mesh;
  KernelPair kp;
  LogPotential pot{0.5, 1.0};
  explicit Quench(int level)
      : mesh(build_disk_mesh(level)), kp(build_kernel_pair({0.2, 2.0}, {0.2, 0.5}, mesh)) {}
};

const Quench& level1() {
  static const Quench s(1);
  return s;
}

ICSpec bubbles() { return ICSpec{ICKind::two_bubble, 0.3, 0.65, 0.1, 0.4, 1e-3}; }

// Deep-quench relaxation to t = 50 on the coarse mesh, shared by several tests.
struct Relaxed {
  Trajectory traj;
  SteadyState ss;
  double e_inf = 0.0;
};

const Relaxed& relaxed() {
  static const Relaxed r = [] {
    const auto& s = level1();
    SchemeConfig sc;
    sc.dt = 1e-2;
    sc.t_end = 50.0;
    const Stepper<LogPotential> st(s.mesh, s.kp, s.pot, CouplingParam(1.0), sc);
    RunOptions opts;
    opts.snapshot_every = 5;
    const auto phi0 = make_initial(bubbles(), s.mesh, 0);
    Relaxed out;
    out.traj = run(phi0, st, s.mesh, s.kp, opts);
    out.ss = solve_steady(generalized_mean(phi0, s.mesh), out.traj.final_state.phi, s.kp, s.pot, s.mesh);
    out.e_inf = energy(out.ss.phi_inf, s.kp, s.pot, s.mesh);
    return out;
  }();
  return r;
}

TEST(SolveSteady, ZeroMassFromZeroGuess) {
  const auto& s = level1();
  const auto ss = solve_steady(0.0, BulkSurfaceField::zeros(s.mesh.n_bulk(), s.mesh.n_surf()), s.kp, s.pot, s.mesh);
  EXPECT_EQ(ss.phi_inf.linf(), 0.0);
  EXPECT_EQ(ss.mu_inf, 0.0);
  EXPECT_EQ(ss.newton_iters, 0);
}

TEST(SolveSteady, ConvexRegimeGivesTheConstantState) {
  // beta'(0.9) = 0.5/0.19 > theta0, so the constant is the only nearby solution
  const auto& s = level1();
  const double m = 0.9;
  const auto guess = make_initial(ICSpec{ICKind::smooth, m, 0.05, 0.1, 0.5, 1e-3}, s.mesh, 4);
  const auto ss = solve_steady(m, guess, s.kp, s.pot, s.mesh);
  EXPECT_LE((ss.phi_inf - BulkSurfaceField::constant(s.mesh.n_bulk(), s.mesh.n_surf(), m)).linf(), 1e-10);
  EXPECT_NEAR(ss.mu_inf, s.pot.beta(m) + s.pot.pi(m), 1e-10);
}

TEST(SolveSteady, AgreesWithLongTimeEvolution) {
  const auto& s = level1();
  const auto& r = relaxed();
  EXPECT_LE(r.ss.residual, 1e-10);
  EXPECT_LE(r.ss.mass_residual, 1e-11);
  EXPECT_LE(l2_norm(r.ss.phi_inf - r.traj.final_state.phi, s.mesh), 1e-3);
  EXPECT_NEAR(r.ss.bulk_average, r.ss.mu_inf, 1e-8);
  EXPECT_NEAR(r.ss.surf_average, r.ss.mu_inf, 1e-8);
}

TEST(SolveSteady, IsAFixedPointOfTheStepper) {
  const auto& s = level1();
  SchemeConfig sc;
  sc.dt = 1e-2;
  const Stepper<LogPotential> st(s.mesh, s.kp, s.pot, CouplingParam(1.0), sc);
  EXPECT_LE(fixed_point_defect(relaxed().ss, st), 10.0 * sc.newton_tol);
}

TEST(SolveSteady, SeparationBoundHolds) {
  const auto& s = level1();
  const auto& ss = relaxed().ss;
  EXPECT_GT(ss.sep_gap, 0.0);
  EXPECT_LE(s.pot.beta(1.0 - ss.sep_gap), steady_beta_bound(ss, s.kp, s.pot));
}

TEST(SolveSteady, RejectsBadInput) {
  const auto& s = level1();
  const auto zero = BulkSurfaceField::zeros(s.mesh.n_bulk(), s.mesh.n_surf());
  EXPECT_THROW(solve_steady(1.0, zero, s.kp, s.pot, s.mesh), ConfigError);
  EXPECT_THROW(solve_steady(0.0, BulkSurfaceField::constant(s.mesh.n_bulk(), s.mesh.n_surf(), 1.0), s.kp, s.pot,
                            s.mesh),
               ConfigError);
  EXPECT_THROW(solve_steady(0.0, BulkSurfaceField::zeros(4, 4), s.kp, s.pot, s.mesh), DimensionError);
}

TEST(GradientRegularity, ConstantStateHasNoGradient) {
  const auto& s = level1();
  SteadyState ss;
  ss.phi_inf = BulkSurfaceField::constant(s.mesh.n_bulk(), s.mesh.n_surf(), -0.4);
  const auto rep = check_gradient_regularity(ss, s.kp, s.pot, s.mesh);
  EXPECT_LE(rep.linf_recovered, 1e-12);
  EXPECT_LE(rep.max_discrepancy, 1e-12);
}

TEST(GradientRegularity, DiscrepancyShrinksUnderRefinement) {
  // Newton from a wide tanh disc lands on a state with an interface
  std::vector<double> disc;
  for (int level : {1, 2}) {
    const Quench s(level);
    const auto guess = make_initial(ICSpec{ICKind::tanh, 0.0, 0.9, 0.1, 0.7, 1e-3}, s.mesh, 0);
    const auto ss = solve_steady(generalized_mean(guess, s.mesh), guess, s.kp, s.pot, s.mesh);
    const auto rep = check_gradient_regularity(ss, s.kp, s.pot, s.mesh);
    ASSERT_GT(rep.linf_recovered, 0.5) << "steady state has no interface";
    EXPECT_TRUE(rep.denominator_positive);
    EXPECT_GE(rep.min_denominator, rep.denominator_bound);
    EXPECT_GT(rep.denominator_bound, 0.0);
    disc.push_back(rep.max_discrepancy);
  }
  EXPECT_LT(disc[1], disc[0]);
}

std::vector<Diagnostics> synthetic(double k, int n) {
  // |E - E_inf| = 0.5 exp(-k t), ||mu - mean(mu)|| = exp(-t)
  std::vector<Diagnostics> d(n);
  for (int i = 0; i < n; ++i) {
    d[i].t = 0.1 * i;
    d[i].energy = 0.5 * std::exp(-k * d[i].t);
    d[i].mu_deviation = std::exp(-d[i].t);
  }
  return d;
}

TEST(LojasiewiczSimon, InapplicableBeforeConvergence) {
  const auto fit = ls_diagnostic(synthetic(2.0, 50), 0.0, 0.5);
  EXPECT_FALSE(fit.applicable);
}

TEST(LojasiewiczSimon, StationaryTrajectoryReportsOneHalf) {
  std::vector<Diagnostics> d(10);
  for (int i = 0; i < 10; ++i) d[i].t = i;
  const auto fit = ls_diagnostic(d, 0.0, 0.0);
  EXPECT_TRUE(fit.applicable);
  EXPECT_EQ(fit.gamma, 0.5);
  EXPECT_NE(fit.message.find("steady"), std::string::npos);
}

TEST(LojasiewiczSimon, SyntheticQuadraticDecay) {
  const auto fit = ls_diagnostic(synthetic(2.0, 100), 0.0, 1e-5);
  EXPECT_NEAR(fit.slope, 2.0, 1e-9);
  EXPECT_NEAR(fit.gamma, 0.5, 1e-9);
  EXPECT_NEAR(fit.C, std::sqrt(0.5), 1e-9);
  EXPECT_TRUE(fit.tight);
}

TEST(LojasiewiczSimon, SyntheticSlowerDecayLowersTheExponent) {
  const auto fit = ls_diagnostic(synthetic(1.25, 100), 0.0, 1e-5);
  EXPECT_NEAR(fit.gamma, 0.2, 1e-9);
  EXPECT_TRUE(std::isfinite(fit.C));
  EXPECT_TRUE(fit.tight);
}

TEST(LojasiewiczSimon, DeepQuenchRunFitsPositiveExponent) {
  const auto& r = relaxed();
  const double dist = (r.traj.final_state.phi - r.ss.phi_inf).linf();
  const auto fit = ls_diagnostic(r.traj.diagnostics, r.e_inf, dist);
  ASSERT_TRUE(fit.applicable) << fit.message;
  EXPECT_GT(fit.gamma, 0.0) << fit.message;
  EXPECT_TRUE(std::isfinite(fit.C));
  EXPECT_GT(fit.points, 3);
  EXPECT_TRUE(fit.tight);
}

TEST(Smoothing, StationarySeriesHasNoRatio) {
  const auto& r = relaxed();
  std::vector<Snapshot> snaps;
  for (double t : {0.0, 1.0, 2.0, 3.0}) snaps.push_back({t, r.ss.phi_inf, r.ss.phi_inf});
  EXPECT_FALSE(smoothing_ratio(distance_series(snaps, r.ss, level1().mesh), 1.0).has_value());
}

TEST(Smoothing, PreconditionsEnforced) {
  std::vector<DistanceSample> short_series{{0.0, 1.0, 1.0}, {1.0, 0.5, 0.5}};
  EXPECT_THROW(smoothing_ratio(short_series, 1.0), ConfigError);
  EXPECT_THROW(smoothing_ratio(short_series, 0.0), ConfigError);
}

TEST(Smoothing, RatioIsFiniteAndRobustToTimeStep) {
  const auto& s = level1();
  const auto& r = relaxed();
  std::vector<double> ratios;
  for (double dt : {1e-2, 5e-3}) {
    SchemeConfig sc;
    sc.dt = dt;
    sc.t_end = 3.0;
    const Stepper<LogPotential> st(s.mesh, s.kp, s.pot, CouplingParam(1.0), sc);
    RunOptions opts;
    opts.snapshot_every = static_cast<int>(std::llround(0.05 / dt));
    const auto tr = run(make_initial(bubbles(), s.mesh, 0), st, s.mesh, s.kp, opts);
    const auto ratio = smoothing_ratio(distance_series(tr.snapshots, r.ss, s.mesh), 1.0);
    ASSERT_TRUE(ratio.has_value());
    EXPECT_TRUE(std::isfinite(*ratio));
    ratios.push_back(*ratio);
  }
  EXPECT_LT(std::abs(ratios[0] - ratios[1]) / ratios[1], 0.2);
}

}  // namespace
