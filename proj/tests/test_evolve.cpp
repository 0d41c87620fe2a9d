#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "nlch/evolve.hpp"
#include "nlch/initial.hpp"
#include "nlch/mesh.hpp"
#include "nlch/nonlocal.hpp"
#include "nlch/potentials.hpp"
#include "nlch/spaces.hpp"

namespace {

using namespace nlch;

struct Quench {
  DiskMesh mesh;
  KernelPair kp;
  LogPotential pot{0.5, 1.0};

  explicit Quench(int level, KernelSpec j = {0.2, 2.0}, KernelSpec k = {0.2, 0.5})
      : mesh(build_disk_mesh(level)), kp(build_kernel_pair(j, k, mesh)) {}

  BulkSurfaceField noise(double mean, double amplitude, unsigned long long seed) const {
    return make_initial(ICSpec{ICKind::random, mean, amplitude, 0.1, 0.5, 1e-3}, mesh, seed);
  }
};

const Quench& coarse() {
  static const Quench q(1);
  return q;
}

SchemeConfig scheme(double dt, double t_end) {
  SchemeConfig sc;
  sc.dt = dt;
  sc.t_end = t_end;
  return sc;
}

TEST(Energy, ZeroFieldHasZeroEnergy) {
  const auto& q = coarse();
  EXPECT_EQ(energy(BulkSurfaceField::zeros(q.mesh.n_bulk(), q.mesh.n_surf()), q.kp, q.pot, q.mesh), 0.0);
}

TEST(Energy, ConstantPotentialDissipatesNothing) {
  const auto& q = coarse();
  const auto c = BulkSurfaceField::constant(q.mesh.n_bulk(), q.mesh.n_surf(), 0.8);
  for (double L : {0.0, 1.0}) EXPECT_NEAR(dissipation(c, CouplingParam(L), q.mesh), 0.0, 1e-12);
}

TEST(Energy, MatchesDoubleSumOracle) {
  // 1/2 <a phi, phi> - 1/2 <J*phi, phi> = 1/4 sum_ij w_i w_j J_ij (phi_i - phi_j)^2
  const auto& q = coarse();
  const auto& m = q.mesh;
  const BulkSurfaceField phi = q.noise(0.1, 0.8, 17);
  const auto& w = m.lumped_bulk_weights;
  const auto& s = m.lumped_surf_weights;
  long double e = 0.0L;
  for (Eigen::Index i = 0; i < m.n_bulk(); ++i) {
    for (Eigen::Index j = 0; j < m.n_bulk(); ++j) {
      const double dx = m.nodes[i][0] - m.nodes[j][0], dy = m.nodes[i][1] - m.nodes[j][1];
      const double d = phi.bulk[i] - phi.bulk[j];
      e += 0.25L * w[i] * w[j] * q.kp.bulk_spec.value(dx, dy) * d * d;
    }
    e += w[i] * (q.pot.beta_hat(phi.bulk[i]) + q.pot.pi_hat(phi.bulk[i]));
  }
  for (Eigen::Index i = 0; i < m.n_surf(); ++i) {
    const auto& pi = m.nodes[m.boundary_loop[i]];
    for (Eigen::Index j = 0; j < m.n_surf(); ++j) {
      const auto& pj = m.nodes[m.boundary_loop[j]];
      const double d = phi.surf[i] - phi.surf[j];
      e += 0.25L * s[i] * s[j] * q.kp.surf_spec.value(pi[0] - pj[0], pi[1] - pj[1]) * d * d;
    }
    e += s[i] * (q.pot.beta_hat(phi.surf[i]) + q.pot.pi_hat(phi.surf[i]));
  }
  EXPECT_NEAR(energy(phi, q.kp, q.pot, m), static_cast<double>(e), 1e-10);
}

TEST(Energy, DomainViolationThrows) {
  const auto& q = coarse();
  auto phi = BulkSurfaceField::zeros(q.mesh.n_bulk(), q.mesh.n_surf());
  phi.bulk[3] = 1.5;
  EXPECT_THROW(energy(phi, q.kp, q.pot, q.mesh), DomainError);
}

TEST(Step, ConstantStateIsAFixedPoint) {
  // J*1 = a_Omega exactly, so mu is constant for any kernel; a flat kernel as well
  const Quench flat(1, {5.0, 1.0}, {5.0, 1.0});
  for (const Quench* q : {&coarse(), &flat}) {
    const Stepper<LogPotential> st(q->mesh, q->kp, q->pot, CouplingParam(1.0), scheme(1e-2, 1.0));
    const auto phi0 = BulkSurfaceField::constant(q->mesh.n_bulk(), q->mesh.n_surf(), 0.3);
    const StepState s1 = st.step(st.initial_state(phi0));
    EXPECT_LE((s1.phi - phi0).linf(), 1e-12);
  }
}

TEST(Step, ConservesMassForManySteps) {
  const auto& q = coarse();
  for (double L : {0.0, 1.0}) {
    const Stepper<LogPotential> st(q.mesh, q.kp, q.pot, CouplingParam(L), scheme(1e-3, 1.0));
    const auto phi0 = q.noise(-0.2, 0.5, 3);
    const double m0 = generalized_mean(phi0, q.mesh);
    const auto tr = run(phi0, st, q.mesh, q.kp);
    ASSERT_EQ(tr.diagnostics.size(), 1001u);
    double worst = 0.0;
    for (const auto& d : tr.diagnostics) worst = std::max(worst, std::abs(d.mean - m0));
    EXPECT_LE(worst, 1e-11) << "L=" << L;
  }
}

TEST(Step, DeepQuenchEnergyDecreasesStrictly) {
  const auto& q = coarse();
  const Stepper<LogPotential> st(q.mesh, q.kp, q.pot, CouplingParam(1.0), scheme(1e-3, 0.06));
  const auto tr = run(q.noise(0.0, 0.05, 1), st, q.mesh, q.kp);
  for (std::size_t n = 1; n < tr.diagnostics.size(); ++n) {
    EXPECT_LT(tr.diagnostics[n].energy, tr.diagnostics[n - 1].energy) << "step " << n;
  }
}

TEST(Step, IdentifiedModeSharesSurfacePotential) {
  const auto& q = coarse();
  const Stepper<LogPotential> st(q.mesh, q.kp, q.pot, CouplingParam(0.0), scheme(1e-2, 1.0));
  StepState s = st.initial_state(q.noise(0.0, 0.5, 8));
  for (int n = 0; n < 5; ++n) {
    s = st.step(s);
    EXPECT_EQ(s.mu.surf, q.mesh.trace(s.mu.bulk));
  }
}

TEST(Step, SeparatedDataStaysInside) {
  const auto& q = coarse();
  const Stepper<LogPotential> st(q.mesh, q.kp, q.pot, CouplingParam(1.0), scheme(1e-2, 2.0));
  ICSpec ic{ICKind::tanh, 0.0, 1.0, 0.05, 0.5, 1e-3};
  const auto tr = run(make_initial(ic, q.mesh, 0), st, q.mesh, q.kp);
  for (const auto& d : tr.diagnostics) EXPECT_GT(d.sep_gap, 0.0);
}

TEST(Step, SeparationLossIsReported) {
  const auto& q = coarse();
  SchemeConfig sc = scheme(1e-2, 1.0);
  sc.safeguard_margin = 0.3;
  const Stepper<LogPotential> st(q.mesh, q.kp, q.pot, CouplingParam(1.0), sc);
  ICSpec ic{ICKind::tanh, 0.0, 0.95, 0.05, 0.5, 1e-3};
  EXPECT_THROW(st.step(st.initial_state(make_initial(ic, q.mesh, 0))), SeparationError);
}

TEST(Step, NewtonFailureIsReported) {
  const auto& q = coarse();
  SchemeConfig sc = scheme(1e-1, 1.0);
  sc.newton_max_iter = 1;
  sc.newton_tol = 1e-15;
  const Stepper<LogPotential> st(q.mesh, q.kp, q.pot, CouplingParam(1.0), sc);
  EXPECT_THROW(st.step(st.initial_state(q.noise(0.0, 0.9, 2))), SolverError);
}

TEST(Run, ZeroHorizonReturnsInitialStateOnly) {
  const auto& q = coarse();
  const Stepper<LogPotential> st(q.mesh, q.kp, q.pot, CouplingParam(1.0), scheme(1e-2, 0.0));
  const auto phi0 = q.noise(0.0, 0.3, 1);
  const auto tr = run(phi0, st, q.mesh, q.kp);
  ASSERT_EQ(tr.diagnostics.size(), 1u);
  EXPECT_EQ(tr.diagnostics[0].t, 0.0);
  EXPECT_EQ(tr.final_state.phi, phi0);
}

TEST(Run, BitwiseDeterministic) {
  const auto& q = coarse();
  auto once = [&] {
    const Stepper<LogPotential> st(q.mesh, q.kp, q.pot, CouplingParam(1.0), scheme(1e-2, 0.5));
    return run(q.noise(0.0, 0.3, 99), st, q.mesh, q.kp);
  };
  const auto a = once();
  const auto b = once();
  ASSERT_EQ(a.diagnostics.size(), b.diagnostics.size());
  for (std::size_t n = 0; n < a.diagnostics.size(); ++n) {
    EXPECT_EQ(a.diagnostics[n].energy, b.diagnostics[n].energy);
    EXPECT_EQ(a.diagnostics[n].mean, b.diagnostics[n].mean);
    EXPECT_EQ(a.diagnostics[n].dissipation, b.diagnostics[n].dissipation);
    EXPECT_EQ(a.diagnostics[n].newton_iters, b.diagnostics[n].newton_iters);
  }
  EXPECT_EQ(a.final_state.phi, b.final_state.phi);
}

TEST(Run, RejectsInadmissibleInitialData) {
  const auto& q = coarse();
  const Stepper<LogPotential> st(q.mesh, q.kp, q.pot, CouplingParam(1.0), scheme(1e-2, 0.1));
  EXPECT_THROW(run(BulkSurfaceField::constant(q.mesh.n_bulk(), q.mesh.n_surf(), 1.0), st, q.mesh, q.kp),
               ConfigError);
  EXPECT_THROW(run(BulkSurfaceField::zeros(3, 2), st, q.mesh, q.kp), DimensionError);
}

TEST(Run, SchemeConfigValidation) {
  EXPECT_THROW(scheme(0.0, 1.0).validate(), ConfigError);
  EXPECT_THROW(scheme(1e-2, -1.0).validate(), ConfigError);
  SchemeConfig sc = scheme(1e-2, 1.0);
  sc.mode = SchemeMode::yosida;
  sc.epsilon = 0.0;
  EXPECT_THROW(sc.validate(), ConfigError);
}

TEST(Run, EnergyEqualityResidualIsFirstOrder) {
  // resolved data: mesh-scale noise would add a tau-independent initial layer
  const auto& q = coarse();
  const auto phi0 = make_initial(ICSpec{ICKind::smooth, 0.0, 0.3, 0.1, 0.5, 1e-3}, q.mesh, 3);
  std::vector<double> res;
  for (double dt : {4e-3, 2e-3, 1e-3}) {
    const Stepper<LogPotential> st(q.mesh, q.kp, q.pot, CouplingParam(1.0), scheme(dt, 2.0));
    const auto tr = run(phi0, st, q.mesh, q.kp);
    double worst = 0.0;
    for (const auto& d : tr.diagnostics) worst = std::max(worst, std::abs(d.eq_residual));
    res.push_back(worst);
  }
  EXPECT_GE(std::log2(res[0] / res[1]), 0.9);
  EXPECT_GE(std::log2(res[1] / res[2]), 0.9);
}

TEST(Run, YosidaTrajectoriesApproachSingularOne) {
  const auto& q = coarse();
  const auto phi0 = q.noise(0.0, 0.5, 12);
  const Stepper<LogPotential> ref(q.mesh, q.kp, q.pot, CouplingParam(1.0), scheme(1e-2, 1.0));
  const auto target = run(phi0, ref, q.mesh, q.kp).final_state.phi;
  double prev = std::numeric_limits<double>::infinity();
  for (double eps : {4e-2, 2e-2, 1e-2}) {
    SchemeConfig sc = scheme(1e-2, 1.0);
    sc.mode = SchemeMode::yosida;
    sc.epsilon = eps;
    const Stepper<YosidaLogPotential> st(q.mesh, q.kp, YosidaLogPotential{q.pot, eps}, CouplingParam(1.0), sc);
    const double d = l2_norm(run(phi0, st, q.mesh, q.kp).final_state.phi - target, q.mesh);
    EXPECT_LT(d, prev) << "eps=" << eps;
    prev = d;
  }
}

TEST(Run, QuarticPotentialConservesMass) {
  const auto& q = coarse();
  const QuarticPotential pot{1.0};
  const Stepper<QuarticPotential> st(q.mesh, q.kp, pot, CouplingParam(0.5), scheme(1e-2, 0.5));
  const auto phi0 = q.noise(0.1, 0.5, 4);
  const auto tr = run(phi0, st, q.mesh, q.kp);
  EXPECT_NEAR(tr.diagnostics.back().mean, generalized_mean(phi0, q.mesh), 1e-11);
  EXPECT_LE(tr.diagnostics.back().energy, tr.diagnostics.front().energy);
}

}  // namespace
