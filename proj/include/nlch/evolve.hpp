#pragma once

// Backward Euler with convex splitting for the coupled bulk-surface nonlocal
// Cahn-Hilliard system. Implicit: a_Omega*phi (diagonal) and beta(phi).
// Explicit: -J*phi and pi(phi). The same split is used on the boundary.
//
// With the chemical potential as the Newton unknown, the phase field is
// recovered nodewise from  a_i*phi_i + beta(phi_i) = mu_i + (J*phi^n)_i - pi(phi^n_i),
// which is strictly monotone in phi_i. The remaining system
//   P^T W (Phi(mu) - phi^n) + dt * A_L mu = 0
// has an SPD Jacobian P^T W D P + dt*A_L with D = diag(1/(a + beta')).

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/SparseCholesky>

#include "nlch/mesh.hpp"
#include "nlch/nonlocal.hpp"
#include "nlch/potentials.hpp"
#include "nlch/spaces.hpp"
#include "nlch/types.hpp"

namespace nlch {

enum class SchemeMode { singular, yosida };

struct SchemeConfig {
  double dt = 1e-3;
  double t_end = 1.0;
  SchemeMode mode = SchemeMode::singular;
  double epsilon = 1e-2;
  /// Newton stops once the residual, divided by the nodal weights, is below this.
  double newton_tol = 1e-11;
  int newton_max_iter = 50;
  /// Singular mode: |phi| > 1 - margin is reported as loss of separation.
  double safeguard_margin = 1e-12;

  bool operator==(const SchemeConfig&) const = default;

  int steps() const { return static_cast<int>(std::llround(t_end / dt)); }

  void validate() const {
    if (!(dt > 0.0)) throw ConfigError("scheme.dt must be positive");
    if (!(t_end >= 0.0)) throw ConfigError("scheme.t_end must be >= 0");
    if (!(newton_tol > 0.0)) throw ConfigError("scheme.newton_tol must be positive");
    if (newton_max_iter < 1) throw ConfigError("scheme.newton_max_iter must be >= 1");
    if (!(safeguard_margin > 0.0 && safeguard_margin < 0.5)) {
      throw ConfigError("scheme.safeguard_margin must lie in (0, 0.5)");
    }
    if (mode == SchemeMode::yosida && !(epsilon > 0.0)) throw ConfigError("scheme.epsilon must be positive");
  }
};

/// One row of the diagnostics stream.
struct Diagnostics {
  double t = 0.0;
  double mean = 0.0;
  double energy = 0.0;
  double dissipation = 0.0;
  double sep_gap = 0.0;
  double linf_phi = 0.0;
  int newton_iters = 0;
  /// E(t_n) - E(0) + dt * sum_{k<=n} D^k
  double eq_residual = 0.0;
  /// ||mu - mean(mu)||_{L^2}
  double mu_deviation = 0.0;
};

struct StepState {
  double t = 0.0;
  BulkSurfaceField phi;
  BulkSurfaceField mu;
  int newton_iters = 0;
};

class SeparationError : public SolverError {
 public:
  SeparationError(const std::string& what, double value) : SolverError(what), value_(value) {}
  double value() const { return value_; }

 private:
  double value_;
};

/// Total free energy in the form 1/2<a phi,phi> - 1/2<J*phi,phi> + <beta_hat + pi_hat, 1>
/// on bulk and boundary.
template <SplitPotential P>
double energy(const BulkSurfaceField& phi, const KernelPair& kp, const P& pot, const DiskMesh& mesh) {
  require_size(phi.bulk, mesh.n_bulk(), "energy bulk");
  require_size(phi.surf, mesh.n_surf(), "energy surf");
  const auto& w = mesh.lumped_bulk_weights;
  const auto& s = mesh.lumped_surf_weights;
  const Vec jb = kp.apply_bulk(phi.bulk);
  const Vec ks = kp.apply_surf(phi.surf);
  double e = 0.0;
  for (Eigen::Index i = 0; i < phi.bulk.size(); ++i) {
    const double p = phi.bulk[i];
    e += w[i] * (0.5 * kp.a_omega[i] * p * p - 0.5 * jb[i] * p + pot.beta_hat(p) + pot.pi_hat(p));
  }
  for (Eigen::Index j = 0; j < phi.surf.size(); ++j) {
    const double p = phi.surf[j];
    e += s[j] * (0.5 * kp.a_gamma[j] * p * p - 0.5 * ks[j] * p + pot.beta_hat(p) + pot.pi_hat(p));
  }
  return e;
}

/// ||grad mu||^2 + ||grad_Gamma theta||^2 + chi(L) ||theta - mu||^2_Gamma.
inline double dissipation(const BulkSurfaceField& mu, const CouplingParam& c, const DiskMesh& mesh) {
  return aL_form(mu, mu, c, mesh);
}

/// Chemical potential of a phase field: a*phi - J*phi + beta(phi) + pi(phi) nodewise.
template <SplitPotential P>
BulkSurfaceField chemical_potential(const BulkSurfaceField& phi, const KernelPair& kp, const P& pot) {
  BulkSurfaceField mu = phi;
  const Vec jb = kp.apply_bulk(phi.bulk);
  const Vec ks = kp.apply_surf(phi.surf);
  for (Eigen::Index i = 0; i < phi.bulk.size(); ++i) {
    const double p = phi.bulk[i];
    mu.bulk[i] = kp.a_omega[i] * p - jb[i] + pot.beta(p) + pot.pi(p);
  }
  for (Eigen::Index j = 0; j < phi.surf.size(); ++j) {
    const double p = phi.surf[j];
    mu.surf[j] = kp.a_gamma[j] * p - ks[j] + pot.beta(p) + pot.pi(p);
  }
  return mu;
}

template <SplitPotential P>
class Stepper {
 public:
  Stepper(const DiskMesh& mesh, const KernelPair& kp, P pot, CouplingParam coupling, SchemeConfig cfg)
      : mesh_(&mesh), kp_(&kp), pot_(std::move(pot)), space_(mesh, coupling), cfg_(cfg) {
    cfg_.validate();
    jacobian_ = space_.stiffness() * cfg_.dt;
    jacobian_.makeCompressed();
    base_diag_ = jacobian_.diagonal();
    ldlt_.analyzePattern(jacobian_);
  }

  const P& potential() const { return pot_; }
  const SchemeConfig& config() const { return cfg_; }
  const CoupledSpace& space() const { return space_; }
  const CouplingParam& coupling() const { return space_.coupling(); }

  /// State at t = 0 with mu given by the chemical potential of phi0. For L = 0
  /// the surface potential is replaced by the bulk trace.
  StepState initial_state(const BulkSurfaceField& phi0) const {
    StepState st;
    st.t = 0.0;
    st.phi = phi0;
    st.mu = chemical_potential(phi0, *kp_, pot_);
    if (coupling().identified()) st.mu.surf = mesh_->trace(st.mu.bulk);
    return st;
  }

  StepState step(const StepState& state) const {
    const auto& mesh = *mesh_;
    const auto nb = mesh.n_bulk();
    const auto ns = mesh.n_surf();
    const double dt = cfg_.dt;

    // explicit part of the constitutive relation
    BulkSurfaceField shift = state.phi;
    {
      const Vec jb = kp_->apply_bulk(state.phi.bulk);
      const Vec ks = kp_->apply_surf(state.phi.surf);
      for (Eigen::Index i = 0; i < nb; ++i) shift.bulk[i] = jb[i] - pot_.pi(state.phi.bulk[i]);
      for (Eigen::Index j = 0; j < ns; ++j) shift.surf[j] = ks[j] - pot_.pi(state.phi.surf[j]);
    }

    BulkSurfaceField phi = state.phi;
    BulkSurfaceField dphi = state.phi;  // d phi / d mu, nodewise
    auto evaluate = [&](const Vec& x, Vec& residual) {
      const BulkSurfaceField mu = space_.expand(x);
      for (Eigen::Index i = 0; i < nb; ++i) {
        const double a = kp_->a_omega[i];
        phi.bulk[i] = pot_.solve_convex(a, mu.bulk[i] + shift.bulk[i]);
      }
      for (Eigen::Index j = 0; j < ns; ++j) {
        const double a = kp_->a_gamma[j];
        phi.surf[j] = pot_.solve_convex(a, mu.surf[j] + shift.surf[j]);
      }
      residual = space_.assemble_weighted(phi - state.phi) + dt * (space_.stiffness() * x);
    };
    auto scaled_norm = [&](const Vec& r) { return r.cwiseQuotient(space_.weights()).cwiseAbs().maxCoeff(); };

    Vec x = space_.restrict(state.mu);
    Vec res;
    evaluate(x, res);
    double rnorm = scaled_norm(res);
    std::vector<double> history{rnorm};
    int iters = 0;
    Eigen::SimplicialLDLT<SpMat>& ldlt = ldlt_;
    SpMat& jac = jacobian_;
    while (rnorm > cfg_.newton_tol) {
      if (iters >= cfg_.newton_max_iter) {
        throw SolverError("Newton did not converge within " + std::to_string(cfg_.newton_max_iter) +
                              " iterations at t=" + std::to_string(state.t + dt) + " (dt too large?)",
                          history);
      }
      ++iters;
      for (Eigen::Index i = 0; i < nb; ++i) {
        dphi.bulk[i] = 1.0 / (kp_->a_omega[i] + pot_.beta_prime(phi.bulk[i]));
      }
      for (Eigen::Index j = 0; j < ns; ++j) {
        dphi.surf[j] = 1.0 / (kp_->a_gamma[j] + pot_.beta_prime(phi.surf[j]));
      }
      const Vec d = space_.assemble_weighted(dphi);
      set_diagonal(jac, d);
      ldlt.factorize(jac);
      if (ldlt.info() != Eigen::Success) throw SolverError("Newton: Jacobian factorization failed", history);
      const Vec delta = ldlt.solve(-res);

      // backtracking on the residual norm
      double lambda = 1.0;
      Vec trial_res;
      Vec trial;
      double trial_norm = std::numeric_limits<double>::infinity();
      for (int ls = 0; ls < 40; ++ls) {
        trial = x + lambda * delta;
        evaluate(trial, trial_res);
        trial_norm = scaled_norm(trial_res);
        if (trial_norm < rnorm || trial_norm <= cfg_.newton_tol) break;
        lambda *= 0.5;
      }
      if (!(trial_norm < rnorm) && !(trial_norm <= cfg_.newton_tol)) {
        history.push_back(trial_norm);
        throw SolverError("Newton: line search failed to reduce the residual", history);
      }
      x = trial;
      res = trial_res;
      rnorm = trial_norm;
      history.push_back(rnorm);
    }

    // Remove the remaining mass defect by a uniform shift of mu, which leaves A_L mu unchanged.
    const double target = space_.assemble_weighted(state.phi).sum();
    for (int k = 0; k < 3; ++k) {
      evaluate(x, res);
      const double defect = space_.assemble_weighted(phi).sum() - target;
      if (defect == 0.0) break;
      for (Eigen::Index i = 0; i < nb; ++i) {
        dphi.bulk[i] = 1.0 / (kp_->a_omega[i] + pot_.beta_prime(phi.bulk[i]));
      }
      for (Eigen::Index j = 0; j < ns; ++j) {
        dphi.surf[j] = 1.0 / (kp_->a_gamma[j] + pot_.beta_prime(phi.surf[j]));
      }
      const double slope = space_.assemble_weighted(dphi).sum();
      x.array() -= defect / slope;
    }
    evaluate(x, res);

    if constexpr (P::singular) {
      const double worst = phi.linf();
      if (worst > 1.0 - cfg_.safeguard_margin) {
        std::ostringstream os;
        os << "loss of separation: |phi| reached " << worst << " at t=" << state.t + dt;
        throw SeparationError(os.str(), worst);
      }
    }

    StepState next;
    next.t = state.t + dt;
    next.phi = std::move(phi);
    next.mu = space_.expand(x);
    next.newton_iters = iters;
    return next;
  }

 private:
  void set_diagonal(SpMat& jac, const Vec& d) const {
    for (Eigen::Index i = 0; i < jac.outerSize(); ++i) {
      for (SpMat::InnerIterator it(jac, i); it; ++it) {
        if (it.row() == it.col()) it.valueRef() = base_diag_[i] + d[i];
      }
    }
  }

  const DiskMesh* mesh_;
  const KernelPair* kp_;
  P pot_;
  CoupledSpace space_;
  SchemeConfig cfg_;
  // scratch reused across steps: step() is not reentrant on one Stepper
  mutable SpMat jacobian_;
  mutable Eigen::SimplicialLDLT<SpMat> ldlt_;
  Vec base_diag_;
};

struct Snapshot {
  double t = 0.0;
  BulkSurfaceField phi;
  BulkSurfaceField mu;
};

struct Trajectory {
  std::vector<Diagnostics> diagnostics;
  std::vector<Snapshot> snapshots;
  StepState final_state;
};

struct RunOptions {
  /// Keep a snapshot every this many steps (0: only the initial and final states).
  int snapshot_every = 0;
  /// Called after every step with the new state and its diagnostics row.
  std::function<void(const StepState&, const Diagnostics&)> observer;
};

template <SplitPotential P>
Diagnostics make_diagnostics(const StepState& st, const KernelPair& kp, const P& pot, const DiskMesh& mesh,
                             const CouplingParam& c) {
  Diagnostics d;
  d.t = st.t;
  d.mean = generalized_mean(st.phi, mesh);
  d.energy = energy(st.phi, kp, pot, mesh);
  d.dissipation = dissipation(st.mu, c, mesh);
  d.linf_phi = st.phi.linf();
  d.sep_gap = 1.0 - d.linf_phi;
  d.newton_iters = st.newton_iters;
  d.mu_deviation = l2_norm(project(st.mu, mesh), mesh);
  return d;
}

/// Advance from phi0 to t_end, recording one Diagnostics row per step.
template <SplitPotential P>
Trajectory run(const BulkSurfaceField& phi0, const Stepper<P>& stepper, const DiskMesh& mesh,
               const KernelPair& kp, const RunOptions& opts = {}) {
  const auto& cfg = stepper.config();
  const auto& c = stepper.coupling();
  const double m0 = generalized_mean(phi0, mesh);
  if (!(std::abs(m0) < 1.0)) throw ConfigError("initial data: generalized mean must lie in (-1, 1)");
  if (P::singular && !(phi0.linf() < 1.0)) {
    throw ConfigError("initial data: singular potential requires |phi0| < 1 nodewise");
  }

  Trajectory tr;
  StepState st = stepper.initial_state(phi0);
  Diagnostics d0 = make_diagnostics(st, kp, stepper.potential(), mesh, c);
  const double e0 = d0.energy;
  d0.eq_residual = 0.0;
  tr.diagnostics.push_back(d0);
  tr.snapshots.push_back({st.t, st.phi, st.mu});

  const int steps = cfg.steps();
  double dissipated = 0.0;
  for (int n = 1; n <= steps; ++n) {
    st = stepper.step(st);
    st.t = n * cfg.dt;
    Diagnostics d = make_diagnostics(st, kp, stepper.potential(), mesh, c);
    dissipated += cfg.dt * d.dissipation;
    d.eq_residual = d.energy - e0 + dissipated;
    tr.diagnostics.push_back(d);
    if (opts.observer) opts.observer(st, d);
    if ((opts.snapshot_every > 0 && n % opts.snapshot_every == 0) || n == steps) {
      if (tr.snapshots.back().t != st.t) tr.snapshots.push_back({st.t, st.phi, st.mu});
    }
  }
  tr.final_state = st;
  return tr;
}

}  // namespace nlch
