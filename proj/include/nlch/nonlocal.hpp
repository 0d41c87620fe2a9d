#pragma once

// Nystrom discretization of the bulk and boundary convolutions with lumped
// quadrature weights, kernel constants, and the Young-type trace check.

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "nlch/mesh.hpp"
#include "nlch/random_fields.hpp"
#include "nlch/types.hpp"

namespace nlch {

/// Isotropic Gaussian on R^2 normalised so that its integral over R^2 equals `mass`.
struct KernelSpec {
  double sigma = 0.2;
  double mass = 1.0;

  double value_sq(double r2) const {
    return mass / (2.0 * std::numbers::pi * sigma * sigma) * std::exp(-r2 / (2.0 * sigma * sigma));
  }
  double value(double dx, double dy) const { return value_sq(dx * dx + dy * dy); }
  /// Gradient of the kernel evaluated at the offset (dx, dy).
  std::array<double, 2> gradient(double dx, double dy) const {
    const double f = -value(dx, dy) / (sigma * sigma);
    return {f * dx, f * dy};
  }

  /// ||J||_{W^{1,1}(R^2)} = int J + int |grad J|, by composite Simpson in the radius.
  double w11_norm() const {
    const int n = 20000;
    const double rmax = 40.0 * sigma;
    const double step = rmax / n;
    double acc = 0.0;
    for (int i = 0; i <= n; ++i) {
      const double r = i * step;
      const double j = value_sq(r * r);
      const double integrand = 2.0 * std::numbers::pi * r * (j + j * r / (sigma * sigma));
      const double coef = (i == 0 || i == n) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
      acc += coef * integrand;
    }
    return acc * step / 3.0;
  }

  bool operator==(const KernelSpec&) const = default;

  void validate(const char* name) const {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
      throw ConfigError(std::string(name) + ": sigma must be positive");
    }
    if (!(mass > 0.0) || !std::isfinite(mass)) {
      throw ConfigError(std::string(name) + ": mass must be positive");
    }
  }
};

struct KernelConstants {
  double a_lower = 0.0;       // a_*
  double a_upper = 0.0;       // a^*
  double a_lower_surf = 0.0;  // a_(circled *)
  double a_upper_surf = 0.0;  // a^(circled *)
  double b_bulk = 0.0;        // b^*
  double b_surf = 0.0;        // b^(circled *)
};

struct KernelPair {
  KernelSpec bulk_spec;
  KernelSpec surf_spec;
  /// (conv_bulk * phi)_i = sum_j w_j J(x_i - x_j) phi_j.
  Mat conv_bulk;
  /// (conv_surf * psi)_i = sum_j s_j K(x_i - x_j) psi_j, with chordal offsets.
  Mat conv_surf;
  Vec a_omega;
  Vec a_gamma;
  KernelConstants constants;
  double bulk_w11 = 0.0;

  Vec apply_bulk(const Vec& phi) const {
    require_size(phi, conv_bulk.cols(), "apply_bulk");
    return conv_bulk * phi;
  }
  Vec apply_surf(const Vec& psi) const {
    require_size(psi, conv_surf.cols(), "apply_surf");
    return conv_surf * psi;
  }
};

inline KernelPair build_kernel_pair(const KernelSpec& bulk_spec, const KernelSpec& surf_spec,
                                    const DiskMesh& mesh) {
  bulk_spec.validate("bulk kernel");
  surf_spec.validate("surface kernel");
  KernelPair kp;
  kp.bulk_spec = bulk_spec;
  kp.surf_spec = surf_spec;

  const auto n = mesh.n_bulk();
  const auto& w = mesh.lumped_bulk_weights;
  kp.conv_bulk.resize(n, n);
  Vec grad_bulk = Vec::Zero(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double dx = mesh.nodes[i][0] - mesh.nodes[j][0];
      const double dy = mesh.nodes[i][1] - mesh.nodes[j][1];
      const double r2 = dx * dx + dy * dy;
      const double jv = bulk_spec.value_sq(r2);
      kp.conv_bulk(i, j) = w[j] * jv;
      grad_bulk[i] += w[j] * jv * std::sqrt(r2) / (bulk_spec.sigma * bulk_spec.sigma);
    }
  }

  const auto ns = mesh.n_surf();
  const auto& s = mesh.lumped_surf_weights;
  kp.conv_surf.resize(ns, ns);
  Vec grad_surf = Vec::Zero(ns);
  for (Eigen::Index j = 0; j < ns; ++j) {
    const auto& pj = mesh.nodes[mesh.boundary_loop[j]];
    for (Eigen::Index i = 0; i < ns; ++i) {
      const auto& pi = mesh.nodes[mesh.boundary_loop[i]];
      const double dx = pi[0] - pj[0];
      const double dy = pi[1] - pj[1];
      kp.conv_surf(i, j) = s[j] * surf_spec.value(dx, dy);
      // tangential derivative with respect to the integration point y = x_j
      const auto g = surf_spec.gradient(dx, dy);
      const auto t = mesh.tangent(j);
      grad_surf[i] += s[j] * std::abs(g[0] * t[0] + g[1] * t[1]);
    }
  }

  kp.a_omega = kp.conv_bulk * Vec::Ones(n);
  kp.a_gamma = kp.conv_surf * Vec::Ones(ns);
  kp.constants.a_lower = kp.a_omega.minCoeff();
  kp.constants.a_upper = kp.a_omega.maxCoeff();
  kp.constants.a_lower_surf = kp.a_gamma.minCoeff();
  kp.constants.a_upper_surf = kp.a_gamma.maxCoeff();
  kp.constants.b_bulk = grad_bulk.maxCoeff();
  kp.constants.b_surf = grad_surf.maxCoeff();
  kp.bulk_w11 = bulk_spec.w11_norm();
  return kp;
}

struct A1Report {
  KernelConstants constants;
  bool bulk_positive = false;
  bool surf_positive = false;
  bool pass() const { return bulk_positive && surf_positive; }
};

inline A1Report validate_A1(const KernelPair& kp, double tol = 1e-12) {
  A1Report r;
  r.constants = kp.constants;
  r.bulk_positive = kp.constants.a_lower > tol && std::isfinite(kp.constants.a_upper);
  r.surf_positive = kp.constants.a_lower_surf > tol && std::isfinite(kp.constants.a_upper_surf);
  return r;
}

/// Discrete L^p norm with lumped weights; p = infinity gives the max-abs.
inline double weighted_lp_norm(const Vec& f, const Vec& weights, double p) {
  if (std::isinf(p)) return f.size() ? f.cwiseAbs().maxCoeff() : 0.0;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < f.size(); ++i) acc += weights[i] * std::pow(std::abs(f[i]), p);
  return std::pow(acc, 1.0 / p);
}

/// Ratio ||J*phi||_{L^p(Gamma)} / (||J||_{W^{1,1}} ||phi||_{L^p(Omega)}) for one bulk field.
/// Returns NaN when phi vanishes.
inline double young_trace_ratio(const KernelPair& kp, const DiskMesh& mesh, const Vec& phi, double p) {
  const double denom = kp.bulk_w11 * weighted_lp_norm(phi, mesh.lumped_bulk_weights, p);
  if (denom == 0.0) return std::numeric_limits<double>::quiet_NaN();
  const Vec on_boundary = mesh.trace(kp.apply_bulk(phi));
  return weighted_lp_norm(on_boundary, mesh.lumped_surf_weights, p) / denom;
}

/// Max of young_trace_ratio over `trials` smooth random bulk fields (mesh-independent
/// draws, so the ratio is comparable across refinement levels).
inline double young_trace_check(const KernelPair& kp, const DiskMesh& mesh, double p, int trials,
                                unsigned seed = 7) {
  if (trials < 1) throw ConfigError("young_trace_check: trials must be >= 1");
  Rng rng(seed);
  double best = 0.0;
  for (int t = 0; t < trials; ++t) {
    const Vec phi = SmoothRandomFunction(rng).on_bulk(mesh);
    const double r = young_trace_ratio(kp, mesh, phi, p);
    if (std::isnan(r)) continue;
    best = std::max(best, r);
  }
  return best;
}

}  // namespace nlch
