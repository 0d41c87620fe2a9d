#pragma once

// Bulk-surface function-space toolkit: generalized mean, projection, the
// bilinear form a_L, the mean-constrained elliptic solve and the dual norms.

#include <cmath>
#include <optional>
#include <string>

#include <Eigen/SparseLU>

#include "nlch/mesh.hpp"
#include "nlch/random_fields.hpp"
#include "nlch/types.hpp"

namespace nlch {

/// Kinetic coefficient L >= 0 and chi(L) = 1/L (L > 0) or 0 (L = 0).
class CouplingParam {
 public:
  CouplingParam() = default;
  explicit CouplingParam(double L) : L_(L) {
    if (!(L >= 0.0) || !std::isfinite(L)) throw ConfigError("coupling.L must be a finite value >= 0");
  }
  double L() const { return L_; }
  double chi() const { return L_ > 0.0 ? 1.0 / L_ : 0.0; }
  /// L = 0: bulk trace and surface value are identified.
  bool identified() const { return L_ == 0.0; }

 private:
  double L_ = 1.0;
};

inline double generalized_mean(const BulkSurfaceField& f, const DiskMesh& mesh) {
  require_size(f.bulk, mesh.n_bulk(), "generalized_mean bulk");
  require_size(f.surf, mesh.n_surf(), "generalized_mean surf");
  const double num = mesh.lumped_bulk_weights.dot(f.bulk) + mesh.lumped_surf_weights.dot(f.surf);
  return num / (mesh.bulk_measure() + mesh.surf_measure());
}

/// The projection P: subtract the generalized mean from both components.
inline BulkSurfaceField project(const BulkSurfaceField& f, const DiskMesh& mesh) {
  const double m = generalized_mean(f, mesh);
  return {(f.bulk.array() - m).matrix(), (f.surf.array() - m).matrix()};
}

/// Lumped L^2 inner product over Omega x Gamma.
inline double l2_inner(const BulkSurfaceField& u, const BulkSurfaceField& v, const DiskMesh& mesh) {
  return (mesh.lumped_bulk_weights.array() * u.bulk.array() * v.bulk.array()).sum() +
         (mesh.lumped_surf_weights.array() * u.surf.array() * v.surf.array()).sum();
}

inline double l2_norm(const BulkSurfaceField& u, const DiskMesh& mesh) {
  return std::sqrt(std::max(0.0, l2_inner(u, u, mesh)));
}

inline void require_trace_compatible(const BulkSurfaceField& u, const DiskMesh& mesh, const char* what) {
  const Vec tr = mesh.trace(u.bulk);
  const double scale = std::max(1.0, u.linf());
  if ((tr - u.surf).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw DimensionError(std::string(what) + ": L = 0 requires surface values equal to the bulk trace");
  }
}

inline double aL_form(const BulkSurfaceField& u, const BulkSurfaceField& v, const CouplingParam& c,
                      const DiskMesh& mesh) {
  require_size(u.bulk, mesh.n_bulk(), "aL_form u.bulk");
  require_size(v.bulk, mesh.n_bulk(), "aL_form v.bulk");
  require_size(u.surf, mesh.n_surf(), "aL_form u.surf");
  require_size(v.surf, mesh.n_surf(), "aL_form v.surf");
  if (c.identified()) {
    require_trace_compatible(u, mesh, "aL_form");
    require_trace_compatible(v, mesh, "aL_form");
  }
  double val = u.bulk.dot(mesh.bulk_stiffness * v.bulk) + u.surf.dot(mesh.surf_stiffness * v.surf);
  if (c.chi() > 0.0) {
    const Vec ju = mesh.trace(u.bulk) - u.surf;
    const Vec jv = mesh.trace(v.bulk) - v.surf;
    val += c.chi() * (mesh.lumped_surf_weights.array() * ju.array() * jv.array()).sum();
  }
  return val;
}

/// ||u||_{H^1_{L,0}} = a_L(u, u)^{1/2}.
inline double h1_L_norm(const BulkSurfaceField& u, const CouplingParam& c, const DiskMesh& mesh) {
  return std::sqrt(std::max(0.0, aL_form(u, u, c, mesh)));
}

/// Degree-of-freedom layout for the chemical potential. For L > 0 the unknowns
/// are all bulk nodes followed by all surface nodes; for L = 0 they are the bulk
/// nodes only and the surface value is the trace. `expand` maps unknowns to a
/// BulkSurfaceField and `assemble_weighted` applies the transpose of that map
/// after multiplication by the lumped weights.
class CoupledSpace {
 public:
  CoupledSpace(const DiskMesh& mesh, CouplingParam coupling) : mesh_(&mesh), coupling_(coupling) {
    const auto n = mesh.n_bulk();
    const auto ns = mesh.n_surf();
    if (coupling_.identified()) {
      stiffness_ = mesh.bulk_stiffness +
                   SpMat(mesh.trace_map.transpose() * mesh.surf_stiffness * mesh.trace_map);
    } else {
      const double chi = coupling_.chi();
      std::vector<Triplet> trip;
      auto add_block = [&trip](const SpMat& m, Eigen::Index r0, Eigen::Index c0, double scale) {
        for (int k = 0; k < m.outerSize(); ++k) {
          for (SpMat::InnerIterator it(m, k); it; ++it) {
            trip.emplace_back(r0 + it.row(), c0 + it.col(), scale * it.value());
          }
        }
      };
      add_block(mesh.bulk_stiffness, 0, 0, 1.0);
      add_block(mesh.surf_stiffness, n, n, 1.0);
      for (Eigen::Index j = 0; j < ns; ++j) {
        const Eigen::Index b = mesh.boundary_loop[j];
        const double sj = chi * mesh.lumped_surf_weights[j];
        trip.emplace_back(b, b, sj);
        trip.emplace_back(n + j, n + j, sj);
        trip.emplace_back(b, n + j, -sj);
        trip.emplace_back(n + j, b, -sj);
      }
      stiffness_.resize(n + ns, n + ns);
      stiffness_.setFromTriplets(trip.begin(), trip.end());
    }
    stiffness_.makeCompressed();
    weights_ = assemble_weighted(BulkSurfaceField::constant(n, ns, 1.0));
  }

  const DiskMesh& mesh() const { return *mesh_; }
  const CouplingParam& coupling() const { return coupling_; }
  Eigen::Index size() const {
    return coupling_.identified() ? mesh_->n_bulk() : mesh_->n_bulk() + mesh_->n_surf();
  }
  /// Matrix of a_L restricted to the unknowns.
  const SpMat& stiffness() const { return stiffness_; }
  /// Row sums of the lumped mass in unknown space.
  const Vec& weights() const { return weights_; }

  BulkSurfaceField expand(const Vec& x) const {
    require_size(x, size(), "CoupledSpace::expand");
    const auto n = mesh_->n_bulk();
    if (coupling_.identified()) return {x, mesh_->trace(x)};
    return {x.head(n), x.tail(mesh_->n_surf())};
  }

  /// Unknown vector of a field. For L = 0 the surface component is dropped.
  Vec restrict(const BulkSurfaceField& f) const {
    if (coupling_.identified()) return f.bulk;
    Vec x(size());
    x << f.bulk, f.surf;
    return x;
  }

  /// Transpose of `expand` applied to (W_bulk f.bulk, W_surf f.surf).
  Vec assemble_weighted(const BulkSurfaceField& f) const {
    const auto n = mesh_->n_bulk();
    Vec wb = mesh_->lumped_bulk_weights.cwiseProduct(f.bulk);
    Vec ws = mesh_->lumped_surf_weights.cwiseProduct(f.surf);
    if (coupling_.identified()) {
      for (Eigen::Index j = 0; j < ws.size(); ++j) wb[mesh_->boundary_loop[j]] += ws[j];
      return wb;
    }
    Vec x(n + ws.size());
    x << wb, ws;
    return x;
  }

 private:
  const DiskMesh* mesh_;
  CouplingParam coupling_;
  SpMat stiffness_;
  Vec weights_;
};

/// Solution operator of the bulk-surface elliptic problem with zero generalized
/// mean, realised as [A m; m^T 0][u; lambda] = [W y; 0].
class EllipticSolver {
 public:
  EllipticSolver(const DiskMesh& mesh, CouplingParam coupling) : space_(mesh, coupling) {
    const auto n = space_.size();
    std::vector<Triplet> trip;
    const SpMat& a = space_.stiffness();
    for (int k = 0; k < a.outerSize(); ++k) {
      for (SpMat::InnerIterator it(a, k); it; ++it) trip.emplace_back(it.row(), it.col(), it.value());
    }
    const double scale = 1.0 / (mesh.bulk_measure() + mesh.surf_measure());
    for (Eigen::Index i = 0; i < n; ++i) {
      trip.emplace_back(i, n, space_.weights()[i] * scale);
      trip.emplace_back(n, i, space_.weights()[i] * scale);
    }
    SpMat saddle(n + 1, n + 1);
    saddle.setFromTriplets(trip.begin(), trip.end());
    saddle.makeCompressed();
    lu_.analyzePattern(saddle);
    lu_.factorize(saddle);
    if (lu_.info() != Eigen::Success) throw SolverError("EllipticSolver: singular saddle-point matrix");
  }

  const CoupledSpace& space() const { return space_; }
  const CouplingParam& coupling() const { return space_.coupling(); }
  const DiskMesh& mesh() const { return space_.mesh(); }

  /// u = S^L y for y with zero generalized mean.
  BulkSurfaceField solve(const BulkSurfaceField& y, double mean_tol = 1e-10) const {
    const double m = generalized_mean(y, mesh());
    if (std::abs(m) > mean_tol * std::max(1.0, y.linf())) {
      throw SolverError("solve_SL: right-hand side must have zero generalized mean (got " +
                        std::to_string(m) + ")");
    }
    const auto n = space_.size();
    Vec rhs(n + 1);
    rhs.head(n) = space_.assemble_weighted(y);
    rhs[n] = 0.0;
    const Vec sol = lu_.solve(rhs);
    if (lu_.info() != Eigen::Success) throw SolverError("solve_SL: back-substitution failed");
    return space_.expand(sol.head(n));
  }

  /// Largest observed ratio ||y||_{L^2} / ||y||_{H^1_{L,0}} over `trials` smooth
  /// random mean-zero fields. Each draw is sharpened by a few applications of the
  /// solution operator, which can only increase the Rayleigh quotient.
  double poincare_estimate(int trials = 20, unsigned seed = 11, int sharpen = 8) const {
    Rng rng(seed);
    double best = 0.0;
    for (int t = 0; t < trials; ++t) {
      SmoothRandomFunction g(rng);
      BulkSurfaceField y = project(space_.expand(space_.restrict({g.on_bulk(mesh()), g.on_surf(mesh())})), mesh());
      for (int k = 0; k < sharpen; ++k) {
        y = project(solve(y, 1e-8), mesh());
        y *= 1.0 / l2_norm(y, mesh());
      }
      const double ratio = l2_norm(y, mesh()) / h1_L_norm(y, coupling(), mesh());
      best = std::max(best, ratio);
    }
    return best;
  }

 private:
  CoupledSpace space_;
  Eigen::SparseLU<SpMat> lu_;
};

inline BulkSurfaceField solve_SL(const BulkSurfaceField& y, const EllipticSolver& solver) {
  return solver.solve(y);
}

/// ||y||_{L,0,*} for mean-zero y, ||y||_{L,*} in general.
inline double dual_norm(const BulkSurfaceField& y, const EllipticSolver& solver) {
  const auto& mesh = solver.mesh();
  const double m = generalized_mean(y, mesh);
  const BulkSurfaceField py = project(y, mesh);
  const BulkSurfaceField u = solver.solve(py, 1e-8);
  const double sq = std::max(0.0, l2_inner(py, u, mesh));
  return std::sqrt(sq + m * m);
}

/// ||y||_{L,0,*} computed as a_L(S y, S y)^{1/2}; y must have zero mean.
inline double dual_norm_zero_mean(const BulkSurfaceField& y, const EllipticSolver& solver) {
  const BulkSurfaceField u = solver.solve(y);
  return h1_L_norm(u, solver.coupling(), solver.mesh());
}

}  // namespace nlch
