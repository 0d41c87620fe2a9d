#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace nlch {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A singular potential was evaluated outside its domain. Carries the offending argument.
class DomainError : public Error {
 public:
  DomainError(const std::string& what, double arg) : Error(what), arg_(arg) {}
  double argument() const { return arg_; }

 private:
  double arg_;
};

/// Linear or nonlinear solver failure.
class SolverError : public Error {
 public:
  explicit SolverError(const std::string& what, std::vector<double> history = {})
      : Error(what), history_(std::move(history)) {}
  /// Residual norms of the iterates leading up to the failure (may be empty).
  const std::vector<double>& history() const { return history_; }

 private:
  std::vector<double> history_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

inline void require_size(const Vec& v, Eigen::Index n, const char* what) {
  if (v.size() != n) {
    throw DimensionError(std::string(what) + ": expected length " + std::to_string(n) +
                         ", got " + std::to_string(v.size()));
  }
}

/// A pair of nodal vectors: one over the bulk nodes, one over the boundary loop.
struct BulkSurfaceField {
  Vec bulk;
  Vec surf;

  BulkSurfaceField() = default;
  BulkSurfaceField(Vec b, Vec s) : bulk(std::move(b)), surf(std::move(s)) {}

  static BulkSurfaceField zeros(Eigen::Index nb, Eigen::Index ns) {
    return {Vec::Zero(nb), Vec::Zero(ns)};
  }
  static BulkSurfaceField constant(Eigen::Index nb, Eigen::Index ns, double c) {
    return {Vec::Constant(nb, c), Vec::Constant(ns, c)};
  }

  BulkSurfaceField& operator+=(const BulkSurfaceField& o) {
    bulk += o.bulk;
    surf += o.surf;
    return *this;
  }
  BulkSurfaceField& operator-=(const BulkSurfaceField& o) {
    bulk -= o.bulk;
    surf -= o.surf;
    return *this;
  }
  BulkSurfaceField& operator*=(double c) {
    bulk *= c;
    surf *= c;
    return *this;
  }
  friend BulkSurfaceField operator+(BulkSurfaceField a, const BulkSurfaceField& b) { return a += b; }
  friend BulkSurfaceField operator-(BulkSurfaceField a, const BulkSurfaceField& b) { return a -= b; }
  friend BulkSurfaceField operator*(double c, BulkSurfaceField a) { return a *= c; }

  /// Max-abs over both components.
  double linf() const {
    double m = 0.0;
    if (bulk.size() > 0) m = bulk.cwiseAbs().maxCoeff();
    if (surf.size() > 0) m = std::max(m, surf.cwiseAbs().maxCoeff());
    return m;
  }

  bool operator==(const BulkSurfaceField& o) const {
    return bulk.size() == o.bulk.size() && surf.size() == o.surf.size() && bulk == o.bulk &&
           surf == o.surf;
  }
};

}  // namespace nlch
