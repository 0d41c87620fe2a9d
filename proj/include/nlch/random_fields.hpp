#pragma once

#include <cmath>
#include <numbers>
#include <random>

#include "nlch/mesh.hpp"
#include "nlch/types.hpp"

namespace nlch {

using Rng = std::mt19937_64;

/// Nodewise independent uniform values on [lo, hi].
inline Vec random_nodal(Eigen::Index n, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> uni(lo, hi);
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = uni(rng);
  return v;
}

/// Mesh-independent smooth random function sampled at points: a sum of `modes`
/// plane waves with wavenumber at most `max_freq` and coefficients in [-1, 1].
class SmoothRandomFunction {
 public:
  SmoothRandomFunction(Rng& rng, int modes = 6, double max_freq = 4.0) {
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    std::uniform_real_distribution<double> ang(0.0, 2.0 * std::numbers::pi);
    std::uniform_real_distribution<double> freq(0.5, max_freq);
    for (int k = 0; k < modes; ++k) {
      const double a = ang(rng);
      const double f = freq(rng);
      waves_.push_back({uni(rng), f * std::cos(a), f * std::sin(a), ang(rng)});
    }
  }

  double operator()(double x, double y) const {
    double v = 0.0;
    for (const auto& w : waves_) v += w[0] * std::cos(w[1] * x + w[2] * y + w[3]);
    return v;
  }

  Vec on_bulk(const DiskMesh& mesh) const {
    Vec v(mesh.n_bulk());
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = (*this)(mesh.nodes[i][0], mesh.nodes[i][1]);
    return v;
  }
  Vec on_surf(const DiskMesh& mesh) const { return mesh.trace(on_bulk(mesh)); }

 private:
  std::vector<std::array<double, 4>> waves_;
};

}  // namespace nlch
