#pragma once

// Initial phase fields. Every generator returns phi = mean + amplitude * p(x)
// with a profile p in [-1, 1], surface values equal to the bulk trace, and the
// result clipped to [-1 + delta, 1 - delta].

#include <cmath>
#include <string>

#include "nlch/mesh.hpp"
#include "nlch/random_fields.hpp"
#include "nlch/spaces.hpp"
#include "nlch/types.hpp"

namespace nlch {

enum class ICKind { constant, random, smooth, tanh, two_bubble };

inline std::string to_string(ICKind k) {
  switch (k) {
    case ICKind::constant: return "constant";
    case ICKind::random: return "random";
    case ICKind::smooth: return "smooth";
    case ICKind::tanh: return "tanh";
    case ICKind::two_bubble: return "two_bubble";
  }
  return "?";
}

inline ICKind ic_kind_from_string(const std::string& s) {
  if (s == "constant") return ICKind::constant;
  if (s == "random") return ICKind::random;
  if (s == "smooth") return ICKind::smooth;
  if (s == "tanh") return ICKind::tanh;
  if (s == "two_bubble") return ICKind::two_bubble;
  throw ConfigError("ic.kind: unknown value '" + s + "' (expected constant, random, smooth, tanh or two_bubble)");
}

struct ICSpec {
  ICKind kind = ICKind::random;
  double mean = 0.0;
  double amplitude = 0.1;
  /// Interface width of the tanh profiles.
  double width = 0.1;
  /// Radius of the disc (tanh) or of each bubble (two_bubble).
  double radius = 0.5;
  /// Clipping margin: |phi0| <= 1 - delta.
  double delta = 1e-3;

  bool operator==(const ICSpec&) const = default;

  void validate() const {
    if (!(std::abs(mean) < 1.0)) throw ConfigError("ic.mean must lie in (-1, 1)");
    if (!(amplitude >= 0.0)) throw ConfigError("ic.amplitude must be >= 0");
    if (!(width > 0.0)) throw ConfigError("ic.width must be positive");
    if (!(radius > 0.0)) throw ConfigError("ic.radius must be positive");
    if (!(delta > 0.0 && delta < 0.5)) throw ConfigError("ic.delta must lie in (0, 0.5)");
  }
};

/// Uniform nodal noise smoothed by one application of the consistent mass
/// matrix divided by the lumped weights, then projected to zero generalized mean.
inline BulkSurfaceField smoothed_noise(const DiskMesh& mesh, Rng& rng) {
  const Vec raw = random_nodal(mesh.n_bulk(), rng);
  const Vec smooth = (mesh.bulk_mass * raw).cwiseQuotient(mesh.lumped_bulk_weights);
  return project(BulkSurfaceField{smooth, mesh.trace(smooth)}, mesh);
}

inline BulkSurfaceField clip(BulkSurfaceField f, double delta) {
  const double hi = 1.0 - delta;
  f.bulk = f.bulk.cwiseMax(-hi).cwiseMin(hi);
  f.surf = f.surf.cwiseMax(-hi).cwiseMin(hi);
  return f;
}

inline BulkSurfaceField make_initial(const ICSpec& spec, const DiskMesh& mesh, unsigned long long seed) {
  spec.validate();
  const auto nb = mesh.n_bulk();
  Vec p = Vec::Zero(nb);
  switch (spec.kind) {
    case ICKind::constant:
      break;
    case ICKind::random: {
      Rng rng(seed);
      const BulkSurfaceField n = smoothed_noise(mesh, rng);
      const double scale = n.linf();
      p = scale > 0.0 ? Vec(n.bulk / scale) : n.bulk;
      break;
    }
    case ICKind::smooth: {
      // a few low-frequency plane waves: resolved on every mesh level
      Rng rng(seed);
      const Vec g = SmoothRandomFunction(rng, 6, 3.0).on_bulk(mesh);
      const BulkSurfaceField n = project(BulkSurfaceField{g, mesh.trace(g)}, mesh);
      const double scale = n.linf();
      p = scale > 0.0 ? Vec(n.bulk / scale) : n.bulk;
      break;
    }
    case ICKind::tanh:
      for (Eigen::Index i = 0; i < nb; ++i) {
        const double r = std::hypot(mesh.nodes[i][0], mesh.nodes[i][1]);
        p[i] = std::tanh((spec.radius - r) / spec.width);
      }
      break;
    case ICKind::two_bubble:
      // bubbles centred at (+-0.45, 0); p = -1 outside both
      for (Eigen::Index i = 0; i < nb; ++i) {
        double v = -1.0;
        for (double cx : {-0.45, 0.45}) {
          const double d = std::hypot(mesh.nodes[i][0] - cx, mesh.nodes[i][1]);
          v += 1.0 + std::tanh((spec.radius - d) / spec.width);
        }
        p[i] = std::min(1.0, v);
      }
      break;
  }
  Vec bulk = (spec.mean + spec.amplitude * p.array()).matrix();
  BulkSurfaceField f{bulk, mesh.trace(bulk)};
  return clip(std::move(f), spec.delta);
}

}  // namespace nlch
