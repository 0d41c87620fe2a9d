#pragma once

// P1 triangulation of the unit disk and the matching P1 discretization of its
// boundary circle. Boundary nodes of the bulk mesh are the surface nodes.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <ostream>
#include <vector>

#include "nlch/types.hpp"

namespace nlch {

struct DiskMesh {
  std::vector<std::array<double, 2>> nodes;
  std::vector<std::array<int, 3>> triangles;
  /// Node indices around the circle, counterclockwise, cyclic.
  std::vector<int> boundary_loop;
  /// Angle of each boundary-loop node.
  std::vector<double> boundary_angle;
  double h = 0.0;

  SpMat bulk_mass;
  SpMat bulk_stiffness;
  SpMat surf_mass;
  SpMat surf_stiffness;
  /// Selector: (trace_map * bulk)[j] = bulk[boundary_loop[j]].
  SpMat trace_map;

  Vec lumped_bulk_weights;
  Vec lumped_surf_weights;

  Eigen::Index n_bulk() const { return static_cast<Eigen::Index>(nodes.size()); }
  Eigen::Index n_surf() const { return static_cast<Eigen::Index>(boundary_loop.size()); }

  double bulk_measure() const { return lumped_bulk_weights.sum(); }
  double surf_measure() const { return lumped_surf_weights.sum(); }

  Vec trace(const Vec& bulk) const {
    require_size(bulk, n_bulk(), "trace");
    Vec out(n_surf());
    for (Eigen::Index j = 0; j < n_surf(); ++j) out[j] = bulk[boundary_loop[j]];
    return out;
  }

  /// Length of the boundary segment from loop node j to loop node j+1.
  double segment_length(Eigen::Index j) const {
    const auto& a = nodes[boundary_loop[j]];
    const auto& b = nodes[boundary_loop[(j + 1) % n_surf()]];
    return std::hypot(b[0] - a[0], b[1] - a[1]);
  }

  /// Unit tangent (counterclockwise) of the exact circle at loop node j.
  std::array<double, 2> tangent(Eigen::Index j) const {
    const auto& p = nodes[boundary_loop[j]];
    const double r = std::hypot(p[0], p[1]);
    return {-p[1] / r, p[0] / r};
  }

  /// Signed area and constant gradients of the three barycentric functions of triangle t.
  double element_geometry(std::size_t t, std::array<std::array<double, 2>, 3>& grads) const {
    const auto& tri = triangles[t];
    const auto& p0 = nodes[tri[0]];
    const auto& p1 = nodes[tri[1]];
    const auto& p2 = nodes[tri[2]];
    const double det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
    grads[0] = {(p1[1] - p2[1]) / det, (p2[0] - p1[0]) / det};
    grads[1] = {(p2[1] - p0[1]) / det, (p0[0] - p2[0]) / det};
    grads[2] = {(p0[1] - p1[1]) / det, (p1[0] - p0[0]) / det};
    return 0.5 * det;
  }
};

namespace detail {

inline void assemble_bulk(DiskMesh& m) {
  const auto n = m.n_bulk();
  std::vector<Triplet> kt, mt;
  kt.reserve(9 * m.triangles.size());
  mt.reserve(9 * m.triangles.size());
  std::array<std::array<double, 2>, 3> g;
  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    const double area = m.element_geometry(t, g);
    const auto& tri = m.triangles[t];
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        kt.emplace_back(tri[a], tri[b], area * (g[a][0] * g[b][0] + g[a][1] * g[b][1]));
        mt.emplace_back(tri[a], tri[b], area / 12.0 * (a == b ? 2.0 : 1.0));
      }
    }
  }
  m.bulk_stiffness.resize(n, n);
  m.bulk_stiffness.setFromTriplets(kt.begin(), kt.end());
  m.bulk_mass.resize(n, n);
  m.bulk_mass.setFromTriplets(mt.begin(), mt.end());
  m.lumped_bulk_weights = m.bulk_mass * Vec::Ones(n);
}

inline void assemble_surface(DiskMesh& m) {
  const auto ns = m.n_surf();
  std::vector<Triplet> kt, mt, tt;
  for (Eigen::Index j = 0; j < ns; ++j) {
    const Eigen::Index k = (j + 1) % ns;
    const double len = m.segment_length(j);
    kt.emplace_back(j, j, 1.0 / len);
    kt.emplace_back(k, k, 1.0 / len);
    kt.emplace_back(j, k, -1.0 / len);
    kt.emplace_back(k, j, -1.0 / len);
    mt.emplace_back(j, j, len / 3.0);
    mt.emplace_back(k, k, len / 3.0);
    mt.emplace_back(j, k, len / 6.0);
    mt.emplace_back(k, j, len / 6.0);
    tt.emplace_back(j, m.boundary_loop[j], 1.0);
  }
  m.surf_stiffness.resize(ns, ns);
  m.surf_stiffness.setFromTriplets(kt.begin(), kt.end());
  m.surf_mass.resize(ns, ns);
  m.surf_mass.setFromTriplets(mt.begin(), mt.end());
  m.trace_map.resize(ns, m.n_bulk());
  m.trace_map.setFromTriplets(tt.begin(), tt.end());
  m.lumped_surf_weights = m.surf_mass * Vec::Ones(ns);
}

}  // namespace detail

/// Concentric-ring triangulation of the unit disk. Level n has 4*2^n rings;
/// ring k carries 6k equally spaced nodes, so h halves with each level.
inline DiskMesh build_disk_mesh(int n_refine) {
  if (n_refine < 0) throw ConfigError("build_disk_mesh: refinement level must be >= 0");
  constexpr double two_pi = 2.0 * std::numbers::pi;
  const int rings = 4 << n_refine;

  DiskMesh m;
  m.nodes.push_back({0.0, 0.0});
  std::vector<std::vector<int>> ring_ids(rings + 1);
  ring_ids[0] = {0};
  for (int k = 1; k <= rings; ++k) {
    const double r = static_cast<double>(k) / rings;
    const int count = 6 * k;
    for (int j = 0; j < count; ++j) {
      const double ang = two_pi * j / count;
      ring_ids[k].push_back(static_cast<int>(m.nodes.size()));
      m.nodes.push_back({r * std::cos(ang), r * std::sin(ang)});
    }
  }

  auto add_triangle = [&m](int a, int b, int c) {
    const auto& p0 = m.nodes[a];
    const auto& p1 = m.nodes[b];
    const auto& p2 = m.nodes[c];
    const double det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
    if (det > 0) {
      m.triangles.push_back({a, b, c});
    } else {
      m.triangles.push_back({a, c, b});
    }
  };

  for (int j = 0; j < 6; ++j) add_triangle(0, ring_ids[1][j], ring_ids[1][(j + 1) % 6]);

  // Zip ring k-1 to ring k by advancing whichever side has the smaller next angle.
  for (int k = 2; k <= rings; ++k) {
    const auto& inner = ring_ids[k - 1];
    const auto& outer = ring_ids[k];
    const int a = static_cast<int>(inner.size());
    const int b = static_cast<int>(outer.size());
    int i = 0;
    int j = 0;
    while (i < a || j < b) {
      const double next_inner = static_cast<double>(i + 1) / a;
      const double next_outer = static_cast<double>(j + 1) / b;
      if (j < b && (i >= a || next_outer <= next_inner + 1e-14)) {
        add_triangle(inner[i % a], outer[j], outer[(j + 1) % b]);
        ++j;
      } else {
        add_triangle(inner[i], outer[j % b], inner[(i + 1) % a]);
        ++i;
      }
    }
  }

  m.boundary_loop = ring_ids[rings];
  for (std::size_t j = 0; j < m.boundary_loop.size(); ++j) {
    m.boundary_angle.push_back(two_pi * static_cast<double>(j) /
                               static_cast<double>(m.boundary_loop.size()));
  }

  for (const auto& tri : m.triangles) {
    for (int e = 0; e < 3; ++e) {
      const auto& p = m.nodes[tri[e]];
      const auto& q = m.nodes[tri[(e + 1) % 3]];
      m.h = std::max(m.h, std::hypot(q[0] - p[0], q[1] - p[1]));
    }
  }

  detail::assemble_bulk(m);
  detail::assemble_surface(m);
  return m;
}

namespace detail {

/// sqrt(u^T K u) written as -sum_{i<j} K_ij (u_i - u_j)^2, valid because the rows of K
/// sum to zero; exactly zero on constants.
inline double stiffness_energy(const SpMat& k, const Vec& u) {
  double acc = 0.0;
  for (int c = 0; c < k.outerSize(); ++c) {
    for (SpMat::InnerIterator it(k, c); it; ++it) {
      if (it.row() < it.col()) {
        const double d = u[it.row()] - u[it.col()];
        acc -= it.value() * d * d;
      }
    }
  }
  return std::sqrt(std::max(0.0, acc));
}

}  // namespace detail

inline double h1_seminorm_bulk(const Vec& field, const DiskMesh& mesh) {
  require_size(field, mesh.n_bulk(), "h1_seminorm_bulk");
  return detail::stiffness_energy(mesh.bulk_stiffness, field);
}

inline double h1_seminorm_surf(const Vec& field, const DiskMesh& mesh) {
  require_size(field, mesh.n_surf(), "h1_seminorm_surf");
  return detail::stiffness_energy(mesh.surf_stiffness, field);
}

/// Nodal gradient recovered by area-weighted averaging of the element gradients.
inline std::vector<std::array<double, 2>> recovered_gradient(const Vec& field, const DiskMesh& mesh) {
  require_size(field, mesh.n_bulk(), "recovered_gradient");
  std::vector<std::array<double, 2>> grad(mesh.nodes.size(), {0.0, 0.0});
  std::vector<double> weight(mesh.nodes.size(), 0.0);
  std::array<std::array<double, 2>, 3> g;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const double area = mesh.element_geometry(t, g);
    const auto& tri = mesh.triangles[t];
    double gx = 0.0, gy = 0.0;
    for (int a = 0; a < 3; ++a) {
      gx += field[tri[a]] * g[a][0];
      gy += field[tri[a]] * g[a][1];
    }
    for (int a = 0; a < 3; ++a) {
      grad[tri[a]][0] += area * gx;
      grad[tri[a]][1] += area * gy;
      weight[tri[a]] += area;
    }
  }
  for (std::size_t i = 0; i < grad.size(); ++i) {
    grad[i][0] /= weight[i];
    grad[i][1] /= weight[i];
  }
  return grad;
}

/// Plain-text dump: "node x y" and "tri a b c" records, one per line.
inline void dump_mesh(std::ostream& os, const DiskMesh& mesh) {
  os.precision(17);
  for (std::size_t i = 0; i < mesh.nodes.size(); ++i) {
    os << "node " << i << ' ' << mesh.nodes[i][0] << ' ' << mesh.nodes[i][1] << '\n';
  }
  for (const auto& t : mesh.triangles) os << "tri " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  for (std::size_t j = 0; j < mesh.boundary_loop.size(); ++j) {
    os << "bnd " << j << ' ' << mesh.boundary_loop[j] << '\n';
  }
}

}  // namespace nlch
