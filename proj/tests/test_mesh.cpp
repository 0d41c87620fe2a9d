#include <cmath>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "nlch/mesh.hpp"
#include "nlch/random_fields.hpp"

using namespace nlch;

namespace {

constexpr double kPi = std::numbers::pi;

// Element-by-element Dirichlet energy, computed without the assembled matrix.
double element_loop_energy(const DiskMesh& m, const Vec& u) {
  double acc = 0.0;
  for (const auto& tri : m.triangles) {
    const auto& a = m.nodes[tri[0]];
    const auto& b = m.nodes[tri[1]];
    const auto& c = m.nodes[tri[2]];
    // solve for the constant gradient g from u(b)-u(a) = g.(b-a), u(c)-u(a) = g.(c-a)
    const double e1x = b[0] - a[0], e1y = b[1] - a[1];
    const double e2x = c[0] - a[0], e2y = c[1] - a[1];
    const double det = e1x * e2y - e2x * e1y;
    const double d1 = u[tri[1]] - u[tri[0]];
    const double d2 = u[tri[2]] - u[tri[0]];
    const double gx = (d1 * e2y - d2 * e1y) / det;
    const double gy = (e1x * d2 - e2x * d1) / det;
    acc += 0.5 * std::abs(det) * (gx * gx + gy * gy);
  }
  return acc;
}

double edge_loop_energy(const DiskMesh& m, const Vec& u) {
  double acc = 0.0;
  const auto ns = m.n_surf();
  for (Eigen::Index j = 0; j < ns; ++j) {
    const auto& p = m.nodes[m.boundary_loop[j]];
    const auto& q = m.nodes[m.boundary_loop[(j + 1) % ns]];
    const double len = std::hypot(q[0] - p[0], q[1] - p[1]);
    const double d = u[(j + 1) % ns] - u[j];
    acc += d * d / len;
  }
  return acc;
}

// Degree-5 (7-point) rule on the reference triangle.
double l2_interpolation_error(const DiskMesh& m, double (*f)(double, double)) {
  static const double w[7] = {0.225,
                              0.132394152788506, 0.132394152788506, 0.132394152788506,
                              0.125939180544827, 0.125939180544827, 0.125939180544827};
  static const double l1[7] = {1.0 / 3, 0.059715871789770, 0.470142064105115, 0.470142064105115,
                               0.797426985353087, 0.101286507323456, 0.101286507323456};
  static const double l2[7] = {1.0 / 3, 0.470142064105115, 0.059715871789770, 0.470142064105115,
                               0.101286507323456, 0.797426985353087, 0.101286507323456};
  double acc = 0.0;
  for (const auto& tri : m.triangles) {
    const auto& a = m.nodes[tri[0]];
    const auto& b = m.nodes[tri[1]];
    const auto& c = m.nodes[tri[2]];
    const double area =
        0.5 * std::abs((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]));
    const double fa = f(a[0], a[1]), fb = f(b[0], b[1]), fc = f(c[0], c[1]);
    for (int q = 0; q < 7; ++q) {
      const double l3 = 1.0 - l1[q] - l2[q];
      const double x = l1[q] * a[0] + l2[q] * b[0] + l3 * c[0];
      const double y = l1[q] * a[1] + l2[q] * b[1] + l3 * c[1];
      const double e = f(x, y) - (l1[q] * fa + l2[q] * fb + l3 * fc);
      acc += w[q] * area * e * e;
    }
  }
  return std::sqrt(acc);
}

double smooth_fn(double x, double y) { return std::exp(x) * std::sin(2.0 * y); }

}  // namespace

TEST(Mesh, CoarseAreaWithinFivePercent) {
  const auto m = build_disk_mesh(0);
  EXPECT_NEAR(m.lumped_bulk_weights.sum(), kPi, 0.05 * kPi);
  EXPECT_NEAR(m.lumped_surf_weights.sum(), 2.0 * kPi, 0.05 * 2.0 * kPi);
}

TEST(Mesh, AreaErrorIsSecondOrder) {
  double c_fit = 0.0;
  for (int lvl = 1; lvl <= 2; ++lvl) {
    const auto m = build_disk_mesh(lvl);
    c_fit = std::max(c_fit, std::abs(m.bulk_measure() - kPi) / (m.h * m.h));
  }
  const auto m3 = build_disk_mesh(3);
  // 5% slack absorbs the O(h^4) remainder not captured by the fitted constant
  EXPECT_LE(std::abs(m3.bulk_measure() - kPi), 1.05 * c_fit * m3.h * m3.h);
  EXPECT_LE(std::abs(m3.surf_measure() - 2.0 * kPi), 4.0 * c_fit * m3.h * m3.h);
}

TEST(Mesh, MeshSizeHalvesPerLevel) {
  double prev = build_disk_mesh(0).h;
  for (int lvl = 1; lvl <= 3; ++lvl) {
    const double h = build_disk_mesh(lvl).h;
    EXPECT_NEAR(h / prev, 0.5, 0.1) << "level " << lvl;
    prev = h;
  }
}

TEST(Mesh, StiffnessAnnihilatesConstants) {
  for (int lvl = 0; lvl <= 3; ++lvl) {
    const auto m = build_disk_mesh(lvl);
    EXPECT_LE((m.bulk_stiffness * Vec::Ones(m.n_bulk())).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((m.surf_stiffness * Vec::Ones(m.n_surf())).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Mesh, BoundaryLoopIsSingleClosedCycle) {
  const auto m = build_disk_mesh(2);
  std::map<std::pair<int, int>, int> edge_count;
  for (const auto& t : m.triangles) {
    for (int e = 0; e < 3; ++e) {
      int a = t[e], b = t[(e + 1) % 3];
      if (a > b) std::swap(a, b);
      ++edge_count[{a, b}];
    }
  }
  std::set<std::pair<int, int>> boundary_edges;
  std::set<int> boundary_nodes;
  for (const auto& [e, c] : edge_count) {
    ASSERT_LE(c, 2);
    if (c == 1) {
      boundary_edges.insert(e);
      boundary_nodes.insert(e.first);
      boundary_nodes.insert(e.second);
    }
  }
  const std::set<int> loop_nodes(m.boundary_loop.begin(), m.boundary_loop.end());
  EXPECT_EQ(loop_nodes.size(), m.boundary_loop.size());
  EXPECT_EQ(loop_nodes, boundary_nodes);
  EXPECT_EQ(boundary_edges.size(), m.boundary_loop.size());
  for (std::size_t j = 0; j < m.boundary_loop.size(); ++j) {
    int a = m.boundary_loop[j], b = m.boundary_loop[(j + 1) % m.boundary_loop.size()];
    if (a > b) std::swap(a, b);
    EXPECT_TRUE(boundary_edges.count({a, b})) << "loop step " << j << " is not a boundary edge";
  }
}

TEST(Mesh, TrianglesArePositivelyOriented) {
  const auto m = build_disk_mesh(2);
  std::array<std::array<double, 2>, 3> g;
  for (std::size_t t = 0; t < m.triangles.size(); ++t) EXPECT_GT(m.element_geometry(t, g), 0.0);
}

TEST(Mesh, MassSymmetricPositiveStiffnessSemidefinite) {
  const auto m = build_disk_mesh(1);
  EXPECT_LE((Mat(m.bulk_mass) - Mat(m.bulk_mass).transpose()).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LE((Mat(m.surf_mass) - Mat(m.surf_mass).transpose()).cwiseAbs().maxCoeff(), 1e-15);
  Rng rng(3);
  for (int k = 0; k < 50; ++k) {
    const Vec u = random_nodal(m.n_bulk(), rng);
    const Vec v = random_nodal(m.n_surf(), rng);
    EXPECT_GT(u.dot(m.bulk_mass * u), 0.0);
    EXPECT_GE(u.dot(m.bulk_stiffness * u), 0.0);
    EXPECT_GT(v.dot(m.surf_mass * v), 0.0);
    EXPECT_GE(v.dot(m.surf_stiffness * v), 0.0);
  }
  EXPECT_GT(m.lumped_bulk_weights.minCoeff(), 0.0);
  EXPECT_GT(m.lumped_surf_weights.minCoeff(), 0.0);
}

TEST(Mesh, TraceOfOnesIsOnes) {
  const auto m = build_disk_mesh(1);
  EXPECT_EQ(m.trace(Vec::Ones(m.n_bulk())), Vec::Ones(m.n_surf()));
  EXPECT_EQ(Vec(m.trace_map * Vec::Ones(m.n_bulk())), Vec::Ones(m.n_surf()));
}

TEST(Mesh, H1SeminormBulk) {
  double prev_err = 0.0;
  for (int lvl = 0; lvl <= 3; ++lvl) {
    const auto m = build_disk_mesh(lvl);
    EXPECT_EQ(h1_seminorm_bulk(Vec::Constant(m.n_bulk(), 2.5), m), 0.0);
    Vec x(m.n_bulk());
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = m.nodes[i][0];
    const double err = std::abs(h1_seminorm_bulk(x, m) - std::sqrt(kPi));
    EXPECT_LE(err, 0.1);
    if (lvl > 0) {
      EXPECT_NEAR(prev_err / err, 4.0, 0.8);
    }
    prev_err = err;
  }
}

TEST(Mesh, H1SeminormBulkMatchesElementQuadrature) {
  const auto m = build_disk_mesh(2);
  Rng rng(5);
  for (int k = 0; k < 5; ++k) {
    const Vec u = random_nodal(m.n_bulk(), rng);
    const double oracle = std::sqrt(element_loop_energy(m, u));
    EXPECT_NEAR(h1_seminorm_bulk(u, m), oracle, 1e-12 * oracle);
  }
}

TEST(Mesh, H1SeminormSurf) {
  double prev_err = 0.0;
  for (int lvl = 0; lvl <= 3; ++lvl) {
    const auto m = build_disk_mesh(lvl);
    EXPECT_NEAR(h1_seminorm_surf(Vec::Constant(m.n_surf(), -1.0), m), 0.0, 1e-12);
    Vec s(m.n_surf());
    for (Eigen::Index j = 0; j < s.size(); ++j) s[j] = std::sin(m.boundary_angle[j]);
    const double err = std::abs(h1_seminorm_surf(s, m) - std::sqrt(kPi));
    if (lvl > 0) {
      EXPECT_NEAR(prev_err / err, 4.0, 0.8);
    }
    prev_err = err;
  }
}

TEST(Mesh, H1SeminormSurfMatchesEdgeQuadrature) {
  const auto m = build_disk_mesh(2);
  Rng rng(9);
  for (int k = 0; k < 5; ++k) {
    const Vec u = random_nodal(m.n_surf(), rng);
    const double oracle = std::sqrt(edge_loop_energy(m, u));
    EXPECT_NEAR(h1_seminorm_surf(u, m), oracle, 1e-12 * oracle);
  }
}

TEST(Mesh, DimensionMismatchThrows) {
  const auto m = build_disk_mesh(0);
  EXPECT_THROW(h1_seminorm_bulk(Vec::Zero(3), m), DimensionError);
  EXPECT_THROW(h1_seminorm_surf(Vec::Zero(m.n_bulk()), m), DimensionError);
  EXPECT_THROW(build_disk_mesh(-1), ConfigError);
}

TEST(Mesh, InterpolationErrorIsSecondOrder) {
  std::vector<double> hs, errs;
  for (int lvl = 1; lvl <= 3; ++lvl) {
    const auto m = build_disk_mesh(lvl);
    hs.push_back(m.h);
    errs.push_back(l2_interpolation_error(m, smooth_fn));
  }
  for (std::size_t k = 1; k < hs.size(); ++k) {
    const double slope = std::log(errs[k - 1] / errs[k]) / std::log(hs[k - 1] / hs[k]);
    EXPECT_GE(slope, 1.8);
    EXPECT_LE(slope, 2.2);
  }
}

TEST(Mesh, DumpHasOneRecordPerLine) {
  const auto m = build_disk_mesh(0);
  std::ostringstream os;
  dump_mesh(os, m);
  std::istringstream is(os.str());
  std::string line;
  std::size_t nodes = 0, tris = 0;
  while (std::getline(is, line)) {
    if (line.rfind("node ", 0) == 0) ++nodes;
    if (line.rfind("tri ", 0) == 0) ++tris;
  }
  EXPECT_EQ(nodes, m.nodes.size());
  EXPECT_EQ(tris, m.triangles.size());
}
