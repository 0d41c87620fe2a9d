#pragma once

// Diagnostics CSV and snapshot text files. Reals are written with %.17g so
// that files are exact and byte-reproducible.

#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "nlch/evolve.hpp"
#include "nlch/mesh.hpp"
#include "nlch/types.hpp"

namespace nlch::harness {

inline constexpr const char* kDiagnosticsHeader = "t,mean,energy,dissipation,sep_gap,linf_phi,newton_iters,eq_residual";

inline std::string format_row(const Diagnostics& d) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d,%.17g", d.t, d.mean, d.energy,
                d.dissipation, d.sep_gap, d.linf_phi, d.newton_iters, d.eq_residual);
  return buf;
}

/// Header plus every `stride`-th row; the last row is always written.
inline void emit_diagnostics(std::ostream& os, const std::vector<Diagnostics>& rows, int stride = 1) {
  if (stride < 1) throw ConfigError("emit_diagnostics: stride must be >= 1");
  os << kDiagnosticsHeader << '\n';
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (k % static_cast<std::size_t>(stride) == 0 || k + 1 == rows.size()) os << format_row(rows[k]) << '\n';
  }
}

/// Header "# t=<t> n_bulk=<n> n_surf=<m> steady=<bool>", then "x y phi mu" per
/// bulk node and "angle psi theta" per surface node.
inline void write_snapshot(std::ostream& os, double t, const BulkSurfaceField& phi, const BulkSurfaceField& mu,
                           const DiskMesh& mesh, bool steady) {
  require_size(phi.bulk, mesh.n_bulk(), "write_snapshot phi.bulk");
  require_size(phi.surf, mesh.n_surf(), "write_snapshot phi.surf");
  require_size(mu.bulk, mesh.n_bulk(), "write_snapshot mu.bulk");
  require_size(mu.surf, mesh.n_surf(), "write_snapshot mu.surf");
  char buf[256];
  std::snprintf(buf, sizeof buf, "# t=%.17g n_bulk=%lld n_surf=%lld steady=%s\n", t,
                static_cast<long long>(mesh.n_bulk()), static_cast<long long>(mesh.n_surf()),
                steady ? "true" : "false");
  os << buf;
  for (Eigen::Index i = 0; i < mesh.n_bulk(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g %.17g\n", mesh.nodes[i][0], mesh.nodes[i][1], phi.bulk[i],
                  mu.bulk[i]);
    os << buf;
  }
  for (Eigen::Index j = 0; j < mesh.n_surf(); ++j) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g\n", mesh.boundary_angle[j], phi.surf[j], mu.surf[j]);
    os << buf;
  }
}

struct SnapshotFile {
  double t = 0.0;
  bool steady = false;
  BulkSurfaceField phi;
  BulkSurfaceField mu;
};

inline SnapshotFile read_snapshot(std::istream& is) {
  SnapshotFile s;
  std::string header;
  if (!std::getline(is, header)) throw ConfigError("snapshot: missing header");
  long long nb = 0, ns = 0;
  char steady[8] = {0};
  if (std::sscanf(header.c_str(), "# t=%lg n_bulk=%lld n_surf=%lld steady=%7s", &s.t, &nb, &ns, steady) != 4 ||
      nb < 0 || ns < 0) {
    throw ConfigError("snapshot: malformed header '" + header + "'");
  }
  s.steady = std::string(steady) == "true";
  s.phi = BulkSurfaceField::zeros(nb, ns);
  s.mu = BulkSurfaceField::zeros(nb, ns);
  double x = 0.0, y = 0.0;
  for (long long i = 0; i < nb; ++i) {
    if (!(is >> x >> y >> s.phi.bulk[i] >> s.mu.bulk[i])) throw ConfigError("snapshot: truncated bulk block");
  }
  for (long long j = 0; j < ns; ++j) {
    if (!(is >> x >> s.phi.surf[j] >> s.mu.surf[j])) throw ConfigError("snapshot: truncated surface block");
  }
  return s;
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << content;
}

}  // namespace nlch::harness
