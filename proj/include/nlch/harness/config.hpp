#pragma once

// Run configuration as key = value text.
//
// Schema (every key optional; defaults describe the deep-quench reference run):
//   mesh.level               int      refinement level, 0..3
//   kernel.bulk.sigma        real     Gaussian length scale of J
//   kernel.bulk.mass         real     integral of J over R^2
//   kernel.surf.sigma        real     Gaussian length scale of K (chordal distance)
//   kernel.surf.mass         real     integral of K over R^2
//   potential.theta          real     Theta
//   potential.theta0         real     Theta_0
//   coupling.L               real     kinetic coefficient L >= 0
//   scheme.dt                real
//   scheme.t_end             real
//   scheme.mode              singular | yosida
//   scheme.epsilon           real     Yosida parameter (yosida mode)
//   scheme.newton_tol        real
//   scheme.newton_max_iter   int
//   scheme.safeguard_margin  real
//   ic.kind                  constant | random | smooth | tanh | two_bubble
//   ic.mean, ic.amplitude, ic.width, ic.radius, ic.delta   real
//   experiment               simulate | dissipative | l-limit | cont-dep | equilibrium | yosida-sweep | steady
//   output.dir               path
//   output.stride            int      CSV row stride
//   output.snapshot_every    int      snapshot stride in steps (0: first and last only)
//   seed                     int
//   l_limit.L_list           comma-separated positive reals, decreasing
//   yosida.eps_list          comma-separated positive reals, decreasing
//   cont_dep.perturbation    real     size of the equal-mean perturbation
//   equilibrium.threshold    real     terminal L^inf distance to the steady state
//   equilibrium.tau          real     offset of the smoothing ratio
//   dissipative.plateau_tol  real     relative plateau agreement of two initial data
//
// Lines starting with '#' and blank lines are ignored. Unknown and repeated
// keys are errors.

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "nlch/evolve.hpp"
#include "nlch/initial.hpp"
#include "nlch/nonlocal.hpp"
#include "nlch/potentials.hpp"
#include "nlch/types.hpp"

namespace nlch::harness {

inline const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"simulate",    "dissipative",  "l-limit", "cont-dep",
                                              "equilibrium", "yosida-sweep", "steady"};
  return names;
}

struct RunConfig {
  int mesh_level = 2;
  KernelSpec bulk_kernel{0.2, 2.0};
  KernelSpec surf_kernel{0.2, 0.5};
  LogPotential potential{0.5, 1.0};
  double L = 1.0;
  SchemeConfig scheme{};
  ICSpec ic{};
  std::string experiment = "simulate";
  std::string output_dir = "out";
  int output_stride = 1;
  int snapshot_every = 0;
  unsigned long long seed = 42;
  std::vector<double> l_list{1e-1, 3e-2, 1e-2, 3e-3, 1e-3};
  std::vector<double> eps_list{4e-2, 2e-2, 1e-2};
  double perturbation = 1e-4;
  double equilibrium_threshold = 1e-3;
  double equilibrium_tau = 1.0;
  double plateau_tol = 0.05;

  RunConfig() {
    scheme.dt = 1e-3;
    scheme.t_end = 2.0;
  }

  bool operator==(const RunConfig&) const = default;

  void validate() const {
    if (mesh_level < 0 || mesh_level > 3) throw ConfigError("mesh.level must lie in 0..3");
    bulk_kernel.validate("kernel.bulk");
    surf_kernel.validate("kernel.surf");
    potential.validate();
    if (!(L >= 0.0) || !std::isfinite(L)) throw ConfigError("coupling.L must be a finite value >= 0");
    scheme.validate();
    ic.validate();
    bool known = false;
    for (const auto& n : experiment_names()) known = known || n == experiment;
    if (!known) throw ConfigError("experiment: unknown value '" + experiment + "'");
    if (output_stride < 1) throw ConfigError("output.stride must be >= 1");
    if (snapshot_every < 0) throw ConfigError("output.snapshot_every must be >= 0");
    auto check_list = [](const std::vector<double>& v, const char* key) {
      if (v.empty()) throw ConfigError(std::string(key) + " must not be empty");
      for (std::size_t k = 0; k < v.size(); ++k) {
        if (!(v[k] > 0.0)) throw ConfigError(std::string(key) + " entries must be positive");
        if (k > 0 && !(v[k] < v[k - 1])) throw ConfigError(std::string(key) + " must be strictly decreasing");
      }
    };
    check_list(l_list, "l_limit.L_list");
    check_list(eps_list, "yosida.eps_list");
    if (!(perturbation > 0.0)) throw ConfigError("cont_dep.perturbation must be positive");
    if (!(equilibrium_threshold > 0.0)) throw ConfigError("equilibrium.threshold must be positive");
    if (!(equilibrium_tau > 0.0)) throw ConfigError("equilibrium.tau must be positive");
    if (!(plateau_tol > 0.0)) throw ConfigError("dissipative.plateau_tol must be positive");
  }
};

namespace detail {

inline std::string fmt_real(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_real(const std::string& key, const std::string& v) {
  double x = 0.0;
  const auto* end = v.data() + v.size();
  const auto [p, ec] = std::from_chars(v.data(), end, x);
  if (ec != std::errc() || p != end || !std::isfinite(x)) {
    throw ConfigError(key + ": expected a real number, got '" + v + "'");
  }
  return x;
}

template <class Int>
Int parse_int(const std::string& key, const std::string& v) {
  Int x{};
  const auto* end = v.data() + v.size();
  const auto [p, ec] = std::from_chars(v.data(), end, x);
  if (ec != std::errc() || p != end) throw ConfigError(key + ": expected an integer, got '" + v + "'");
  return x;
}

inline std::vector<double> parse_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_real(key, trim(item)));
  return out;
}

inline std::string fmt_list(const std::vector<double>& v) {
  std::string s;
  for (std::size_t k = 0; k < v.size(); ++k) s += (k ? "," : "") + fmt_real(v[k]);
  return s;
}

struct Binding {
  std::string key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

inline Binding real_key(std::string key, double RunConfig::*outer) {
  return {key, [outer](const RunConfig& c) { return fmt_real(c.*outer); },
          [outer, key](RunConfig& c, const std::string& v) { c.*outer = parse_real(key, v); }};
}

template <class Sub>
Binding real_key(std::string key, Sub RunConfig::*outer, double Sub::*inner) {
  return {key, [outer, inner](const RunConfig& c) { return fmt_real(c.*outer.*inner); },
          [outer, inner, key](RunConfig& c, const std::string& v) { c.*outer.*inner = parse_real(key, v); }};
}

inline const std::vector<Binding>& bindings() {
  static const std::vector<Binding> b = [] {
    std::vector<Binding> v;
    v.push_back({"mesh.level", [](const RunConfig& c) { return std::to_string(c.mesh_level); },
                 [](RunConfig& c, const std::string& s) { c.mesh_level = parse_int<int>("mesh.level", s); }});
    v.push_back(real_key("kernel.bulk.sigma", &RunConfig::bulk_kernel, &KernelSpec::sigma));
    v.push_back(real_key("kernel.bulk.mass", &RunConfig::bulk_kernel, &KernelSpec::mass));
    v.push_back(real_key("kernel.surf.sigma", &RunConfig::surf_kernel, &KernelSpec::sigma));
    v.push_back(real_key("kernel.surf.mass", &RunConfig::surf_kernel, &KernelSpec::mass));
    v.push_back(real_key("potential.theta", &RunConfig::potential, &LogPotential::theta));
    v.push_back(real_key("potential.theta0", &RunConfig::potential, &LogPotential::theta0));
    v.push_back(real_key("coupling.L", &RunConfig::L));
    v.push_back(real_key("scheme.dt", &RunConfig::scheme, &SchemeConfig::dt));
    v.push_back(real_key("scheme.t_end", &RunConfig::scheme, &SchemeConfig::t_end));
    v.push_back({"scheme.mode",
                 [](const RunConfig& c) { return std::string(c.scheme.mode == SchemeMode::yosida ? "yosida" : "singular"); },
                 [](RunConfig& c, const std::string& s) {
                   if (s == "singular") {
                     c.scheme.mode = SchemeMode::singular;
                   } else if (s == "yosida") {
                     c.scheme.mode = SchemeMode::yosida;
                   } else {
                     throw ConfigError("scheme.mode: expected singular or yosida, got '" + s + "'");
                   }
                 }});
    v.push_back(real_key("scheme.epsilon", &RunConfig::scheme, &SchemeConfig::epsilon));
    v.push_back(real_key("scheme.newton_tol", &RunConfig::scheme, &SchemeConfig::newton_tol));
    v.push_back({"scheme.newton_max_iter", [](const RunConfig& c) { return std::to_string(c.scheme.newton_max_iter); },
                 [](RunConfig& c, const std::string& s) {
                   c.scheme.newton_max_iter = parse_int<int>("scheme.newton_max_iter", s);
                 }});
    v.push_back(real_key("scheme.safeguard_margin", &RunConfig::scheme, &SchemeConfig::safeguard_margin));
    v.push_back({"ic.kind", [](const RunConfig& c) { return to_string(c.ic.kind); },
                 [](RunConfig& c, const std::string& s) { c.ic.kind = ic_kind_from_string(s); }});
    v.push_back(real_key("ic.mean", &RunConfig::ic, &ICSpec::mean));
    v.push_back(real_key("ic.amplitude", &RunConfig::ic, &ICSpec::amplitude));
    v.push_back(real_key("ic.width", &RunConfig::ic, &ICSpec::width));
    v.push_back(real_key("ic.radius", &RunConfig::ic, &ICSpec::radius));
    v.push_back(real_key("ic.delta", &RunConfig::ic, &ICSpec::delta));
    v.push_back({"experiment", [](const RunConfig& c) { return c.experiment; },
                 [](RunConfig& c, const std::string& s) { c.experiment = s; }});
    v.push_back({"output.dir", [](const RunConfig& c) { return c.output_dir; },
                 [](RunConfig& c, const std::string& s) {
                   if (s.empty()) throw ConfigError("output.dir must not be empty");
                   c.output_dir = s;
                 }});
    v.push_back({"output.stride", [](const RunConfig& c) { return std::to_string(c.output_stride); },
                 [](RunConfig& c, const std::string& s) { c.output_stride = parse_int<int>("output.stride", s); }});
    v.push_back({"output.snapshot_every", [](const RunConfig& c) { return std::to_string(c.snapshot_every); },
                 [](RunConfig& c, const std::string& s) {
                   c.snapshot_every = parse_int<int>("output.snapshot_every", s);
                 }});
    v.push_back({"seed", [](const RunConfig& c) { return std::to_string(c.seed); },
                 [](RunConfig& c, const std::string& s) { c.seed = parse_int<unsigned long long>("seed", s); }});
    v.push_back({"l_limit.L_list", [](const RunConfig& c) { return fmt_list(c.l_list); },
                 [](RunConfig& c, const std::string& s) { c.l_list = parse_list("l_limit.L_list", s); }});
    v.push_back({"yosida.eps_list", [](const RunConfig& c) { return fmt_list(c.eps_list); },
                 [](RunConfig& c, const std::string& s) { c.eps_list = parse_list("yosida.eps_list", s); }});
    v.push_back(real_key("cont_dep.perturbation", &RunConfig::perturbation));
    v.push_back(real_key("equilibrium.threshold", &RunConfig::equilibrium_threshold));
    v.push_back(real_key("equilibrium.tau", &RunConfig::equilibrium_tau));
    v.push_back(real_key("dissipative.plateau_tol", &RunConfig::plateau_tol));
    return v;
  }();
  return b;
}

}  // namespace detail

/// Parses key = value text on top of the defaults and validates the result.
inline RunConfig parse_config_text(const std::string& text) {
  RunConfig cfg;
  std::vector<std::string> seen;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = detail::trim(t.substr(0, eq));
    const std::string value = detail::trim(t.substr(eq + 1));
    const detail::Binding* b = nullptr;
    for (const auto& cand : detail::bindings()) {
      if (cand.key == key) b = &cand;
    }
    if (!b) throw ConfigError("unknown key '" + key + "' (line " + std::to_string(lineno) + ")");
    for (const auto& s : seen) {
      if (s == key) throw ConfigError("repeated key '" + key + "' (line " + std::to_string(lineno) + ")");
    }
    seen.push_back(key);
    b->set(cfg, value);
  }
  cfg.validate();
  return cfg;
}

inline RunConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

/// Every key with its resolved value, in schema order.
inline std::string emit_config(const RunConfig& cfg) {
  std::string out;
  for (const auto& b : detail::bindings()) out += b.key + " = " + b.get(cfg) + "\n";
  return out;
}

/// Hard gate run before any experiment: kernel positivity, the potential
/// assumptions and, in yosida mode, epsilon < epsilon_*. Throws ConfigError
/// naming the first failed clause.
inline AssumptionReport assumption_gate(const RunConfig& cfg, const KernelPair& kp) {
  const A1Report a1 = validate_A1(kp);
  if (!a1.pass()) {
    throw ConfigError("A1: kernel constants not positive (a_*=" + detail::fmt_real(kp.constants.a_lower) +
                      ", a_surf*=" + detail::fmt_real(kp.constants.a_lower_surf) + ")");
  }
  AssumptionReport rep = validate_assumptions(cfg.potential, kp);
  if (const auto* f = rep.first_failure()) throw ConfigError(f->name + ": " + f->detail);
  auto check_eps = [&](double eps) {
    if (!(eps > 0.0 && eps < rep.epsilon_star)) {
      throw ConfigError("epsilon_*: Yosida parameter " + detail::fmt_real(eps) + " not in (0, " +
                        detail::fmt_real(rep.epsilon_star) + ")");
    }
  };
  if (cfg.scheme.mode == SchemeMode::yosida) check_eps(cfg.scheme.epsilon);
  if (cfg.experiment == "yosida-sweep") {
    for (double e : cfg.eps_list) check_eps(e);
  }
  return rep;
}

}  // namespace nlch::harness
