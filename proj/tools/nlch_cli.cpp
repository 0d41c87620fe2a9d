// Command-line front end. Exit codes: 0 pass, 1 property failure,
// 2 config/validation error, 3 solver error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "nlch/nlch.hpp"

namespace fs = std::filesystem;
using namespace nlch;
using namespace nlch::harness;

namespace {

enum Exit { kPass = 0, kPropertyFailure = 1, kConfigError = 2, kSolverError = 3 };

struct Options {
  std::string config;
  std::string out;
  unsigned long long seed = 0;
  bool seed_set = false;
  bool unsafe = false;
  std::string dump_mesh;
};

/// Ordered key = value report echoed to stdout and written to report.txt.
class Report {
 public:
  void add(const std::string& key, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    lines_.emplace_back(key, buf);
  }
  void add(const std::string& key, const std::string& v) { lines_.emplace_back(key, v); }
  void add_bool(const std::string& key, bool v) { lines_.emplace_back(key, v ? "true" : "false"); }
  std::string str() const {
    std::string s;
    for (const auto& [k, v] : lines_) s += k + " = " + v + "\n";
    return s;
  }

 private:
  std::vector<std::pair<std::string, std::string>> lines_;
};

std::string csv_of(const std::vector<Diagnostics>& d, int stride) {
  std::ostringstream os;
  emit_diagnostics(os, d, stride);
  return os.str();
}

std::string snapshot_text(double t, const BulkSurfaceField& phi, const BulkSurfaceField& mu, const DiskMesh& mesh,
                          bool steady) {
  std::ostringstream os;
  write_snapshot(os, t, phi, mu, mesh, steady);
  return os.str();
}

void write_snapshots(const fs::path& dir, const Trajectory& tr, const DiskMesh& mesh) {
  for (std::size_t k = 0; k < tr.snapshots.size(); ++k) {
    char name[64];
    std::snprintf(name, sizeof name, "snapshot_%05zu.txt", k);
    const auto& s = tr.snapshots[k];
    write_file((dir / name).string(), snapshot_text(s.t, s.phi, s.mu, mesh, false));
  }
}

BulkSurfaceField constant_mu(const SteadyState& ss) {
  BulkSurfaceField mu = ss.phi_inf;
  mu.bulk.setConstant(ss.mu_inf);
  mu.surf.setConstant(ss.mu_inf);
  return mu;
}

void add_assumptions(Report& r, const AssumptionReport& rep, const KernelPair& kp) {
  const auto& c = kp.constants;
  r.add("a_lower", c.a_lower);
  r.add("a_upper", c.a_upper);
  r.add("a_lower_surf", c.a_lower_surf);
  r.add("a_upper_surf", c.a_upper_surf);
  r.add("b_bulk", c.b_bulk);
  r.add("b_surf", c.b_surf);
  r.add("J_W11", kp.bulk_w11);
  for (const auto& cl : rep.clauses) r.add("clause." + cl.name, std::string(cl.pass ? "pass " : "FAIL ") + cl.detail);
  r.add("c_star", rep.c_star);
  r.add("epsilon_star", rep.epsilon_star);
}

int execute(const std::string& command, const Options& opt) {
  RunConfig cfg = opt.config.empty() ? RunConfig{} : parse_config(opt.config);
  if (command != "validate") cfg.experiment = command;
  if (!opt.out.empty()) cfg.output_dir = opt.out;
  if (opt.seed_set) cfg.seed = opt.seed;
  cfg.validate();

  const Lab lab(cfg);
  if (!opt.dump_mesh.empty()) {
    std::ofstream os(opt.dump_mesh);
    if (!os) throw ConfigError("cannot write mesh dump '" + opt.dump_mesh + "'");
    dump_mesh(os, lab.mesh);
  }

  Report r;
  if (command == "validate") {
    const AssumptionReport rep = validate_assumptions(cfg.potential, lab.kp);
    add_assumptions(r, rep, lab.kp);
    std::cout << r.str();
    assumption_gate(cfg, lab.kp);
    std::cout << "PASS validate\n";
    return kPass;
  }
  if (!opt.unsafe) {
    add_assumptions(r, assumption_gate(cfg, lab.kp), lab.kp);
  }

  const fs::path dir(cfg.output_dir);
  fs::create_directories(dir);
  write_file((dir / "config.resolved").string(), emit_config(cfg));

  bool pass = true;
  if (command == "simulate") {
    const SimulateReport rep = exp_simulate(lab, lab.initial());
    write_file((dir / "diagnostics.csv").string(), csv_of(rep.trajectory.diagnostics, cfg.output_stride));
    write_snapshots(dir, rep.trajectory, lab.mesh);
    r.add("max_mass_drift", rep.max_mass_drift);
    r.add("max_energy_increase", rep.max_energy_increase);
    for (const auto& s : rep.separation) r.add("delta(" + std::to_string(static_cast<int>(s.tau)) + ")", s.delta);
    pass = rep.pass;
  } else if (command == "dissipative") {
    const DissipativeReport rep = exp_dissipative(lab);
    r.add("omega", rep.fit.omega);
    r.add("A", rep.fit.A);
    r.add("plateau", rep.fit.B);
    r.add("r2", rep.fit.r2);
    r.add("E0", rep.e0);
    r.add("omega_second", rep.fit_second.omega);
    r.add("plateau_second", rep.fit_second.B);
    r.add("r2_second", rep.fit_second.r2);
    r.add("plateau_rel_diff", rep.plateau_rel_diff);
    r.add_bool("degenerate", !rep.decaying);
    pass = rep.pass;
  } else if (command == "l-limit") {
    const LLimitReport rep = exp_l_limit(lab, cfg.l_list);
    std::string csv = "L,e_L,f_L\n";
    char buf[128];
    for (std::size_t k = 0; k < rep.L.size(); ++k) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", rep.L[k], rep.e[k], rep.f[k]);
      csv += buf;
    }
    write_file((dir / "l_limit.csv").string(), csv);
    r.add("slope_e", rep.slope_e);
    r.add("slope_f", rep.slope_f);
    r.add_bool("monotone_e", rep.monotone_e);
    r.add_bool("monotone_f", rep.monotone_f);
    pass = rep.pass;
  } else if (command == "cont-dep") {
    const ContDepReport rep = exp_continuous_dependence(lab, cfg.perturbation);
    r.add("identical_max_diff", rep.identical_max_diff);
    r.add("initial_dual_norm", rep.initial_dual);
    r.add("gronwall_constant", rep.gronwall_constant);
    r.add("sup_ratio", rep.sup_ratio);
    r.add("c_star", rep.c_star);
    r.add("contraction_constant", rep.contraction_constant);
    r.add("holder_spread", rep.holder_spread);
    std::string csv = "gap,ratio\n";
    char buf[96];
    for (std::size_t k = 0; k < rep.holder_gaps.size(); ++k) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", rep.holder_gaps[k], rep.holder_ratios[k]);
      csv += buf;
    }
    write_file((dir / "holder.csv").string(), csv);
    pass = rep.pass;
  } else if (command == "equilibrium") {
    const EquilibriumReport rep = exp_equilibrium(lab);
    write_file((dir / "diagnostics.csv").string(), csv_of(rep.trajectory.diagnostics, cfg.output_stride));
    write_file((dir / "steady.txt").string(),
               snapshot_text(rep.trajectory.final_state.t, rep.steady.phi_inf, constant_mu(rep.steady), lab.mesh, true));
    std::string csv = "t,linf,l2\n";
    char buf[96];
    for (const auto& d : rep.distances) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", d.t, d.linf, d.l2);
      csv += buf;
    }
    write_file((dir / "distances.csv").string(), csv);
    r.add("steady_residual", rep.steady.residual);
    r.add("mu_inf", rep.steady.mu_inf);
    r.add("steady_sep_gap", rep.steady.sep_gap);
    r.add("terminal_linf", rep.terminal_linf);
    r.add("terminal_l2", rep.terminal_l2);
    r.add_bool("tail_decreasing", rep.tail_decreasing);
    r.add("mass_defect", rep.mass_defect);
    r.add("fixed_point_defect", rep.fixed_point_defect);
    r.add("averaging_defect", rep.averaging_defect);
    r.add("ls_status", rep.ls.message);
    r.add("ls_gamma", rep.ls.gamma);
    r.add("ls_C", rep.ls.C);
    r.add("smoothing_ratio", rep.smoothing ? std::to_string(*rep.smoothing) : std::string("at steady state"));
    r.add("gradient_discrepancy", rep.gradient.max_discrepancy);
    r.add("gradient_linf", rep.gradient.linf_formula);
    r.add("gradient_min_denominator", rep.gradient.min_denominator);
    for (const auto& s : rep.separation) r.add("delta(" + std::to_string(static_cast<int>(s.tau)) + ")", s.delta);
    r.add("status", rep.converged ? "converged" : "inconclusive");
    // a finite run cannot falsify convergence; only structural defects fail
    pass = rep.consistent;
  } else if (command == "yosida-sweep") {
    const YosidaSweepReport rep = exp_yosida_sweep(lab, cfg.eps_list);
    std::string csv = "epsilon,distance\n";
    char buf[96];
    for (std::size_t k = 0; k < rep.eps.size(); ++k) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", rep.eps[k], rep.distance[k]);
      csv += buf;
    }
    write_file((dir / "yosida.csv").string(), csv);
    r.add("epsilon_star", rep.epsilon_star);
    r.add_bool("monotone", rep.monotone);
    pass = rep.pass;
  } else if (command == "steady") {
    const SteadyReport rep = exp_steady(lab);
    write_file((dir / "diagnostics.csv").string(), csv_of(rep.trajectory.diagnostics, cfg.output_stride));
    write_file((dir / "steady.txt").string(),
               snapshot_text(rep.trajectory.final_state.t, rep.steady.phi_inf, constant_mu(rep.steady), lab.mesh, true));
    r.add("steady_residual", rep.steady.residual);
    r.add("mu_inf", rep.steady.mu_inf);
    r.add("sep_gap", rep.steady.sep_gap);
    r.add("newton_iters", std::to_string(rep.steady.newton_iters));
    r.add("mass_defect", rep.mass_defect);
    r.add("fixed_point_defect", rep.fixed_point_defect);
    pass = rep.pass;
  }
  r.add("result", pass ? "PASS" : "FAIL");
  write_file((dir / "report.txt").string(), r.str());
  std::cout << r.str();
  return pass ? kPass : kPropertyFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nonlocal Cahn-Hilliard lab with dynamic boundary conditions"};
  app.require_subcommand(1, 1);
  Options opt;
  const std::vector<std::pair<std::string, std::string>> commands{
      {"simulate", "run one trajectory and write diagnostics and snapshots"},
      {"dissipative", "fit the exponential energy decay for two equal-mass initial data"},
      {"l-limit", "sweep the kinetic coefficient L towards 0"},
      {"cont-dep", "continuous dependence, contraction and Hoelder checks"},
      {"equilibrium", "long run followed by a steady-state solve"},
      {"yosida-sweep", "compare Yosida trajectories with the singular one"},
      {"validate", "check the assumption gate for a config"},
      {"steady", "evolve and continue the terminal state into a steady state"}};
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", opt.config, "key = value config file");
    sub->add_option("--out", opt.out, "output directory (overrides output.dir)");
    sub->add_option_function<unsigned long long>(
        "--seed", [&opt](unsigned long long s) { opt.seed = s, opt.seed_set = true; }, "random seed (overrides seed)");
    sub->add_flag("--unsafe-skip-validation", opt.unsafe, "run even if the assumption gate fails");
    sub->add_option("--dump-mesh", opt.dump_mesh, "write the mesh as node/tri/bnd records to this file");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  try {
    return execute(command, opt);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const DimensionError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "solver error: " << e.what() << '\n';
    return kSolverError;
  }
}
