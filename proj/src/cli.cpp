#include "holang/cli.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "holang/simulate.hpp"

namespace holang::cli {

namespace {

using checks::json;

void write_csv_header(std::ostream& out, const model::RunConfig& cfg) {
  out << "# holang simulate\n";
  out << "# config_hash=" << model::hash_hex(model::config_hash(cfg)) << " seed=" << cfg.seed
      << " a=" << cfg.slicing.a << " K=" << cfg.K << "\n# sigma=[";
  for (std::size_t i = 0; i < cfg.sigma.sigmas.size(); ++i) {
    if (i) out << ",";
    out << cfg.sigma.sigmas[i];
  }
  out << "] N=" << cfg.process.order << " epsilon=" << cfg.grid.epsilon << " M=" << cfg.grid.M
      << "\n";
  out << "observable,t,tprime,value,stderr\n";
}

void write_row(std::ostream& out, const simulate::CorrelationEstimate& e) {
  char buf[200];
  std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g,%.17g,%.17g\n", e.label.c_str(), e.t,
                e.tprime, e.value, e.stderr_);
  out << buf;
}

}  // namespace

int cmd_simulate(const model::RunConfig& cfg, std::ostream& out) {
  const model::FirstOrderSystem system =
      cfg.process.has_const_coeffs()
          ? model::reduce_to_first_order(cfg.process, cfg.sigma)
          : model::first_order_state_friction(cfg.process,
                                              cfg.sigma.sigmas.empty() ? 0.0 : cfg.sigma.sigmas[0]);
  simulate::RunOptions ropts;
  ropts.burn_in = cfg.burn_in >= 0 ? cfg.burn_in : simulate::default_burn_in(system, cfg.grid);
  ropts.record_noise = false;
  std::vector<double> x0(static_cast<std::size_t>(system.dimension), 0.0);
  const simulate::Ensemble ens =
      simulate::run_ensemble(system, cfg.grid, cfg.slicing.a, cfg.K, cfg.seed, x0, ropts);

  write_csv_header(out, cfg);
  // Stationary second moment over the trailing half of the window, plus two
  // lagged products.
  const int i0 = cfg.grid.M / 2;
  write_row(out, simulate::stationary_second_moment(ens, 0, i0));
  for (int lag : {cfg.grid.M / 8, cfg.grid.M / 4}) {
    if (lag >= 1 && i0 + lag <= cfg.grid.M) {
      write_row(out, simulate::stationary_lagged_product(ens, 0, lag, i0));
    }
  }
  return kExitPass;
}

namespace {

json results_to_json(const std::vector<checks::CheckResult>& results) {
  json arr = json::array();
  for (const auto& r : results) {
    arr.push_back({{"name", r.name}, {"pass", r.pass}, {"details", r.details}});
  }
  return arr;
}

}  // namespace

int cmd_check(const std::string& which, const checks::SuiteOptions& opts,
              const std::optional<model::RunConfig>& cfg, double inject_ar1,
              bool boundary_demo, std::ostream& out) {
  std::vector<checks::CheckResult> results;
  if (which == "whiteness") {
    results = checks::check_whiteness(opts, inject_ar1);
  } else if (which == "det") {
    results = checks::check_determinant(opts, boundary_demo);
  } else if (which == "susy") {
    results = checks::check_susy(opts);
  } else if (which == "ward") {
    results = checks::check_ward(opts);
  } else if (which == "ashift") {
    results = checks::check_ashift(opts);
  } else if (which == "equivalence") {
    results = checks::check_equivalence(opts);
  } else {
    throw model::ConfigError("unknown check '" + which +
                             "' (expected susy, det, ward, whiteness, equivalence, ashift)");
  }
  json rep;
  rep["command"] = "check";
  rep["which"] = which;
  rep["seed"] = opts.seed;
  rep["quick"] = opts.quick;
  if (cfg) rep["config_hash"] = model::hash_hex(model::config_hash(*cfg));
  rep["checks"] = results_to_json(results);
  const bool pass = checks::all_pass(results);
  rep["pass"] = pass;
  out << rep.dump(2) << "\n";
  return pass ? kExitPass : kExitCheckFailed;
}

int cmd_report(const checks::SuiteOptions& opts, std::ostream& json_out,
               std::ostream& line_out) {
  const auto criteria = checks::run_acceptance(opts);
  json rep;
  rep["command"] = "report";
  rep["seed"] = opts.seed;
  rep["quick"] = opts.quick;
  json arr = json::array();
  bool pass = true;
  for (const auto& c : criteria) {
    line_out << "criterion " << c.index << ": " << (c.pass ? "PASS" : "FAIL") << " - "
             << c.description << "\n";
    arr.push_back({{"index", c.index}, {"description", c.description}, {"pass", c.pass},
                   {"checks", c.details}});
    if (!c.pass) pass = false;
  }
  rep["criteria"] = arr;
  rep["pass"] = pass;
  json_out << rep.dump(2) << "\n";
  return pass ? kExitPass : kExitCheckFailed;
}

int run(int argc, char** argv) {
  CLI::App app{"higher-order Langevin simulation and verification"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_path;
  std::uint64_t seed = 0;
  bool have_seed = false;
  bool quick = false;

  app.add_option("--config", config_path, "JSON run configuration");
  app.add_option("--out", out_path, "output path (default: stdout)");
  app.add_option("--seed", seed, "master seed override")->each([&](const std::string&) {
    have_seed = true;
  });
  app.add_flag("--quick", quick, "reduced ensembles, looser statistical threshold");

  auto* sim = app.add_subcommand("simulate", "run an ensemble, write correlation CSV");
  std::string which;
  double inject_ar1 = 0.0;
  bool boundary_demo = false;
  auto* chk = app.add_subcommand("check", "run one verification suite, write JSON");
  chk->add_option("--which", which, "susy|det|ward|whiteness|equivalence|ashift")->required();
  chk->add_option("--inject-ar1", inject_ar1,
                  "test hook: replace the combined noise by an AR(1) sequence");
  chk->add_flag("--boundary-demo", boundary_demo,
                "include the naive second-order boundary-row demonstration");
  auto* rpt = app.add_subcommand("report", "run the full acceptance suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return kExitUsage;
  }

  try {
    std::optional<model::RunConfig> cfg;
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw model::ConfigError("cannot open config file '" + config_path + "'");
      std::stringstream ss;
      ss << in.rdbuf();
      cfg = model::parse_config(ss.str());
    }
    checks::SuiteOptions opts;
    opts.quick = quick;
    if (cfg) opts.seed = cfg->seed;
    if (have_seed) opts.seed = seed;

    std::ofstream file_out;
    std::ostream* out = &std::cout;
    if (!out_path.empty()) {
      file_out.open(out_path);
      if (!file_out) throw model::ConfigError("cannot open output path '" + out_path + "'");
      out = &file_out;
    }

    if (sim->parsed()) {
      if (!cfg) throw model::ConfigError("simulate requires --config");
      if (have_seed) cfg->seed = seed;
      return cmd_simulate(*cfg, *out);
    }
    if (chk->parsed()) {
      return cmd_check(which, opts, cfg, inject_ar1, boundary_demo, *out);
    }
    if (rpt->parsed()) {
      return cmd_report(opts, *out, std::cerr);
    }
    return kExitUsage;
  } catch (const model::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitCheckFailed;
  }
}

}  // namespace holang::cli
