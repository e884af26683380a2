#include <cstdio>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "hsq/expcli.hpp"
#include "hsq/measures.hpp"
#include "json.hpp"

using namespace hsq;
using nlohmann::json;

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> partitions;
  std::string out;
  bool deterministic = false;
  std::optional<int> n_traj;
  std::optional<double> dt;
  std::optional<int> threads;
};

void add_common(CLI::App* app, CommonFlags& f) {
  app->add_option("--config", f.config, "flat key = value configuration file")->check(CLI::ExistingFile);
  app->add_option("--seed", f.seed, "master seed");
  app->add_option("--partition", f.partitions, "partition name (lw, adjacent, distant or one defined in the config)");
  app->add_option("--out", f.out, "output directory");
  app->add_flag("--deterministic", f.deterministic, "single-threaded, byte-reproducible output");
  app->add_option("--n-traj", f.n_traj, "number of trajectories")->check(CLI::PositiveNumber);
  app->add_option("--dt", f.dt, "time step")->check(CLI::PositiveNumber);
  app->add_option("--threads", f.threads, "worker threads")->check(CLI::PositiveNumber);
}

ExperimentConfig make_config(const CommonFlags& f) {
  ExperimentConfig cfg = ExperimentConfig::defaults();
  if (!f.config.empty()) cfg.load(f.config);
  if (f.seed) cfg.set("seed", std::to_string(*f.seed));
  if (!f.partitions.empty()) cfg.select_partitions(f.partitions);
  if (!f.out.empty()) cfg.out_dir = f.out;
  if (f.deterministic) cfg.deterministic = true;
  if (f.n_traj) cfg.protocol.n_traj = *f.n_traj;
  if (f.dt) cfg.protocol.dt = *f.dt;
  if (f.threads) cfg.threads = *f.threads;
  cfg.validate();
  return cfg;
}

int cmd_table1(bool as_json) {
  const auto rows = run_table1();
  bool ok = true;
  for (const auto& r : rows) ok = ok && r.match;
  if (as_json) {
    std::cout << json{{"rows", to_json(rows)}, {"pass", ok}}.dump(2) << '\n';
  } else {
    std::printf("%-6s %2s %12s %12s %9s  %s\n", "family", "n", "I(A;C|B)", "closed form", "printed", "match");
    for (const auto& r : rows) {
      auto cell = [](double x) {
        char b[32];
        if (std::isnan(x)) return std::string("-");
        std::snprintf(b, sizeof b, "%.6f", x);
        return std::string(b);
      };
      std::printf("%-6s %2d %12.6f %12s %9s  %s\n", r.family.c_str(), r.n, r.value, cell(r.closed_form).c_str(),
                  cell(r.expected).c_str(), r.match ? "yes" : "NO");
    }
  }
  return ok ? 0 : 2;
}

int cmd_quench(const CommonFlags& f) {
  const ExperimentConfig cfg = make_config(f);
  const QuenchResult res = run_quench(cfg);
  write_quench(res, cfg);
  std::cerr << "wrote " << res.series.size() << " series to " << cfg.out_dir.string() << '\n';
  for (const auto& [name, v] : res.summary["checks"].items()) {
    std::cerr << "  " << name << ": " << (v["pass"].get<bool>() ? "pass" : "fail") << '\n';
  }
  for (const auto& finding : res.summary["findings"]) std::cerr << "  finding: " << finding.get<std::string>() << '\n';
  return 0;
}

int cmd_properties(const CommonFlags& f, int samples) {
  const ExperimentConfig cfg = make_config(f);
  const auto verdicts = run_properties(cfg.protocol.seed, samples, cfg.squash);
  const json report = to_json(verdicts);
  std::cout << report.dump(2) << '\n';
  return report["pass"].get<bool>() ? 0 : 2;
}

int cmd_bounds(const CommonFlags& f, const std::string& state_file, const std::string& spec, const std::string& measure) {
  ExperimentConfig cfg = ExperimentConfig::defaults();
  if (!f.config.empty()) cfg.load(f.config);
  if (f.seed) cfg.set("seed", std::to_string(*f.seed));
  if (f.threads) cfg.squash.threads = *f.threads;
  const DensityOp rho = read_state_file(state_file);
  const RegionPartition part = RegionPartition::parse(spec, rho.n_qubits());
  BoundReport r;
  if (measure == "tsq") {
    r = tsq_upper(rho, part, cfg.squash);
  } else if (measure == "nsq") {
    r = nsq_upper(rho, part, cfg.squash);
  } else if (measure == "esq") {
    r = esq_upper(rho, part, cfg.squash);
  } else {
    r = coqcmi(rho, part, cfg.squash);
  }
  json out = to_json(r);
  out["measure"] = measure;
  out["half_qcmi"] = 0.5 * qcmi(rho, part).value;
  std::cout << out.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Squashed-entanglement measures and the dephased Ising quench"};
  app.require_subcommand(1);

  bool table_json = false;
  auto* table = app.add_subcommand("table1", "GHZ and W conditional mutual information for n = 3..8");
  table->add_flag("--json", table_json, "print JSON");

  CommonFlags qf;
  auto* quench = app.add_subcommand("quench", "run the quench experiment and write CSV series");
  add_common(quench, qf);

  CommonFlags pf;
  int samples = 20;
  auto* props = app.add_subcommand("properties", "randomized checks of the measure and bound invariants");
  add_common(props, pf);
  props->add_option("--samples", samples, "samples per suite")->check(CLI::PositiveNumber);

  CommonFlags bf;
  std::string state_file, spec, measure = "tsq";
  auto* bounds = app.add_subcommand("bounds", "upper bound on a state file");
  add_common(bounds, bf);
  bounds->add_option("state", state_file, "state file")->required()->check(CLI::ExistingFile);
  bounds->add_option("--regions", spec, "regions, e.g. \"A=0;B=1;C=2\"")->required();
  bounds->add_option("--measure", measure, "tsq, nsq, esq or coqcmi")
      ->check(CLI::IsMember({"tsq", "nsq", "esq", "coqcmi"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*table) return cmd_table1(table_json);
    if (*quench) return cmd_quench(qf);
    if (*props) return cmd_properties(pf, samples);
    if (*bounds) return cmd_bounds(bf, state_file, spec, measure);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
