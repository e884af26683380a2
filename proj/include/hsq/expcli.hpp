#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "hsq/ising.hpp"
#include "hsq/qstate.hpp"
#include "hsq/squashed.hpp"
#include "json.hpp"

namespace hsq {

struct NamedPartition {
  std::string name;
  RegionPartition part;
};

/// Built-in layouts on the 8-site ring: "lw", "adjacent", "distant".
RegionPartition default_partition(const std::string& name, int n = 8);

struct ExperimentConfig {
  QuenchProtocol protocol;
  int n = 8;
  std::vector<NamedPartition> partitions;
  double checkpoint_every = 1.0;
  std::filesystem::path out_dir = "out";
  bool deterministic = false;
  int threads = 1;
  SquashOptions squash;

  /// lw, adjacent and distant on 8 sites.
  static ExperimentConfig defaults();
  /// Applies one `key = value` setting. Throws std::invalid_argument on unknown keys or bad values.
  void set(const std::string& key, const std::string& value);
  /// Reads flat `key = value` lines; blank lines and lines starting with '#' are skipped.
  void load(const std::filesystem::path& path);
  /// Keeps only the named partitions, in the given order.
  void select_partitions(const std::vector<std::string>& names);
  void validate() const;
  std::vector<double> checkpoints() const;
  nlohmann::json to_json() const;
};

struct SeriesRow {
  double t = 0, h = 0, tsq_flag_bound = 0, i3 = 0, tau3 = 0;
  double mean_Z = 0, mean_X = 0, nn_corr = 0, purity = 0, traj_stat_err = 0;
};

struct MeasureSeries {
  std::string partition;
  std::vector<SeriesRow> rows;

  static const std::vector<std::string>& columns();
  /// Throws unless t is strictly increasing, every entry is finite and tsq_flag_bound >= -1e-8.
  void validate() const;
  std::string to_csv() const;
  static MeasureSeries from_csv(const std::string& text, std::string partition = {});
};

/// Correlation measures of one partition at one checkpoint. tsq_flag_bound is the mean of
/// 1/2 I(A;C|B) over trajectories, i3 and tau3 use the ensemble-averaged rho_ABC.
SeriesRow measure_checkpoint(const TrajectoryEnsemble& ens, const RegionPartition& part, const Observables& obs,
                             double h);

struct QuenchChecks {
  nlohmann::json verdicts;
  std::vector<std::string> findings;
};
/// Qualitative checks of the correlation and order-parameter series; keys of `series` are
/// partition names and only the present ones are checked.
QuenchChecks quench_checks(const std::map<std::string, MeasureSeries>& series, const QuenchProtocol& proto);

struct QuenchResult {
  std::map<std::string, MeasureSeries> series;
  nlohmann::json summary;
};

QuenchResult run_quench(const ExperimentConfig& cfg);
/// Writes quench_<name>.csv per partition and summary.json (with SHA-256 of each CSV) to cfg.out_dir.
void write_quench(const QuenchResult& result, const ExperimentConfig& cfg);

std::string sha256_hex(const std::string& bytes);

struct Table1Row {
  std::string family;
  int n = 0;
  double value = 0;
  double closed_form = 0;  // NaN where none applies
  double expected = 0;     // NaN where no printed value
  bool match = true;
};
std::vector<Table1Row> run_table1();
nlohmann::json to_json(const std::vector<Table1Row>& rows);

struct PropertyVerdict {
  std::string name;
  int samples = 0;
  int failures = 0;
  bool passed = true;
  nlohmann::json counterexample;  // first failure, null when passed
};
std::vector<PropertyVerdict> run_properties(std::uint64_t seed, int n_samples, const SquashOptions& squash = {});
nlohmann::json to_json(const std::vector<PropertyVerdict>& verdicts);

/// State files: 8-byte magic "HSQSTATE", little-endian uint64 qubit count, then the density
/// matrix as row-major little-endian (re, im) doubles.
void write_state_file(const std::filesystem::path& path, const Matrix& rho);
DensityOp read_state_file(const std::filesystem::path& path);

nlohmann::json to_json(const BoundReport& report);

}  // namespace hsq
