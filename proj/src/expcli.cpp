#include "hsq/expcli.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "hsq/measures.hpp"
#include "hsq/random.hpp"
#include "hsq/recovery.hpp"

namespace hsq {

namespace {

using nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr char kMagic[8] = {'H', 'S', 'Q', 'S', 'T', 'A', 'T', 'E'};

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(trim(item));
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double x = 0;
  try {
    x = std::stod(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != v.size()) throw std::invalid_argument(key + ": not a number: '" + v + "'");
  return x;
}

long long to_int(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  long long x = 0;
  try {
    x = std::stoll(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != v.size()) throw std::invalid_argument(key + ": not an integer: '" + v + "'");
  return x;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw std::invalid_argument(key + ": not a boolean: '" + v + "'");
}

Qubits range_qubits(int start, std::size_t count) {
  Qubits q(count);
  for (std::size_t i = 0; i < count; ++i) q[i] = start + static_cast<int>(i);
  return q;
}

Qubits concat(const Qubits& a, const Qubits& b) {
  Qubits out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back({m(i, j).real(), m(i, j).imag()});
    rows.push_back(row);
  }
  return rows;
}

json partition_json(const RegionPartition& p) {
  return {{"A", p.a}, {"B", p.b}, {"C", p.c}, {"D", p.d}};
}

}  // namespace

// ---------------------------------------------------------------------------

RegionPartition default_partition(const std::string& name, int n) {
  if (name == "lw") return RegionPartition::make(n, {0, 1}, {2, 3}, {4, 5});
  if (name == "adjacent") return RegionPartition::make(n, {0}, {1}, {2});
  if (name == "distant") return RegionPartition::make(n, {0}, {4}, {2});
  throw std::invalid_argument("unknown partition '" + name + "' (built-in: lw, adjacent, distant)");
}

ExperimentConfig ExperimentConfig::defaults() {
  ExperimentConfig c;
  for (const char* name : {"lw", "adjacent", "distant"}) c.partitions.push_back({name, default_partition(name, c.n)});
  return c;
}

void ExperimentConfig::set(const std::string& raw_key, const std::string& raw_value) {
  const std::string key = trim(raw_key), v = trim(raw_value);
  auto as_int = [&] { return static_cast<int>(to_int(key, v)); };
  if (key == "n") {
    n = as_int();
    std::vector<NamedPartition> kept;
    for (const auto& np : partitions) {
      if (np.part.n_qubits() == n) {
        kept.push_back(np);
        continue;
      }
      if (np.name != "lw" && np.name != "adjacent" && np.name != "distant") {
        throw std::invalid_argument("partition '" + np.name + "' was defined before n changed");
      }
      try {
        kept.push_back({np.name, default_partition(np.name, n)});
      } catch (const std::logic_error&) {
      }
    }
    partitions = std::move(kept);
  } else if (key == "J") {
    protocol.J = to_double(key, v);
  } else if (key == "h_max") {
    protocol.h_max = to_double(key, v);
  } else if (key == "t_up") {
    protocol.t_up = to_double(key, v);
  } else if (key == "t_hold") {
    protocol.t_hold = to_double(key, v);
  } else if (key == "t_down") {
    protocol.t_down = to_double(key, v);
  } else if (key == "gamma") {
    protocol.gamma = to_double(key, v);
  } else if (key == "dt") {
    protocol.dt = to_double(key, v);
  } else if (key == "n_traj") {
    protocol.n_traj = as_int();
  } else if (key == "seed") {
    protocol.seed = static_cast<std::uint64_t>(to_int(key, v));
    squash.seed = protocol.seed;
  } else if (key == "checkpoint_every") {
    checkpoint_every = to_double(key, v);
  } else if (key == "out") {
    out_dir = v;
  } else if (key == "deterministic") {
    deterministic = to_bool(key, v);
  } else if (key == "threads") {
    threads = as_int();
  } else if (key == "partitions") {
    select_partitions(split(v, ','));
  } else if (key.rfind("partition.", 0) == 0) {
    const std::string name = key.substr(std::strlen("partition."));
    if (name.empty()) throw std::invalid_argument("partition name missing in '" + key + "'");
    const RegionPartition p = RegionPartition::parse(v, n);
    auto it = std::find_if(partitions.begin(), partitions.end(), [&](const NamedPartition& np) { return np.name == name; });
    if (it == partitions.end()) {
      partitions.push_back({name, p});
    } else {
      it->part = p;
    }
  } else if (key == "restarts") {
    squash.restarts = as_int();
  } else if (key == "m_max") {
    squash.m_max = as_int();
  } else if (key == "e_dim") {
    squash.e_dim = as_int();
  } else if (key == "f_dim") {
    squash.f_dim = as_int();
  } else if (key == "tol") {
    squash.tol = to_double(key, v);
  } else {
    throw std::invalid_argument("unknown configuration key '" + key + "'");
  }
}

void ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path.string());
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
    }
    // Partition specs contain '=' themselves, so split at the first one only.
    set(t.substr(0, eq), t.substr(eq + 1));
  }
}

void ExperimentConfig::select_partitions(const std::vector<std::string>& names) {
  std::vector<NamedPartition> out;
  for (const std::string& name : names) {
    auto it = std::find_if(partitions.begin(), partitions.end(), [&](const NamedPartition& np) { return np.name == name; });
    out.push_back(it != partitions.end() ? *it : NamedPartition{name, default_partition(name, n)});
  }
  partitions = std::move(out);
}

void ExperimentConfig::validate() const {
  protocol.validate();
  if (n < 1 || n > kDefaultMaxQubits) throw std::invalid_argument("n must be between 1 and 12");
  if (partitions.empty()) throw std::invalid_argument("no partitions configured");
  for (const auto& np : partitions) {
    if (np.name.empty() || np.name.find_first_of("/\\ ") != std::string::npos) {
      throw std::invalid_argument("invalid partition name '" + np.name + "'");
    }
    np.part.validate(n);
  }
  if (!(checkpoint_every > 0)) throw std::invalid_argument("checkpoint_every must be positive");
  const double ratio = checkpoint_every / protocol.dt;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio) {
    throw std::invalid_argument("checkpoint_every must be a multiple of dt");
  }
  if (threads < 1) throw std::invalid_argument("threads must be at least 1");
}

std::vector<double> ExperimentConfig::checkpoints() const {
  std::vector<double> out;
  const auto k = static_cast<long>(std::floor(protocol.total() / checkpoint_every + 1e-9));
  for (long i = 0; i <= k; ++i) out.push_back(static_cast<double>(i) * checkpoint_every);
  return out;
}

json ExperimentConfig::to_json() const {
  json parts = json::object();
  for (const auto& np : partitions) parts[np.name] = partition_json(np.part);
  return {{"protocol",
           {{"J", protocol.J},
            {"h_max", protocol.h_max},
            {"t_up", protocol.t_up},
            {"t_hold", protocol.t_hold},
            {"t_down", protocol.t_down},
            {"gamma", protocol.gamma},
            {"dt", protocol.dt},
            {"n_traj", protocol.n_traj},
            {"seed", protocol.seed}}},
          {"n", n},
          {"partitions", parts},
          {"checkpoint_every", checkpoint_every},
          {"out", out_dir.string()},
          {"deterministic", deterministic},
          {"threads", threads}};
}

// ---------------------------------------------------------------------------

const std::vector<std::string>& MeasureSeries::columns() {
  static const std::vector<std::string> cols{"t",      "h",      "tsq_flag_bound", "i3",     "tau3",
                                             "mean_Z", "mean_X", "nn_corr",        "purity", "traj_stat_err"};
  return cols;
}

namespace {

std::array<double, 10> fields(const SeriesRow& r) {
  return {r.t, r.h, r.tsq_flag_bound, r.i3, r.tau3, r.mean_Z, r.mean_X, r.nn_corr, r.purity, r.traj_stat_err};
}

}  // namespace

void MeasureSeries::validate() const {
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto f = fields(rows[i]);
    for (std::size_t c = 0; c < f.size(); ++c) {
      if (!std::isfinite(f[c])) {
        throw std::runtime_error("series " + partition + ": non-finite " + columns()[c] + " in row " + std::to_string(i));
      }
    }
    if (i > 0 && !(rows[i].t > rows[i - 1].t)) {
      throw std::runtime_error("series " + partition + ": t not strictly increasing at row " + std::to_string(i));
    }
    if (rows[i].tsq_flag_bound < -1e-8) {
      throw std::runtime_error("series " + partition + ": negative tsq_flag_bound in row " + std::to_string(i));
    }
  }
}

std::string MeasureSeries::to_csv() const {
  std::string out;
  for (std::size_t c = 0; c < columns().size(); ++c) out += (c ? "," : "") + columns()[c];
  out += '\n';
  for (const SeriesRow& r : rows) {
    const auto f = fields(r);
    for (std::size_t c = 0; c < f.size(); ++c) {
      if (c) out += ',';
      out += format_double(f[c]);
    }
    out += '\n';
  }
  return out;
}

MeasureSeries MeasureSeries::from_csv(const std::string& text, std::string partition) {
  MeasureSeries s;
  s.partition = std::move(partition);
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || split(line, ',') != columns()) throw std::invalid_argument("unexpected CSV header");
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != columns().size()) throw std::invalid_argument("wrong number of CSV fields: " + line);
    std::array<double, 10> f{};
    for (std::size_t c = 0; c < cells.size(); ++c) f[c] = to_double(columns()[c], cells[c]);
    s.rows.push_back({f[0], f[1], f[2], f[3], f[4], f[5], f[6], f[7], f[8], f[9]});
  }
  return s;
}

// ---------------------------------------------------------------------------

SeriesRow measure_checkpoint(const TrajectoryEnsemble& ens, const RegionPartition& part, const Observables& obs,
                             double h) {
  const int n = std::countr_zero(static_cast<std::size_t>(ens.states.rows()));
  const PureQcmi pq(n, part);
  const int k = ens.n_traj();
  std::vector<double> half(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) half[static_cast<std::size_t>(i)] = 0.5 * pq(ens.states.col(i));
  double mean = 0;
  for (double v : half) mean += v;
  mean /= k;
  double var = 0;
  for (double v : half) var += (v - mean) * (v - mean);
  const double err = k > 1 ? std::sqrt(var / (k - 1) / k) : 0.0;

  const Qubits keep = concat(concat(part.a, part.b), part.c);
  const Dims dims(static_cast<std::size_t>(n), 2);
  const auto d = static_cast<Eigen::Index>(std::size_t{1} << keep.size());
  Matrix rho = Matrix::Zero(d, d);
  for (int i = 0; i < k; ++i) rho += tensor::reduce_pure(ens.states.col(i), dims, keep);
  rho /= static_cast<double>(k);
  const DensityOp abc(rho);
  const auto na = part.a.size(), nb = part.b.size();
  const RegionPartition local = RegionPartition::make(static_cast<int>(keep.size()), range_qubits(0, na),
                                                      range_qubits(static_cast<int>(na), nb),
                                                      range_qubits(static_cast<int>(na + nb), part.c.size()));

  SeriesRow r;
  r.t = ens.t;
  r.h = h;
  r.tsq_flag_bound = mean;
  r.i3 = tmi(abc, local).value;
  r.tau3 = tau3(abc, local).value;
  r.mean_Z = obs.mean_Z;
  r.mean_X = obs.mean_X;
  r.nn_corr = obs.nn_corr;
  r.purity = obs.purity;
  r.traj_stat_err = err;
  return r;
}

QuenchChecks quench_checks(const std::map<std::string, MeasureSeries>& series, const QuenchProtocol& proto) {
  QuenchChecks out;
  out.verdicts = json::object();
  auto verdict = [&](const std::string& name, bool pass, json detail) {
    detail["pass"] = pass;
    out.verdicts[name] = detail;
  };

  if (auto it = series.find("lw"); it != series.end() && !it->second.rows.empty()) {
    const auto& rows = it->second.rows;
    const SeriesRow& first = rows.front();
    double max_t = 0, max_i3 = 0, min_abs_z = std::abs(first.mean_Z);
    for (const SeriesRow& r : rows) {
      if (r.t > proto.t_up) break;
      max_t = std::max(max_t, r.tsq_flag_bound);
      max_i3 = std::max(max_i3, r.i3);
      if (r.t < proto.t_up) min_abs_z = std::min(min_abs_z, std::abs(r.mean_Z));
    }
    const bool starts_zero = std::abs(first.tsq_flag_bound) <= 1e-6 && std::abs(first.i3) <= 1e-6;
    verdict("correlation_rise", starts_zero && max_t > first.tsq_flag_bound + 1e-2 && max_i3 > first.i3 + 1e-2,
            {{"tsq_at_0", first.tsq_flag_bound}, {"i3_at_0", first.i3}, {"max_tsq_ramp_up", max_t},
             {"max_i3_ramp_up", max_i3}});
    verdict("mean_z_decay", min_abs_z < 0.5 * std::abs(first.mean_Z),
            {{"abs_mean_z_at_0", std::abs(first.mean_Z)}, {"min_abs_mean_z_before_t_up", min_abs_z}});

    // Each increase is compared with the sampling error of the ensemble purity, 2/sqrt(n_traj) times the
    // purity itself bounded below by 1/n_traj.
    double worst = 0;
    double worst_t = 0;
    bool monotone = true;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const double rise = rows[i].purity - rows[i - 1].purity;
      const double tol = 1e-8 + 2.0 * rows[i - 1].purity / std::sqrt(static_cast<double>(proto.n_traj));
      if (rise > worst) worst = rise, worst_t = rows[i].t;
      if (rise > tol) monotone = false;
    }
    verdict("purity_monotone", monotone, {{"largest_increase", worst}, {"at_t", worst_t}});

    const double t_gap = proto.t_up + proto.t_hold;
    auto at = std::min_element(rows.begin(), rows.end(),
                               [&](const SeriesRow& a, const SeriesRow& b) { return std::abs(a.t - t_gap) < std::abs(b.t - t_gap); });
    const double gap = at->i3 - 2.0 * at->tsq_flag_bound;
    verdict("i3_tsq_gap", gap >= 0, {{"t", at->t}, {"i3_minus_2tsq", gap}, {"demoted_to_finding", true}});
    if (gap < 0) {
      out.findings.push_back("I3 - 2 tsq_flag_bound = " + format_double(gap) + " < 0 at t = " + format_double(at->t) +
                             "; the two measures are not ordered in general");
    }
  }

  if (auto it = series.find("distant"); it != series.end()) {
    double mx = 0, arg = 0;
    for (const SeriesRow& r : it->second.rows) {
      if (r.tau3 > mx) mx = r.tau3, arg = r.t;
    }
    verdict("distant_tau3_zero", mx <= 1e-3, {{"max_tau3", mx}, {"at_t", arg}});
  }

  if (auto it = series.find("adjacent"); it != series.end()) {
    double peak = 0, peak_t = -1;
    for (const SeriesRow& r : it->second.rows) {
      if (r.t < proto.t_up / 2 && r.tau3 > peak) peak = r.tau3, peak_t = r.t;
    }
    double fall_t = -1;
    for (const SeriesRow& r : it->second.rows) {
      if (r.t > peak_t && r.t < proto.total() && r.tau3 < 1e-3) {
        fall_t = r.t;
        break;
      }
    }
    verdict("adjacent_tau3_transient", peak > 0.01 && peak_t >= 0 && fall_t >= 0,
            {{"peak_tau3_before_half_t_up", peak}, {"peak_t", peak_t}, {"first_t_below_1e-3", fall_t}});
  }
  return out;
}

QuenchResult run_quench(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  const Dynamics dyn = Dynamics::from(cfg.protocol, cfg.n);
  McwfOptions mo{cfg.protocol.n_traj, cfg.protocol.seed, cfg.deterministic ? 1 : cfg.threads};

  QuenchResult res;
  for (const auto& np : cfg.partitions) res.series[np.name].partition = np.name;
  double jumps_mean = 0;
  mcwf_run(dyn, mo, cfg.checkpoints(), [&](const TrajectoryEnsemble& ens) {
    const Observables obs = observables(ens, cfg.n);
    const double h = dyn.field(ens.t);
    for (const auto& np : cfg.partitions) res.series[np.name].rows.push_back(measure_checkpoint(ens, np.part, obs, h));
    double j = 0;
    for (int x : ens.jumps) j += x;
    jumps_mean = j / ens.n_traj();
  });
  for (const auto& [name, s] : res.series) s.validate();

  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const QuenchChecks checks = quench_checks(res.series, cfg.protocol);
  res.summary = {{"config", cfg.to_json()},
                 {"seed", cfg.protocol.seed},
                 {"wall_time_s", wall},
                 {"estimators",
                  {{"tsq_flag_bound",
                    "upper bound on T_sq: classical-flag extension over the trajectory ensemble, mean of 1/2 I(A;C|B)"},
                   {"i3", "tripartite mutual information of the ensemble-averaged rho_ABC"},
                   {"tau3", "negativity witness of the ensemble-averaged rho_ABC"},
                   {"traj_stat_err", "standard error of the tsq_flag_bound trajectory mean"}}},
                 {"mean_jumps_per_trajectory", jumps_mean},
                 {"checks", checks.verdicts},
                 {"findings", checks.findings}};
  return res;
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 failed");
  }
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

void write_quench(const QuenchResult& result, const ExperimentConfig& cfg) {
  std::filesystem::create_directories(cfg.out_dir);
  json summary = result.summary;
  summary["files"] = json::object();
  for (const auto& [name, s] : result.series) {
    const std::string csv = s.to_csv();
    const std::string file = "quench_" + name + ".csv";
    std::ofstream out(cfg.out_dir / file, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (cfg.out_dir / file).string());
    out << csv;
    summary["files"][name] = {{"path", file}, {"sha256", sha256_hex(csv)}, {"rows", s.rows.size()}};
  }
  std::ofstream js(cfg.out_dir / "summary.json");
  if (!js) throw std::runtime_error("cannot write summary.json");
  js << summary.dump(2) << '\n';
}

// ---------------------------------------------------------------------------

std::vector<Table1Row> run_table1() {
  std::vector<Table1Row> rows;
  for (const char* family : {"GHZ", "W"}) {
    for (int n = 3; n <= 8; ++n) {
      const bool ghz = std::string(family) == "GHZ";
      const PureState psi = ghz ? make_ghz(n) : make_w(n);
      Table1Row r;
      r.family = family;
      r.n = n;
      r.value = qcmi(psi, RegionPartition::make(n, {0}, {1}, {2})).value;
      r.closed_form = ghz ? (n >= 4 ? 0.0 : kNaN) : (n >= 4 ? table1_closed_form(n) : kNaN);
      if (ghz) {
        r.expected = n == 3 ? 1.0 : 0.0;
      } else {
        r.expected = n == 3 ? 0.918 : n == 4 ? 0.377 : n == 5 ? 0.249 : kNaN;
      }
      r.match = true;
      if (!std::isnan(r.expected)) r.match = r.match && std::abs(r.value - r.expected) <= 1e-3;
      if (!std::isnan(r.closed_form)) r.match = r.match && std::abs(r.value - r.closed_form) <= 1e-9;
      rows.push_back(r);
    }
  }
  return rows;
}

json to_json(const std::vector<Table1Row>& rows) {
  json out = json::array();
  auto opt = [](double x) { return std::isnan(x) ? json(nullptr) : json(x); };
  for (const Table1Row& r : rows) {
    out.push_back({{"family", r.family}, {"n", r.n}, {"qcmi", r.value}, {"closed_form", opt(r.closed_form)},
                   {"expected", opt(r.expected)}, {"match", r.match}});
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  }
  return out;
}

/// sum_b p_b rho_A^b ⊗ |b><b|_B ⊗ rho_C^b: a quantum Markov chain A-B-C.
DensityOp markov_chain(Rng& rng) {
  std::uniform_real_distribution<double> u(0.1, 0.9);
  const double p = u(rng);
  Matrix m = Matrix::Zero(8, 8);
  for (int b = 0; b < 2; ++b) {
    Matrix proj = Matrix::Zero(2, 2);
    proj(b, b) = 1.0;
    m += (b == 0 ? p : 1 - p) * kron(kron(random_mixed(1, 2, rng).matrix(), proj), random_mixed(1, 2, rng).matrix());
  }
  return DensityOp(m);
}

struct Suite {
  PropertyVerdict v;

  explicit Suite(std::string name) { v.name = std::move(name); }

  void record(bool ok, const std::function<json()>& dump) {
    ++v.samples;
    if (ok) return;
    ++v.failures;
    v.passed = false;
    if (v.counterexample.is_null()) {
      v.counterexample = dump();
      v.counterexample["sample"] = v.samples - 1;
    }
  }
};

}  // namespace

std::vector<PropertyVerdict> run_properties(std::uint64_t seed, int n_samples, const SquashOptions& squash) {
  if (n_samples < 1) throw std::invalid_argument("n_samples must be at least 1");
  const RegionPartition part4 = RegionPartition::make(4, {0}, {1}, {2});
  const RegionPartition part3 = RegionPartition::make(3, {0}, {1}, {2});
  std::vector<PropertyVerdict> out;
  std::uint64_t stream = 0;
  auto rng_for_suite = [&] { return Rng(split_seed(seed, stream++)); };

  {
    Suite s("strong_subadditivity");
    Rng rng = rng_for_suite();
    std::uniform_int_distribution<int> rank(1, 16);
    for (int i = 0; i < n_samples; ++i) {
      const DensityOp rho = random_mixed(4, rank(rng), rng);
      const double v = qcmi(rho, part4).value;
      s.record(v >= -1e-10, [&] { return json{{"qcmi", v}, {"state", matrix_json(rho.matrix())}}; });
    }
    out.push_back(s.v);
  }
  {
    Suite s("pure_state_qcmi_duality");
    Rng rng = rng_for_suite();
    const RegionPartition swapped = RegionPartition::make(4, {0}, {3}, {2}, Qubits{1});
    for (int i = 0; i < n_samples; ++i) {
      const PureState psi = random_pure(4, rng);
      const double a = qcmi(psi, part4).value, b = qcmi(psi, swapped).value;
      s.record(std::abs(a - b) <= 1e-9, [&] { return json{{"I(A;C|B)", a}, {"I(A;C|D)", b}}; });
    }
    out.push_back(s.v);
  }
  {
    Suite s("pure_state_continuity");
    Rng rng = rng_for_suite();
    std::uniform_real_distribution<double> size(1e-4, 0.3);
    for (int i = 0; i < n_samples; ++i) {
      const Vector psi = random_pure(4, rng).amplitudes();
      const Vector phi = (psi + size(rng) * random_pure(4, rng).amplitudes()).normalized();
      const DensityOp a(PureState{psi}), b(PureState{phi});
      const double eps = trace_distance(a, b);
      const double diff = std::abs(0.5 * qcmi(a, part4).value - 0.5 * qcmi(b, part4).value);
      const double bound = continuity_bound(2, eps);
      s.record(diff <= bound + 1e-12, [&] { return json{{"eps", eps}, {"difference", diff}, {"bound", bound}}; });
    }
    out.push_back(s.v);
  }
  {
    Suite s("tsq_coqcmi_bound");
    Rng rng = rng_for_suite();
    for (int i = 0; i < n_samples; ++i) {
      const DensityOp rho = random_mixed(4, 2, rng);
      const double t = tsq_upper(rho, part4, squash).value;
      const double co = coqcmi(rho, part4, squash).value;
      const double half = 0.5 * qcmi(rho, part4).value;
      s.record(t <= co + 1e-6 && t <= half + 1e-6 && t >= -1e-8, [&] {
        return json{{"tsq", t}, {"coqcmi", co}, {"half_qcmi", half}, {"state", matrix_json(rho.matrix())}};
      });
    }
    out.push_back(s.v);
  }
  {
    Suite s("hierarchy");
    Rng rng = rng_for_suite();
    for (int i = 0; i < n_samples; ++i) {
      const DensityOp rho = random_mixed(4, 2, rng);
      const HierarchyReport h = hierarchy_check(rho, part4, squash);
      s.record(h.tsq_below_half_i_acd && h.nsq_below_tsq, [&] {
        return json{{"esq", h.esq}, {"nsq", h.nsq}, {"tsq", h.tsq}, {"half_i_acd", h.half_i_acd},
                    {"state", matrix_json(rho.matrix())}};
      });
    }
    out.push_back(s.v);
  }
  {
    Suite s("markov_recovery");
    Rng rng = rng_for_suite();
    for (int i = 0; i < n_samples; ++i) {
      const DensityOp rho = markov_chain(rng);
      const PetzRecovery r = petz_recover(rho, part3);
      s.record(r.fidelity >= 1 - 1e-8, [&] {
        return json{{"fidelity", r.fidelity}, {"qcmi", r.qcmi}, {"state", matrix_json(rho.matrix())}};
      });
    }
    out.push_back(s.v);
  }
  {
    Suite s("fuchs_van_de_graaf");
    Rng rng = rng_for_suite();
    std::uniform_int_distribution<int> rank(1, 4);
    for (int i = 0; i < n_samples; ++i) {
      const DensityOp a = random_mixed(2, rank(rng), rng), b = random_mixed(2, rank(rng), rng);
      const double f = fidelity(a, b), td = trace_distance(a, b);
      s.record(1 - std::sqrt(f) <= td + 1e-8 && td <= std::sqrt(std::max(0.0, 1 - f)) + 1e-8,
               [&] { return json{{"fidelity", f}, {"trace_distance", td}}; });
    }
    out.push_back(s.v);
  }
  return out;
}

json to_json(const std::vector<PropertyVerdict>& verdicts) {
  json suites = json::array();
  bool all = true;
  for (const PropertyVerdict& v : verdicts) {
    all = all && v.passed;
    suites.push_back({{"name", v.name}, {"samples", v.samples}, {"failures", v.failures}, {"pass", v.passed},
                      {"counterexample", v.counterexample}});
  }
  return {{"pass", all}, {"suites", suites}};
}

// ---------------------------------------------------------------------------

namespace {

static_assert(std::endian::native == std::endian::little, "state files are written in host byte order");

}  // namespace

void write_state_file(const std::filesystem::path& path, const Matrix& rho) {
  const auto d = static_cast<std::size_t>(rho.rows());
  if (rho.rows() != rho.cols() || !std::has_single_bit(d)) throw std::invalid_argument("state must be 2^n x 2^n");
  const std::uint64_t n = static_cast<std::uint64_t>(std::countr_zero(d));
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(kMagic, sizeof kMagic);
  out.write(reinterpret_cast<const char*>(&n), sizeof n);
  for (Eigen::Index i = 0; i < rho.rows(); ++i) {
    for (Eigen::Index j = 0; j < rho.cols(); ++j) {
      const double re = rho(i, j).real(), im = rho(i, j).imag();
      out.write(reinterpret_cast<const char*>(&re), sizeof re);
      out.write(reinterpret_cast<const char*>(&im), sizeof im);
    }
  }
}

DensityOp read_state_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open state file " + path.string());
  char magic[8];
  std::uint64_t n = 0;
  in.read(magic, sizeof magic);
  in.read(reinterpret_cast<char*>(&n), sizeof n);
  if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0) throw std::runtime_error("not a state file: " + path.string());
  if (n < 1 || n > static_cast<std::uint64_t>(kDefaultMaxQubits)) {
    throw std::runtime_error("state file qubit count out of range: " + std::to_string(n));
  }
  const auto d = static_cast<Eigen::Index>(std::size_t{1} << n);
  Matrix m(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      double re = 0, im = 0;
      in.read(reinterpret_cast<char*>(&re), sizeof re);
      in.read(reinterpret_cast<char*>(&im), sizeof im);
      m(i, j) = cplx(re, im);
    }
  }
  if (!in) throw std::runtime_error("state file truncated: " + path.string());
  if (in.peek() != std::char_traits<char>::eof()) throw std::runtime_error("trailing bytes in state file " + path.string());
  return DensityOp(m);
}

json to_json(const BoundReport& r) {
  json cands = json::array();
  for (const Candidate& c : r.candidates) cands.push_back({{"label", c.label}, {"value", c.value}});
  json cert;
  if (const auto* a = std::get_if<ExtensionAnsatz>(&r.certificate)) {
    cert = {{"type", "extension_ansatz"}, {"origin", to_string(a->origin)}, {"e_dim", a->e_dim}, {"f_dim", a->f_dim},
            {"params", std::vector<double>(a->params.data(), a->params.data() + a->params.size())}};
  } else {
    const auto& e = std::get<EnsembleDecomp>(r.certificate);
    cert = {{"type", "ensemble"}, {"weights", e.weights}};
  }
  return {{"value", r.value},
          {"kind", to_string(r.kind)},
          {"partition", partition_json(r.part)},
          {"qubit_map", r.qubit_map},
          {"restarts_used", r.restarts_used},
          {"converged", r.converged},
          {"certificate", cert},
          {"candidates", cands},
          {"notes", r.notes}};
}

}  // namespace hsq
