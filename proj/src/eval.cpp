#include "uap/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "uap/dataset.hpp"
#include "uap/errors.hpp"

namespace uap {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

PenaltyResult craft_penalty(const VictimModel& model, const std::vector<AudioSample>& X, const PenaltyConfig& cfg) {
  return penalty_uap(model, X, labels_of(X), cfg);
}

}  // namespace

EvalReport evaluate_uap(const VictimModel& model, const std::vector<AudioSample>& testset, const Perturbation& pert,
                        const AttackGoal& goal) {
  if (testset.empty()) throw InvalidInput("evaluate_uap: empty test set");
  const auto t0 = std::chrono::steady_clock::now();
  EvalReport report;
  report.mode = goal.mode;
  report.method = pert.method;
  report.rows.reserve(testset.size());
  std::size_t hits = 0;
  double snr_sum = 0.0;
  double ldb_sum = 0.0;
  std::size_t ldb_count = 0;
  for (std::size_t i = 0; i < testset.size(); ++i) {
    const auto& x = testset[i].samples;
    if (x.size() != pert.dim()) throw InvalidInput("evaluate_uap: perturbation dimension does not match sample");
    const std::vector<double> w = apply_perturbation(pert, x);
    std::vector<double> diff(w.size());
    for (std::size_t n = 0; n < w.size(); ++n) diff[n] = w[n] - x[n];
    EvalRow row;
    row.sample_id = i;
    row.clean_pred = predict(model, x);
    row.perturbed_pred = predict(model, w);
    row.success = goal.satisfied(row.perturbed_pred, row.clean_pred);
    row.snr_db = snr(x, diff);
    try {
      row.l_db = rel_loudness(x, diff);
      ldb_sum += row.l_db;
      ++ldb_count;
    } catch (const UndefinedMetric&) {
      row.l_db = kNaN;
    }
    hits += row.success ? 1 : 0;
    snr_sum += row.snr_db;
    report.rows.push_back(row);
  }
  const double n = static_cast<double>(testset.size());
  report.test_asr = static_cast<double>(hits) / n;
  report.mean_snr_db = snr_sum / n;
  report.mean_l_db = ldb_count > 0 ? ldb_sum / static_cast<double>(ldb_count) : kNaN;
  report.wall_clock_s = seconds_since(t0);
  return report;
}

TransferMatrix transfer_matrix(const std::vector<const VictimModel*>& models, const std::vector<std::string>& names,
                               const std::vector<Perturbation>& perturbations,
                               const std::vector<AudioSample>& testset) {
  if (models.size() < 2) throw InvalidInput("transfer_matrix: need at least two models");
  if (perturbations.size() != models.size() || names.size() != models.size()) {
    throw InvalidInput("transfer_matrix: one perturbation and name per model required");
  }
  for (const VictimModel* m : models) {
    if (m == nullptr || m->input_dim() != models.front()->input_dim()) {
      throw InvalidInput("transfer_matrix: models must share the input dimension");
    }
  }
  TransferMatrix out;
  out.names = names;
  out.asr.assign(models.size(), std::vector<double>(models.size(), kNaN));
  for (std::size_t i = 0; i < models.size(); ++i) {
    for (std::size_t j = 0; j < models.size(); ++j) {
      if (i == j) continue;
      out.asr[i][j] = asr(*models[j], testset, perturbations[i]);
    }
  }
  return out;
}

ZTest two_proportion_z(double p_l, double p_h, long long m, double critical) {
  if (m < 1) throw InvalidInput("two_proportion_z: m must be at least 1");
  if (!(p_l >= 0.0 && p_h <= 1.0 && p_l <= p_h)) throw InvalidInput("two_proportion_z: need 0 <= p_l <= p_h <= 1");
  const double md = static_cast<double>(m);
  // Success counts are kept fractional (p * m); see the README.
  const double pooled = (p_l * md + p_h * md) / (2.0 * md);
  if (pooled <= 0.0 || pooled >= 1.0) throw DegenerateVariance("two_proportion_z: pooled proportion is 0 or 1");
  ZTest t;
  t.z = (p_l - p_h) / std::sqrt(2.0 * pooled * (1.0 - pooled) / md);
  t.reject = t.z < -critical;
  return t;
}

std::vector<double> default_kappa_grid() { return {0.0, 10.0, 20.0, 40.0, 60.0, 90.0}; }

std::vector<int> default_count_grid(std::size_t available) {
  std::vector<int> out;
  for (int m : {1, 5, 10, 50, 100, 500}) {
    if (static_cast<std::size_t>(m) <= available) out.push_back(m);
  }
  return out;
}

std::vector<SweepCell> sweep_confidence(const VictimModel& model, const std::vector<AudioSample>& X,
                                        const std::vector<AudioSample>& testset, const std::vector<double>& kappas,
                                        const PenaltyConfig& cfg) {
  if (kappas.empty()) throw InvalidInput("sweep_confidence: empty kappa grid");
  std::vector<SweepCell> cells;
  for (double kappa : kappas) {
    PenaltyConfig c = cfg;
    c.kappa = kappa;
    const auto t0 = std::chrono::steady_clock::now();
    const PenaltyResult r = craft_penalty(model, X, c);
    SweepCell cell;
    cell.method = Method::penalty;
    cell.kappa = kappa;
    cell.count = static_cast<int>(X.size());
    cell.report = evaluate_uap(model, testset, r.perturbation);
    cell.report.train_asr = r.final_asr;
    cell.report.config = config_json(c);
    cell.report.wall_clock_s = seconds_since(t0);
    cells.push_back(std::move(cell));
  }
  return cells;
}

std::vector<SweepCell> sweep_datacount(const VictimModel& model, const std::vector<AudioSample>& X,
                                       const std::vector<AudioSample>& testset, const std::vector<int>& counts,
                                       const PenaltyConfig& penalty_cfg, const GreedyConfig& greedy_cfg,
                                       std::uint64_t seed) {
  if (counts.empty()) throw InvalidInput("sweep_datacount: empty count grid");
  std::vector<std::size_t> order(X.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<SweepCell> cells;
  for (int m : counts) {
    if (m < 1 || static_cast<std::size_t>(m) > X.size()) {
      throw InvalidInput("sweep_datacount: count outside [1, |X|]");
    }
    std::vector<AudioSample> subset;
    for (int i = 0; i < m; ++i) subset.push_back(X[order[static_cast<std::size_t>(i)]]);

    const auto t0 = std::chrono::steady_clock::now();
    const GreedyResult g = greedy_uap(model, subset, greedy_cfg);
    SweepCell gc;
    gc.method = Method::greedy;
    gc.count = m;
    gc.report = evaluate_uap(model, testset, g.perturbation);
    gc.report.train_asr = g.asr_trace.back();
    gc.report.config = config_json(greedy_cfg);
    gc.report.wall_clock_s = seconds_since(t0);
    cells.push_back(std::move(gc));

    const auto t1 = std::chrono::steady_clock::now();
    const PenaltyResult p = craft_penalty(model, subset, penalty_cfg);
    SweepCell pc;
    pc.method = Method::penalty;
    pc.kappa = penalty_cfg.kappa;
    pc.count = m;
    pc.report = evaluate_uap(model, testset, p.perturbation);
    pc.report.train_asr = p.final_asr;
    pc.report.config = config_json(penalty_cfg);
    pc.report.wall_clock_s = seconds_since(t1);
    cells.push_back(std::move(pc));
  }
  return cells;
}

PenaltyConfig single_sample_defaults(const AttackGoal& goal) {
  PenaltyConfig cfg = PenaltyConfig::defaults(goal);
  cfg.c = 0.2;
  cfg.kappa = 90.0;
  cfg.max_iterations = 19;
  cfg.batch_size = 1;
  return cfg;
}

std::vector<EvalReport> single_sample_attack(const VictimModel& model, const std::vector<AudioSample>& per_class,
                                             const std::vector<AudioSample>& testset, const PenaltyConfig& cfg) {
  if (per_class.empty()) throw InvalidInput("single_sample_attack: no samples");
  std::vector<int> seen;
  for (const AudioSample& s : per_class) {
    if (!s.label) throw InvalidInput("single_sample_attack: samples must be labelled");
    if (std::find(seen.begin(), seen.end(), *s.label) != seen.end()) {
      throw InvalidInput("single_sample_attack: more than one sample for a class");
    }
    seen.push_back(*s.label);
  }
  std::vector<EvalReport> out;
  for (const AudioSample& s : per_class) {
    PenaltyConfig c = cfg;
    c.batch_size = 1;
    const auto t0 = std::chrono::steady_clock::now();
    const PenaltyResult r = penalty_uap(model, {s}, {*s.label}, c);
    EvalReport rep = evaluate_uap(model, testset, r.perturbation);
    rep.train_asr = r.final_asr;
    rep.config = config_json(c);
    rep.config["class"] = *s.label;
    rep.wall_clock_s = seconds_since(t0);
    out.push_back(std::move(rep));
  }
  return out;
}

std::vector<AudioSample> first_sample_per_class(const std::vector<AudioSample>& samples, std::uint64_t seed) {
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::map<int, std::size_t> pick;
  for (std::size_t i : order) {
    if (samples[i].label && !pick.contains(*samples[i].label)) pick[*samples[i].label] = i;
  }
  std::vector<AudioSample> out;
  for (const auto& [label, i] : pick) out.push_back(samples[i]);
  return out;
}

// CSV -------------------------------------------------------------------------

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", value);
  return buf;
}

std::string to_csv(const CsvTable& table) {
  std::string out;
  auto emit = [&out](const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (fields[i].find_first_of(",\n\"") != std::string::npos) throw InvalidInput("csv field needs quoting");
      if (i > 0) out += ',';
      out += fields[i];
    }
    out += '\n';
  };
  emit(table.header);
  for (const auto& row : table.rows) {
    if (row.size() != table.header.size()) throw InvalidInput("csv row width differs from header");
    emit(row);
  }
  return out;
}

CsvTable parse_csv(const std::string& text) {
  CsvTable table;
  std::istringstream in(text);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      fields.push_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (first) {
      table.header = std::move(fields);
      first = false;
    } else {
      if (fields.size() != table.header.size()) throw FormatError("csv row width differs from header");
      table.rows.push_back(std::move(fields));
    }
  }
  if (first) throw FormatError("csv: missing header");
  return table;
}

CsvTable report_table(const EvalReport& report) {
  CsvTable t;
  t.header = {"sample_id", "clean_pred", "perturbed_pred", "success", "snr_db", "l_db"};
  for (const EvalRow& r : report.rows) {
    t.rows.push_back({std::to_string(r.sample_id), std::to_string(r.clean_pred), std::to_string(r.perturbed_pred),
                      r.success ? "1" : "0", format_number(r.snr_db), format_number(r.l_db)});
  }
  return t;
}

CsvTable sweep_table(const std::vector<SweepCell>& cells) {
  CsvTable t;
  t.header = {"method", "mode", "kappa", "count", "train_asr", "test_asr", "mean_snr_db", "mean_l_db"};
  for (const SweepCell& c : cells) {
    t.rows.push_back({to_string(c.method), to_string(c.report.mode),
                      c.method == Method::penalty ? format_number(c.kappa) : "", std::to_string(c.count),
                      c.report.train_asr ? format_number(*c.report.train_asr) : "",
                      format_number(c.report.test_asr), format_number(c.report.mean_snr_db),
                      format_number(c.report.mean_l_db)});
  }
  return t;
}

CsvTable transfer_table(const TransferMatrix& matrix) {
  CsvTable t;
  t.header.push_back("source");
  for (const auto& n : matrix.names) t.header.push_back(n);
  for (std::size_t i = 0; i < matrix.names.size(); ++i) {
    std::vector<std::string> row{matrix.names[i]};
    for (double v : matrix.asr[i]) row.push_back(format_number(v));
    t.rows.push_back(std::move(row));
  }
  return t;
}

nlohmann::ordered_json report_summary(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["mode"] = to_string(report.mode);
  j["method"] = to_string(report.method);
  if (report.train_asr) j["train_asr"] = *report.train_asr;
  j["test_asr"] = report.test_asr;
  j["mean_snr_db"] = report.mean_snr_db;
  j["mean_l_db"] = std::isnan(report.mean_l_db) ? nlohmann::ordered_json() : nlohmann::ordered_json(report.mean_l_db);
  j["rows"] = report.rows.size();
  if (!report.config.is_null()) j["config"] = report.config;
  return j;
}

namespace {

nlohmann::ordered_json goal_json(const AttackGoal& goal) {
  nlohmann::ordered_json j;
  j["mode"] = to_string(goal.mode);
  if (goal.mode == AttackMode::targeted) j["target"] = goal.target;
  return j;
}

}  // namespace

nlohmann::ordered_json config_json(const PenaltyConfig& cfg) {
  nlohmann::ordered_json j;
  j["method"] = "penalty";
  j["goal"] = goal_json(cfg.goal);
  j["c"] = cfg.c;
  j["kappa"] = cfg.kappa;
  j["delta"] = cfg.delta;
  j["batch_size"] = cfg.batch_size;
  j["max_iterations"] = cfg.max_iterations;
  j["learning_rate"] = cfg.adam.learning_rate;
  j["epsilon"] = cfg.epsilon;
  if (cfg.projection) j["projection"] = {{"p", to_string(cfg.projection->p)}, {"xi", cfg.projection->xi}};
  j["seed"] = cfg.seed;
  return j;
}

nlohmann::ordered_json config_json(const GreedyConfig& cfg) {
  nlohmann::ordered_json j;
  j["method"] = "greedy";
  j["goal"] = goal_json(cfg.goal);
  j["p"] = to_string(cfg.p);
  j["xi"] = cfg.xi;
  j["delta"] = cfg.delta;
  j["max_epochs"] = cfg.max_epochs;
  j["inner_steps"] = cfg.inner.steps;
  j["inner_init_norm"] = cfg.inner.init_norm;
  j["inner_gamma"] = cfg.inner.gamma;
  j["seed"] = cfg.seed;
  return j;
}

}  // namespace uap
