#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "uap/audio.hpp"
#include "uap/greedy.hpp"
#include "uap/model.hpp"
#include "uap/penalty.hpp"
#include "uap/perturbation.hpp"

namespace uap {

struct EvalRow {
  std::size_t sample_id = 0;
  int clean_pred = 0;
  int perturbed_pred = 0;
  bool success = false;
  double snr_db = 0.0;
  double l_db = 0.0;  // NaN when the applied perturbation has no positive entry
};

struct EvalReport {
  AttackMode mode = AttackMode::untargeted;
  Method method = Method::greedy;
  std::optional<double> train_asr;
  double test_asr = 0.0;
  double mean_snr_db = 0.0;
  double mean_l_db = 0.0;  // over rows where l_dB is defined; NaN if none
  std::vector<EvalRow> rows;
  nlohmann::ordered_json config;
  double wall_clock_s = 0.0;  // not written to any artifact
};

/// Apply the perturbation to every test sample and score it against `goal`.
EvalReport evaluate_uap(const VictimModel& model, const std::vector<AudioSample>& testset, const Perturbation& pert,
                        const AttackGoal& goal);
inline EvalReport evaluate_uap(const VictimModel& model, const std::vector<AudioSample>& testset,
                               const Perturbation& pert) {
  return evaluate_uap(model, testset, pert, pert.goal);
}

/// Square ASR matrix: row i = perturbation crafted on model i, column j = victim model j.
/// The diagonal is NaN.
struct TransferMatrix {
  std::vector<std::string> names;
  std::vector<std::vector<double>> asr;
};

TransferMatrix transfer_matrix(const std::vector<const VictimModel*>& models, const std::vector<std::string>& names,
                               const std::vector<Perturbation>& perturbations,
                               const std::vector<AudioSample>& testset);

struct ZTest {
  double z = 0.0;
  bool reject = false;  // reject H0 (equal success rates) iff z < -critical
};

inline constexpr double kZCritical = 1.58;

/// Pooled two-proportion z statistic for equal sample sizes m.
ZTest two_proportion_z(double p_l, double p_h, long long m, double critical = kZCritical);

std::vector<double> default_kappa_grid();
std::vector<int> default_count_grid(std::size_t available);

struct SweepCell {
  Method method = Method::penalty;
  double kappa = 0.0;
  int count = 0;
  EvalReport report;
};

/// One penalty craft + evaluation per kappa.
std::vector<SweepCell> sweep_confidence(const VictimModel& model, const std::vector<AudioSample>& X,
                                        const std::vector<AudioSample>& testset, const std::vector<double>& kappas,
                                        const PenaltyConfig& cfg);

/// For each m, craft with both methods from the first m samples of a seeded
/// shuffle of X and evaluate on the test set. Cells are ordered by m, then
/// greedy before penalty.
std::vector<SweepCell> sweep_datacount(const VictimModel& model, const std::vector<AudioSample>& X,
                                       const std::vector<AudioSample>& testset, const std::vector<int>& counts,
                                       const PenaltyConfig& penalty_cfg, const GreedyConfig& greedy_cfg,
                                       std::uint64_t seed);

/// c = 0.2, kappa = 90, 19 iterations, batch size 1.
PenaltyConfig single_sample_defaults(const AttackGoal& goal);

/// One penalty UAP per sample (one sample per class), each evaluated on the test set.
std::vector<EvalReport> single_sample_attack(const VictimModel& model, const std::vector<AudioSample>& per_class,
                                             const std::vector<AudioSample>& testset, const PenaltyConfig& cfg);

/// Pick the first sample of each class from a labelled set, in class order.
std::vector<AudioSample> first_sample_per_class(const std::vector<AudioSample>& samples, std::uint64_t seed);

// CSV -------------------------------------------------------------------------

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

std::string format_number(double value);
std::string to_csv(const CsvTable& table);
CsvTable parse_csv(const std::string& text);

CsvTable report_table(const EvalReport& report);
CsvTable sweep_table(const std::vector<SweepCell>& cells);
CsvTable transfer_table(const TransferMatrix& matrix);
nlohmann::ordered_json report_summary(const EvalReport& report);

nlohmann::ordered_json config_json(const PenaltyConfig& cfg);
nlohmann::ordered_json config_json(const GreedyConfig& cfg);

}  // namespace uap
