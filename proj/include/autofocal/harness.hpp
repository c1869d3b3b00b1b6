#pragma once

// Experiment runner: declarative configs, the training loop, loss-vs-loss
// comparisons on shared data and initialization, and gamma curve tables.

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "autofocal/config.hpp"
#include "autofocal/data.hpp"
#include "autofocal/focal_core.hpp"
#include "autofocal/losses.hpp"
#include "autofocal/metrics.hpp"
#include "autofocal/nn.hpp"

namespace autofocal::harness {

enum class ClassificationLoss { None, CrossEntropy, Focal, AlphaBalanced };
enum class RegressionLoss { None, L1, L2, Focal };
enum class Combine { WeightedSum, Multiloss };
enum class ScheduleKind { Fixed, Quantile, Info };

struct ScheduleSettings {
  ScheduleKind kind = ScheduleKind::Info;
  double gamma = 2.0;
  double h = 0.7;
  double clamp_max = kDefaultGammaClamp;

  GammaSchedule<double> make() const;
  std::string describe() const;
};

struct LossSettings {
  ClassificationLoss cls = ClassificationLoss::None;
  RegressionLoss reg = RegressionLoss::None;
  ScheduleSettings cls_schedule;
  ScheduleSettings reg_schedule;
  RegressionBase reg_base = RegressionBase::L2;
  VarianceNormalization normalization = VarianceNormalization::Squared;
  VarianceGradient variance_gradient = VarianceGradient::Detached;
  ProgressPolicy policy = ProgressPolicy::SingleTarget;
  double smoothing = 0.95;
  Combine combine = Combine::WeightedSum;
  double cls_weight = 10.0;
  double reg_weight = 1.0;
  /// Variance group of each regression target; empty puts all in group 0.
  std::vector<int> reg_groups;
  double initial_sigma2 = 1.0;
};

struct ModelSettings {
  std::vector<int> hidden{32, 32};
  nn::Activation activation = nn::Activation::Relu;
};

struct OptimizerSettings {
  double lr_start = 1e-4;
  double lr_end = 1e-6;
  /// 0 decays over the whole training budget.
  std::int64_t decay_steps = 0;
};

struct TrainingSettings {
  std::int64_t steps = 5000;
  int batch_size = 32;
  std::int64_t eval_every = 100;
};

struct ConvergenceSettings {
  std::string metric = "val_macro_f1";
  double threshold = 0.9;
  int patience = 3;
  metrics::Goal goal = metrics::Goal::AtLeast;
};

struct ExperimentConfig {
  std::string name = "run";
  std::uint64_t seed = 1;
  data::DatasetSpec data;
  ModelSettings model;
  LossSettings loss;
  OptimizerSettings optimizer;
  TrainingSettings training;
  ConvergenceSettings convergence;
  std::string output_dir;
  bool svg = false;

  /// Reads every recognised key; unknown keys and inconsistent loss settings throw ConfigError.
  static ExperimentConfig from_config(const Config& config);
  static ExperimentConfig load(const std::string& path);

  /// Fully resolved settings as key/value pairs, including defaults.
  std::map<std::string, std::string> canonical() const;

  void validate() const;
};

/// Raised when training produces a non-finite loss or gradient.
class TrainingAborted : public std::runtime_error {
 public:
  TrainingAborted(const std::string& message, std::int64_t last_good_step)
      : std::runtime_error(message), last_good_step_(last_good_step) {}
  std::int64_t last_good_step() const { return last_good_step_; }

 private:
  std::int64_t last_good_step_;
};

struct RunResult {
  metrics::RunTrace trace;
  nn::Mlp model;
  std::vector<double> final_sigma2;
  /// Metrics of the final model on the test split, in a fixed order.
  std::vector<std::pair<std::string, double>> test_metrics;
  std::optional<std::int64_t> convergence;
  std::vector<std::string> files;
};

/// Trains one configuration. Writes trace.csv, summary.txt, model.ckpt and
/// config.resolved (plus SVG plots when enabled) into `output_dir` when it is
/// not empty; the directory is checked for writability before training.
RunResult run(const ExperimentConfig& config, const std::string& output_dir);

struct ComparisonRow {
  std::string name;
  std::string cls_loss;
  std::string reg_loss;
  std::string schedule;
  std::optional<std::int64_t> convergence;
  std::vector<std::pair<std::string, double>> test_metrics;
};

struct ComparisonReport {
  std::string convergence_metric;
  double convergence_threshold = 0;
  metrics::Goal convergence_goal = metrics::Goal::AtLeast;
  std::vector<ComparisonRow> rows;
};

/// Throws ConfigError unless every config agrees on everything except the loss
/// settings and the run name.
void check_comparable(const std::vector<ExperimentConfig>& configs);

/// Runs every config (in parallel workers when `workers` > 1) and writes
/// compare.csv and compare.txt into `output_dir`, each run in its own subdirectory.
ComparisonReport compare(const std::vector<ExperimentConfig>& configs, const std::string& output_dir,
                         unsigned workers = 1);

void write_comparison_csv(const ComparisonReport& report, const std::string& path);
std::string format_comparison(const ComparisonReport& report);

struct GammaTable {
  std::vector<double> p_hat;
  std::vector<std::string> names;
  std::vector<std::vector<double>> gamma;  // one column per schedule
};

GammaTable gamma_trace(const std::vector<GammaSchedule<double>>& schedules, const std::vector<double>& grid);

/// "info", "quantile:<h>" or "fixed:<gamma>", optionally followed by ",clamp=<max>".
GammaSchedule<double> parse_schedule(const std::string& text);
/// "start:stop:step" (inclusive) or a comma separated list; values must lie in (0, 1).
std::vector<double> parse_grid(const std::string& text);

void write_gamma_csv(const GammaTable& table, const std::string& path);

/// Writes the dataset splits described by `spec` as train.csv, validation.csv
/// and test.csv under `output_dir`; returns the written paths.
std::vector<std::string> generate_data_files(const data::DatasetSpec& spec, const std::string& output_dir);

/// Reads the data.* keys of a config into a dataset spec.
data::DatasetSpec dataset_spec_from_config(const Config& config, std::uint64_t default_seed);

/// Creates the directory if needed and verifies a file can be written there.
void ensure_writable_directory(const std::string& dir);

}  // namespace autofocal::harness
