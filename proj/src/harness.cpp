#include "autofocal/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include "autofocal/svg.hpp"

namespace autofocal::harness {

namespace fs = std::filesystem;
using data::format_double;

namespace {

const char* goal_symbol(metrics::Goal goal) { return goal == metrics::Goal::AtLeast ? " >= " : " <= "; }

std::string format_threshold(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", value);
  return buf;
}

}  // namespace

// ---------------------------------------------------------------------------
// configuration

namespace {

ClassificationLoss parse_cls_loss(const std::string& s) {
  if (s == "none") return ClassificationLoss::None;
  if (s == "ce") return ClassificationLoss::CrossEntropy;
  if (s == "focal") return ClassificationLoss::Focal;
  if (s == "alpha") return ClassificationLoss::AlphaBalanced;
  throw ConfigError("loss.cls must be none, ce, focal or alpha (got '" + s + "')");
}

std::string to_string(ClassificationLoss l) {
  switch (l) {
    case ClassificationLoss::None: return "none";
    case ClassificationLoss::CrossEntropy: return "ce";
    case ClassificationLoss::Focal: return "focal";
    case ClassificationLoss::AlphaBalanced: return "alpha";
  }
  return "none";
}

RegressionLoss parse_reg_loss(const std::string& s) {
  if (s == "none") return RegressionLoss::None;
  if (s == "l1") return RegressionLoss::L1;
  if (s == "l2") return RegressionLoss::L2;
  if (s == "focal") return RegressionLoss::Focal;
  throw ConfigError("loss.reg must be none, l1, l2 or focal (got '" + s + "')");
}

std::string to_string(RegressionLoss l) {
  switch (l) {
    case RegressionLoss::None: return "none";
    case RegressionLoss::L1: return "l1";
    case RegressionLoss::L2: return "l2";
    case RegressionLoss::Focal: return "focal";
  }
  return "none";
}

ScheduleKind parse_schedule_kind(const std::string& s) {
  if (s == "fixed") return ScheduleKind::Fixed;
  if (s == "quantile") return ScheduleKind::Quantile;
  if (s == "info") return ScheduleKind::Info;
  throw ConfigError("schedule must be fixed, quantile or info (got '" + s + "')");
}

ProgressPolicy parse_policy(const std::string& s) {
  if (s == "single") return ProgressPolicy::SingleTarget;
  if (s == "multi-all") return ProgressPolicy::MultiTargetAllExamples;
  if (s == "multi-positive") return ProgressPolicy::MultiTargetPositiveOnly;
  throw ConfigError("loss.progress_policy must be single, multi-all or multi-positive (got '" + s + "')");
}

std::string to_string(ProgressPolicy p) {
  switch (p) {
    case ProgressPolicy::SingleTarget: return "single";
    case ProgressPolicy::MultiTargetAllExamples: return "multi-all";
    case ProgressPolicy::MultiTargetPositiveOnly: return "multi-positive";
  }
  return "single";
}

std::string join(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + v[i];
  return out;
}

/// Reads `<prefix>schedule`, `<prefix>gamma` and `<prefix>h`, enforcing that
/// gamma appears exactly with fixed schedules and h exactly with quantile ones.
ScheduleSettings read_schedule(const Config& c, const std::string& prefix, bool used) {
  const std::string schedule_key = "loss." + prefix + "schedule";
  const std::string gamma_key = "loss." + prefix + "gamma";
  const std::string h_key = "loss." + prefix + "h";
  const std::string clamp_key = "loss." + prefix + "clamp_max";
  if (!used) {
    for (const auto& key : {schedule_key, gamma_key, h_key, clamp_key}) {
      if (c.get(key)) throw ConfigError(c.origin() + ": '" + key + "' only applies to a focal loss");
    }
    return {};
  }
  ScheduleSettings s;
  s.kind = parse_schedule_kind(c.text(schedule_key, "info"));
  const bool has_gamma = c.get(gamma_key).has_value();
  const bool has_h = c.get(h_key).has_value();
  if (has_gamma != (s.kind == ScheduleKind::Fixed)) {
    throw ConfigError(c.origin() + ": '" + gamma_key + "' must be given exactly when " + schedule_key + " = fixed");
  }
  if (has_h != (s.kind == ScheduleKind::Quantile)) {
    throw ConfigError(c.origin() + ": '" + h_key + "' must be given exactly when " + schedule_key + " = quantile");
  }
  s.gamma = c.number(gamma_key, s.gamma);
  s.h = c.number(h_key, s.h);
  s.clamp_max = c.number(clamp_key, s.clamp_max);
  s.make();  // validates ranges
  return s;
}

}  // namespace

GammaSchedule<double> ScheduleSettings::make() const {
  try {
    switch (kind) {
      case ScheduleKind::Fixed: return GammaSchedule<double>::fixed(gamma);
      case ScheduleKind::Quantile: return GammaSchedule<double>::quantile(h, clamp_max);
      case ScheduleKind::Info: return GammaSchedule<double>::info(clamp_max);
    }
  } catch (const std::domain_error& e) {
    throw ConfigError(e.what());
  }
  return GammaSchedule<double>::info(clamp_max);
}

std::string ScheduleSettings::describe() const {
  switch (kind) {
    case ScheduleKind::Fixed: return "fixed:" + format_double(gamma);
    case ScheduleKind::Quantile: return "quantile:" + format_double(h);
    case ScheduleKind::Info: return "info";
  }
  return "info";
}

data::DatasetSpec dataset_spec_from_config(const Config& c, std::uint64_t default_seed) {
  data::DatasetSpec d;
  d.kind = data::parse_dataset_kind(c.text("data.kind", "imbalanced-blobs"));
  d.samples = static_cast<int>(c.integer("data.samples", d.samples));
  d.features = static_cast<int>(c.integer("data.features", d.features));
  d.classes = static_cast<int>(c.integer("data.classes", d.classes));
  d.targets = static_cast<int>(c.integer("data.targets", d.targets));
  d.imbalance_ratio = c.number("data.imbalance_ratio", d.imbalance_ratio);
  d.separation = c.number("data.separation", d.separation);
  d.auxiliary_targets = static_cast<int>(c.integer("data.aux_targets", d.auxiliary_targets));
  const std::string truth = c.text("data.ground_truth", "affine");
  if (truth == "affine") {
    d.ground_truth = data::GroundTruth::Affine;
  } else if (truth == "sinusoidal") {
    d.ground_truth = data::GroundTruth::Sinusoidal;
  } else {
    throw ConfigError("data.ground_truth must be affine or sinusoidal");
  }
  d.label_noise = c.number("data.label_noise", d.label_noise);
  d.outlier_fraction = c.number("data.outlier_fraction", d.outlier_fraction);
  d.outlier_magnitude = c.number("data.outlier_magnitude", d.outlier_magnitude);
  const std::string sign = c.text("data.outlier_sign", "symmetric");
  if (sign == "symmetric") {
    d.outlier_sign = data::OutlierSign::Symmetric;
  } else if (sign == "positive") {
    d.outlier_sign = data::OutlierSign::Positive;
  } else {
    throw ConfigError("data.outlier_sign must be symmetric or positive");
  }
  d.validation_fraction = c.number("data.val_fraction", d.validation_fraction);
  d.test_fraction = c.number("data.test_fraction", d.test_fraction);
  d.seed = static_cast<std::uint64_t>(c.integer("data.seed", static_cast<std::int64_t>(default_seed)));
  d.csv_path = c.text("data.csv.path", "");
  d.csv_schema.feature_columns = c.text_list("data.csv.features");
  if (auto cls = c.get("data.csv.class")) d.csv_schema.class_column = *cls;
  d.csv_schema.mask_columns = c.text_list("data.csv.mask");
  d.csv_schema.target_columns = c.text_list("data.csv.targets");
  try {
    d.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return d;
}

ExperimentConfig ExperimentConfig::from_config(const Config& c) {
  ExperimentConfig x;
  x.name = c.text("name", x.name);
  x.seed = static_cast<std::uint64_t>(c.integer("seed", static_cast<std::int64_t>(x.seed)));
  x.data = dataset_spec_from_config(c, x.seed);

  const bool csv = x.data.kind == data::DatasetKind::CsvFile;
  const bool has_cls_labels = x.data.kind == data::DatasetKind::ImbalancedBlobs ||
                              x.data.kind == data::DatasetKind::MultilabelSynthetic ||
                              (csv && (x.data.csv_schema.class_column || !x.data.csv_schema.mask_columns.empty()));
  const bool has_reg_labels = x.data.kind == data::DatasetKind::NoisyRegression || x.data.auxiliary_targets > 0 ||
                              (csv && !x.data.csv_schema.target_columns.empty());

  x.model.hidden = c.int_list("model.hidden", x.model.hidden);
  try {
    x.model.activation = nn::parse_activation(c.text("model.activation", "relu"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  auto& l = x.loss;
  l.cls = parse_cls_loss(c.text("loss.cls", has_cls_labels ? "ce" : "none"));
  l.reg = parse_reg_loss(c.text("loss.reg", has_reg_labels ? "l2" : "none"));
  l.cls_schedule = read_schedule(c, "", l.cls == ClassificationLoss::Focal);
  l.reg_schedule = read_schedule(c, "reg_", l.reg == RegressionLoss::Focal);
  const std::string base = c.text("loss.reg_base", "l2");
  if (base == "l1") {
    l.reg_base = RegressionBase::L1;
  } else if (base == "l2") {
    l.reg_base = RegressionBase::L2;
  } else {
    throw ConfigError("loss.reg_base must be l1 or l2");
  }
  const std::string norm = c.text("loss.variance_normalization", "squared");
  if (norm == "squared") {
    l.normalization = VarianceNormalization::Squared;
  } else if (norm == "std") {
    l.normalization = VarianceNormalization::StdDev;
  } else {
    throw ConfigError("loss.variance_normalization must be squared or std");
  }
  const std::string vgrad = c.text("loss.variance_gradient", "detached");
  if (vgrad == "full") {
    l.variance_gradient = VarianceGradient::Full;
  } else if (vgrad == "detached") {
    l.variance_gradient = VarianceGradient::Detached;
  } else {
    throw ConfigError("loss.variance_gradient must be full or detached");
  }
  const bool multilabel = x.data.kind == data::DatasetKind::MultilabelSynthetic ||
                          (csv && !x.data.csv_schema.mask_columns.empty());
  l.policy = parse_policy(c.text("loss.progress_policy", multilabel ? "multi-positive" : "single"));
  l.smoothing = c.number("loss.smoothing", l.smoothing);
  const std::string combine = c.text("loss.combine", "weighted");
  if (combine == "weighted") {
    l.combine = Combine::WeightedSum;
  } else if (combine == "multiloss") {
    l.combine = Combine::Multiloss;
  } else {
    throw ConfigError("loss.combine must be weighted or multiloss");
  }
  l.cls_weight = c.number("loss.cls_weight", l.cls_weight);
  l.reg_weight = c.number("loss.reg_weight", l.reg_weight);
  l.reg_groups = c.int_list("loss.reg_groups", {});
  l.initial_sigma2 = c.number("loss.initial_sigma2", l.initial_sigma2);

  x.optimizer.lr_start = c.number("optim.lr_start", x.optimizer.lr_start);
  x.optimizer.lr_end = c.number("optim.lr_end", x.optimizer.lr_end);
  x.optimizer.decay_steps = c.integer("optim.decay_steps", x.optimizer.decay_steps);

  x.training.steps = c.integer("train.steps", x.training.steps);
  x.training.batch_size = static_cast<int>(c.integer("train.batch_size", x.training.batch_size));
  x.training.eval_every = c.integer("train.eval_every", x.training.eval_every);

  x.convergence.metric = c.text("eval.metric", has_cls_labels ? "val_macro_f1" : "val_clean_mse");
  x.convergence.threshold = c.number("eval.threshold", x.convergence.threshold);
  x.convergence.patience = static_cast<int>(c.integer("eval.patience", x.convergence.patience));
  // Error metrics converge downwards unless told otherwise.
  const bool error_metric = x.convergence.metric.find("mse") != std::string::npos;
  const std::string goal = c.text("eval.goal", error_metric ? "min" : "max");
  if (goal == "max") {
    x.convergence.goal = metrics::Goal::AtLeast;
  } else if (goal == "min") {
    x.convergence.goal = metrics::Goal::AtMost;
  } else {
    throw ConfigError("eval.goal must be max or min");
  }

  x.output_dir = c.text("output.dir", "");
  x.svg = c.flag("output.svg", false);

  c.reject_unused();
  x.validate();
  return x;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) { return from_config(Config::load(path)); }

void ExperimentConfig::validate() const {
  const bool csv = data.kind == data::DatasetKind::CsvFile;
  const bool cls_labels = data.kind == data::DatasetKind::ImbalancedBlobs ||
                          data.kind == data::DatasetKind::MultilabelSynthetic ||
                          (csv && (data.csv_schema.class_column || !data.csv_schema.mask_columns.empty()));
  const bool reg_labels = data.kind == data::DatasetKind::NoisyRegression || data.auxiliary_targets > 0 ||
                          (csv && !data.csv_schema.target_columns.empty());
  if (loss.cls == ClassificationLoss::None && loss.reg == RegressionLoss::None) {
    throw ConfigError("config '" + name + "': no loss selected");
  }
  if (loss.cls != ClassificationLoss::None && !cls_labels) {
    throw ConfigError("config '" + name + "': classification loss without class labels in the dataset");
  }
  if (loss.reg != RegressionLoss::None && !reg_labels) {
    throw ConfigError("config '" + name + "': regression loss without regression targets in the dataset");
  }
  if (loss.combine == Combine::Multiloss && loss.reg == RegressionLoss::Focal) {
    throw ConfigError("config '" + name + "': multiloss combines plain losses; focal regression has its own variance");
  }
  if (!(loss.smoothing >= 0.0 && loss.smoothing < 1.0)) throw ConfigError("loss.smoothing must lie in [0, 1)");
  if (!(loss.initial_sigma2 > 0.0)) throw ConfigError("loss.initial_sigma2 must be positive");
  if (!std::isfinite(loss.cls_weight) || !std::isfinite(loss.reg_weight)) {
    throw ConfigError("loss weights must be finite");
  }
  if (!(optimizer.lr_start > 0.0 && optimizer.lr_end > 0.0)) throw ConfigError("learning rates must be positive");
  if (optimizer.decay_steps < 0) throw ConfigError("optim.decay_steps must be >= 0");
  if (training.steps < 0) throw ConfigError("train.steps must be >= 0");
  if (training.batch_size <= 0) throw ConfigError("train.batch_size must be positive");
  if (training.eval_every <= 0) throw ConfigError("train.eval_every must be positive");
  if (convergence.patience < 1) throw ConfigError("eval.patience must be >= 1");
  for (int h : model.hidden) {
    if (h <= 0) throw ConfigError("model.hidden sizes must be positive");
  }
}

std::map<std::string, std::string> ExperimentConfig::canonical() const {
  std::map<std::string, std::string> m;
  m["name"] = name;
  m["seed"] = std::to_string(seed);
  m["data.kind"] = data::to_string(data.kind);
  m["data.samples"] = std::to_string(data.samples);
  m["data.features"] = std::to_string(data.features);
  m["data.classes"] = std::to_string(data.classes);
  m["data.targets"] = std::to_string(data.targets);
  m["data.imbalance_ratio"] = format_double(data.imbalance_ratio);
  m["data.separation"] = format_double(data.separation);
  m["data.aux_targets"] = std::to_string(data.auxiliary_targets);
  m["data.ground_truth"] = data.ground_truth == data::GroundTruth::Affine ? "affine" : "sinusoidal";
  m["data.label_noise"] = format_double(data.label_noise);
  m["data.outlier_fraction"] = format_double(data.outlier_fraction);
  m["data.outlier_magnitude"] = format_double(data.outlier_magnitude);
  m["data.outlier_sign"] = data.outlier_sign == data::OutlierSign::Symmetric ? "symmetric" : "positive";
  m["data.val_fraction"] = format_double(data.validation_fraction);
  m["data.test_fraction"] = format_double(data.test_fraction);
  m["data.seed"] = std::to_string(data.seed);
  if (data.kind == data::DatasetKind::CsvFile) {
    m["data.csv.path"] = data.csv_path;
    m["data.csv.features"] = join(data.csv_schema.feature_columns);
    if (data.csv_schema.class_column) m["data.csv.class"] = *data.csv_schema.class_column;
    m["data.csv.mask"] = join(data.csv_schema.mask_columns);
    m["data.csv.targets"] = join(data.csv_schema.target_columns);
  }
  m["model.hidden"] = join(model.hidden);
  m["model.activation"] = nn::to_string(model.activation);
  m["loss.cls"] = to_string(loss.cls);
  m["loss.reg"] = to_string(loss.reg);
  if (loss.cls == ClassificationLoss::Focal) {
    m["loss.schedule"] = loss.cls_schedule.describe();
    m["loss.clamp_max"] = format_double(loss.cls_schedule.clamp_max);
  }
  if (loss.reg == RegressionLoss::Focal) {
    m["loss.reg_schedule"] = loss.reg_schedule.describe();
    m["loss.reg_clamp_max"] = format_double(loss.reg_schedule.clamp_max);
  }
  m["loss.reg_base"] = loss.reg_base == RegressionBase::L1 ? "l1" : "l2";
  m["loss.variance_normalization"] = loss.normalization == VarianceNormalization::Squared ? "squared" : "std";
  m["loss.variance_gradient"] = loss.variance_gradient == VarianceGradient::Full ? "full" : "detached";
  m["loss.progress_policy"] = to_string(loss.policy);
  m["loss.smoothing"] = format_double(loss.smoothing);
  m["loss.combine"] = loss.combine == Combine::WeightedSum ? "weighted" : "multiloss";
  m["loss.cls_weight"] = format_double(loss.cls_weight);
  m["loss.reg_weight"] = format_double(loss.reg_weight);
  m["loss.reg_groups"] = join(loss.reg_groups);
  m["loss.initial_sigma2"] = format_double(loss.initial_sigma2);
  m["optim.lr_start"] = format_double(optimizer.lr_start);
  m["optim.lr_end"] = format_double(optimizer.lr_end);
  m["optim.decay_steps"] = std::to_string(optimizer.decay_steps);
  m["train.steps"] = std::to_string(training.steps);
  m["train.batch_size"] = std::to_string(training.batch_size);
  m["train.eval_every"] = std::to_string(training.eval_every);
  m["eval.metric"] = convergence.metric;
  m["eval.threshold"] = format_double(convergence.threshold);
  m["eval.patience"] = std::to_string(convergence.patience);
  m["eval.goal"] = convergence.goal == metrics::Goal::AtLeast ? "max" : "min";
  m["output.svg"] = svg ? "true" : "false";
  return m;
}

void ensure_writable_directory(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory '" + dir + "': " + ec.message());
  const fs::path probe = fs::path(dir) / ".autofocal-write-probe";
  {
    std::ofstream out(probe);
    if (!out || !(out << "ok")) throw std::runtime_error("output directory '" + dir + "' is not writable");
  }
  fs::remove(probe, ec);
}

// ---------------------------------------------------------------------------
// training loop

namespace {

/// Everything one run mutates, owned by a single worker.
class Trainer {
 public:
  Trainer(const ExperimentConfig& config, data::Splits splits)
      : config_(config), splits_(std::move(splits)), model_(make_model()), optimizer_(model_.parameter_count()),
        variance_optimizer_(0),
        cls_tracker_(config.loss.policy, config.loss.smoothing),
        reg_tracker_(ProgressPolicy::SingleTarget, config.loss.smoothing),
        batch_rng_(config.seed ^ 0xc2b2ae3d27d4eb4fULL) {
    init_variances();
    variance_optimizer_ = nn::OptimizerState(static_cast<Eigen::Index>(variances_.size()));
    lr_.start = config.optimizer.lr_start;
    lr_.end = config.optimizer.lr_end;
    lr_.total_steps = config.optimizer.decay_steps > 0 ? config.optimizer.decay_steps : config.training.steps;
    trace_ = metrics::RunTrace(variance_names_, validation_columns());
  }

  RunResult train(const std::string& output_dir);

 private:
  struct StepLoss {
    double total = 0;
    double cls = 0;
    double reg = 0;
    double gamma = 0;
    nn::HeadOutputs head_grads;
    Eigen::VectorXd variance_grads;
  };

  bool has_cls() const { return config_.loss.cls != ClassificationLoss::None; }
  bool has_reg() const { return config_.loss.reg != RegressionLoss::None; }
  bool multilabel() const { return splits_.train.has_mask(); }
  bool focal_groups() const { return config_.loss.reg == RegressionLoss::Focal; }

  nn::Mlp make_model() const;
  void init_variances();
  std::vector<int> regression_groups() const;
  std::vector<std::string> validation_columns() const;
  std::vector<std::pair<std::string, double>> evaluate(const data::Dataset& d, const std::string& prefix) const;
  StepLoss compute_loss(const nn::HeadOutputs& out, const data::Dataset& batch, ProgressTracker<double>& cls_tracker,
                        ProgressTracker<double>& reg_tracker) const;
  double progress_estimate(const ProgressTracker<double>& cls_tracker,
                           const ProgressTracker<double>& reg_tracker) const;
  std::vector<Eigen::Index> next_batch();
  metrics::TraceRecord make_record(std::int64_t step, double lr, const StepLoss& loss,
                                   const ProgressTracker<double>& cls_tracker,
                                   const ProgressTracker<double>& reg_tracker) const;
  void write_outputs(const std::string& dir, RunResult& result) const;

  const ExperimentConfig& config_;
  data::Splits splits_;
  nn::Mlp model_;
  nn::OptimizerState optimizer_;
  std::vector<TaskVariance<double>> variances_;
  std::vector<std::string> variance_names_;
  nn::OptimizerState variance_optimizer_;
  ProgressTracker<double> cls_tracker_;
  ProgressTracker<double> reg_tracker_;
  nn::LrSchedule lr_;
  std::mt19937_64 batch_rng_;
  std::vector<Eigen::Index> order_;
  std::size_t cursor_ = 0;
  metrics::RunTrace trace_;
};

nn::Mlp Trainer::make_model() const {
  nn::MlpSpec spec;
  spec.input_size = static_cast<int>(splits_.train.features.cols());
  spec.hidden = config_.model.hidden;
  spec.hidden_activations.assign(spec.hidden.size(), config_.model.activation);
  if (has_cls()) {
    if (multilabel()) {
      spec.heads.push_back({"cls", static_cast<int>(splits_.train.mask.cols()), nn::Activation::Sigmoid});
    } else {
      if (!splits_.train.has_classes()) throw ConfigError("dataset has no class labels");
      spec.heads.push_back({"cls", splits_.train.class_count, nn::Activation::Softmax});
    }
  }
  if (has_reg()) {
    if (!splits_.train.has_targets()) throw ConfigError("dataset has no regression targets");
    spec.heads.push_back({"reg", static_cast<int>(splits_.train.targets.cols()), nn::Activation::Identity});
  }
  return nn::Mlp(spec, config_.seed);
}

std::vector<int> Trainer::regression_groups() const {
  if (!has_reg()) return {};
  const auto targets = static_cast<std::size_t>(splits_.train.targets.cols());
  if (config_.loss.reg_groups.empty()) return std::vector<int>(targets, 0);
  if (config_.loss.reg_groups.size() != targets) {
    throw ConfigError("loss.reg_groups needs one entry per regression target (" + std::to_string(targets) + ")");
  }
  return config_.loss.reg_groups;
}

void Trainer::init_variances() {
  const auto initial = TaskVariance<double>::from_sigma2(config_.loss.initial_sigma2);
  if (focal_groups()) {
    // RegressionBatch validates contiguity of the group numbering.
    const auto groups = regression_groups();
    const int count = *std::max_element(groups.begin(), groups.end()) + 1;
    for (int g = 0; g < count; ++g) {
      variances_.push_back(initial);
      variance_names_.push_back("g" + std::to_string(g));
    }
  } else if (config_.loss.combine == Combine::Multiloss) {
    if (has_cls()) {
      variances_.push_back(initial);
      variance_names_.emplace_back("cls");
    }
    if (has_reg()) {
      variances_.push_back(initial);
      variance_names_.emplace_back("reg");
    }
  }
}

std::vector<std::string> Trainer::validation_columns() const {
  std::vector<std::string> cols;
  if (has_cls()) {
    cols.insert(cols.end(), {"val_accuracy", "val_macro_f1", "val_minority_recall"});
  }
  if (has_reg()) {
    cols.insert(cols.end(), {"val_mse", "val_clean_mse"});
    if (focal_groups()) {
      for (const auto& g : variance_names_) cols.push_back("val_p_hat." + g);
    }
  }
  return cols;
}

std::vector<std::pair<std::string, double>> Trainer::evaluate(const data::Dataset& d,
                                                              const std::string& prefix) const {
  std::vector<std::pair<std::string, double>> out;
  if (d.size() == 0) return out;
  const nn::HeadOutputs heads = model_.predict(d.features);
  if (has_cls()) {
    const Eigen::MatrixXd& probs = heads.at("cls");
    const metrics::ClassificationReport r =
        multilabel() ? metrics::multilabel_metrics(probs, d.mask)
                     : metrics::classification_metrics(metrics::argmax_rows(probs), d.classes, d.class_count);
    out.emplace_back(prefix + "accuracy", r.accuracy);
    out.emplace_back(prefix + "macro_f1", r.macro_f1);
    out.emplace_back(prefix + "minority_recall", r.minority_recall);
  }
  if (has_reg()) {
    const Eigen::MatrixXd& pred = heads.at("reg");
    out.emplace_back(prefix + "mse", (pred - d.targets).squaredNorm() / double(pred.size()));
    out.emplace_back(prefix + "clean_mse", (pred - d.clean_targets).squaredNorm() / double(pred.size()));
    if (focal_groups()) {
      const RegressionBatch<double> batch(pred, d.targets, regression_groups());
      const auto p = metrics::regression_progress_metric(batch, variances_, config_.loss.normalization);
      for (std::size_t g = 0; g < p.size(); ++g) out.emplace_back(prefix + "p_hat." + variance_names_[g], p[g]);
    }
  }
  return out;
}

Trainer::StepLoss Trainer::compute_loss(const nn::HeadOutputs& out, const data::Dataset& batch,
                                        ProgressTracker<double>& cls_tracker,
                                        ProgressTracker<double>& reg_tracker) const {
  StepLoss step;
  Eigen::MatrixXd cls_grad, reg_grad;
  Eigen::VectorXd reg_variance_grad;
  const auto& loss = config_.loss;

  if (has_cls()) {
    const auto b = multilabel() ? ClassificationBatch<double>::multi_target(out.at("cls"), batch.mask)
                                : ClassificationBatch<double>::single_target(out.at("cls"), batch.classes);
    LossOutput<double> o;
    switch (loss.cls) {
      case ClassificationLoss::Focal: o = focal_classification(b, loss.cls_schedule.make(), cls_tracker); break;
      case ClassificationLoss::AlphaBalanced:
        o = alpha_balanced_classification(b);
        observe_progress(b, cls_tracker);
        break;
      default:
        o = cross_entropy(b);
        observe_progress(b, cls_tracker);
    }
    step.cls = o.total;
    step.gamma = o.diagnostics.gamma;
    cls_grad = std::move(o.grad_wrt_outputs);
  }

  if (has_reg()) {
    const RegressionBatch<double> b(out.at("reg"), batch.targets, regression_groups());
    LossOutput<double> o;
    if (loss.reg == RegressionLoss::Focal) {
      FocalRegressionOptions options{loss.reg_base, loss.normalization, loss.variance_gradient};
      o = focal_regression(b, std::span<const TaskVariance<double>>(variances_), loss.reg_schedule.make(),
                           reg_tracker, options);
      reg_variance_grad = o.grad_wrt_variance;
      if (!has_cls()) step.gamma = o.diagnostics.gamma;
    } else {
      o = regression_loss(b, loss.reg == RegressionLoss::L1 ? RegressionBase::L1 : RegressionBase::L2);
      // Progress of a plain regression run is reported against the initial variance.
      const std::vector<TaskVariance<double>> reference(
          static_cast<std::size_t>(b.group_count()), TaskVariance<double>::from_sigma2(loss.initial_sigma2));
      reg_tracker = update_progress(reg_tracker, regression_p_correct(b, std::span<const TaskVariance<double>>(reference),
                                                                      loss.normalization));
    }
    step.reg = o.total;
    reg_grad = std::move(o.grad_wrt_outputs);
  }

  step.variance_grads = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(variances_.size()));
  double cls_scale = 1.0, reg_scale = 1.0;
  if (loss.combine == Combine::Multiloss) {
    std::vector<std::pair<double, TaskVariance<double>>> tasks;
    if (has_cls()) tasks.emplace_back(step.cls, variances_[tasks.size()]);
    if (has_reg()) tasks.emplace_back(step.reg, variances_[tasks.size()]);
    const std::span<const std::pair<double, TaskVariance<double>>> view(tasks);
    step.total = multiloss_combine(view);
    const auto g = multiloss_gradient(view);
    Eigen::Index k = 0;
    if (has_cls()) cls_scale = g.d_loss(k++);
    if (has_reg()) reg_scale = g.d_loss(k++);
    step.variance_grads = g.d_variance;
  } else if (has_cls() && has_reg()) {
    const std::pair<double, double> parts[] = {{step.cls, loss.cls_weight}, {step.reg, loss.reg_weight}};
    step.total = weighted_sum_loss(std::span<const std::pair<double, double>>(parts));
    cls_scale = loss.cls_weight;
    reg_scale = loss.reg_weight;
  } else {
    step.total = has_cls() ? step.cls : step.reg;
  }
  if (reg_variance_grad.size() > 0) step.variance_grads = reg_scale * reg_variance_grad;
  if (has_cls()) step.head_grads["cls"] = cls_scale * cls_grad;
  if (has_reg()) step.head_grads["reg"] = reg_scale * reg_grad;
  return step;
}

double Trainer::progress_estimate(const ProgressTracker<double>& cls_tracker,
                                  const ProgressTracker<double>& reg_tracker) const {
  const auto& t = has_cls() ? cls_tracker : reg_tracker;
  return t.initialized() ? t.smoothed()->value() : 0.0;
}

std::vector<Eigen::Index> Trainer::next_batch() {
  const auto n = static_cast<std::size_t>(splits_.train.size());
  const std::size_t size = std::min<std::size_t>(static_cast<std::size_t>(config_.training.batch_size), n);
  std::vector<Eigen::Index> rows;
  rows.reserve(size);
  while (rows.size() < size) {
    if (cursor_ >= order_.size()) {
      order_.resize(n);
      std::iota(order_.begin(), order_.end(), Eigen::Index{0});
      std::shuffle(order_.begin(), order_.end(), batch_rng_);
      cursor_ = 0;
    }
    rows.push_back(order_[cursor_++]);
  }
  return rows;
}

metrics::TraceRecord Trainer::make_record(std::int64_t step, double lr, const StepLoss& loss,
                                          const ProgressTracker<double>& cls_tracker,
                                          const ProgressTracker<double>& reg_tracker) const {
  metrics::TraceRecord r;
  r.step = step;
  r.lr = lr;
  r.loss_total = loss.total;
  r.loss_cls = loss.cls;
  r.loss_reg = loss.reg;
  r.gamma = loss.gamma;
  r.p_hat = progress_estimate(cls_tracker, reg_tracker);
  for (const auto& v : variances_) r.sigma2.push_back(v.sigma2());
  r.validation.assign(trace_.validation_columns().size(), std::nullopt);
  return r;
}

bool finite_step(double total, const nn::HeadOutputs& grads, const Eigen::VectorXd& variance_grads) {
  if (!std::isfinite(total) || !variance_grads.allFinite()) return false;
  for (const auto& [name, g] : grads) {
    if (!g.allFinite()) return false;
  }
  return true;
}

RunResult Trainer::train(const std::string& output_dir) {
  using clock = std::chrono::steady_clock;
  const auto fill_validation = [&](metrics::TraceRecord& r) {
    const auto values = evaluate(splits_.validation, "val_");
    for (std::size_t k = 0; k < values.size(); ++k) r.validation[k] = values[k].second;
  };

  // Step 0: the initial model, with the loss of the first batch evaluated on
  // tracker copies so training starts from untouched state.
  {
    const auto start = clock::now();
    const auto rows = next_batch();
    cursor_ = 0;  // the first training step sees the same batch
    const data::Dataset batch = splits_.train.subset(rows);
    auto cls_copy = cls_tracker_;
    auto reg_copy = reg_tracker_;
    const StepLoss loss = compute_loss(model_.predict(batch.features), batch, cls_copy, reg_copy);
    if (!finite_step(loss.total, loss.head_grads, loss.variance_grads)) {
      throw TrainingAborted("non-finite loss for the initial model", 0);
    }
    auto record = make_record(0, nn::lr_at(lr_, 0), loss, cls_copy, reg_copy);
    fill_validation(record);
    record.wall_seconds = std::chrono::duration<double>(clock::now() - start).count();
    trace_.append(std::move(record));
  }

  for (std::int64_t step = 1; step <= config_.training.steps; ++step) {
    const auto start = clock::now();
    const double lr = nn::lr_at(lr_, step - 1);
    const data::Dataset batch = splits_.train.subset(next_batch());
    const nn::HeadOutputs& out = model_.forward(batch.features);
    const StepLoss loss = compute_loss(out, batch, cls_tracker_, reg_tracker_);
    if (!finite_step(loss.total, loss.head_grads, loss.variance_grads)) {
      const auto& last = trace_.records().back();
      std::ostringstream msg;
      msg << "non-finite loss at step " << step << "; last good step " << last.step
          << ": loss_total=" << format_double(last.loss_total) << " gamma=" << format_double(last.gamma)
          << " p_hat=" << format_double(last.p_hat);
      if (!output_dir.empty()) metrics::write_trace_csv(trace_, (fs::path(output_dir) / "trace.csv").string());
      throw TrainingAborted(msg.str(), last.step);
    }
    const Eigen::VectorXd grads = model_.backward(loss.head_grads);
    nn::adam_step(optimizer_, model_.mutable_parameters(), grads, lr);
    if (!variances_.empty()) {
      Eigen::VectorXd s(static_cast<Eigen::Index>(variances_.size()));
      for (std::size_t g = 0; g < variances_.size(); ++g) s(static_cast<Eigen::Index>(g)) = variances_[g].s;
      nn::adam_step(variance_optimizer_, s, loss.variance_grads, lr);
      for (std::size_t g = 0; g < variances_.size(); ++g) variances_[g].s = s(static_cast<Eigen::Index>(g));
    }
    auto record = make_record(step, lr, loss, cls_tracker_, reg_tracker_);
    if (step % config_.training.eval_every == 0 || step == config_.training.steps) fill_validation(record);
    record.wall_seconds = std::chrono::duration<double>(clock::now() - start).count();
    trace_.append(std::move(record));
  }

  RunResult result{trace_, model_, {}, evaluate(splits_.test, "test_"), std::nullopt, {}};
  for (const auto& v : variances_) result.final_sigma2.push_back(v.sigma2());
  if (trace_.has_metric(config_.convergence.metric)) {
    result.convergence = metrics::convergence_step(trace_, config_.convergence.metric, config_.convergence.threshold,
                                                   config_.convergence.patience, config_.convergence.goal);
  }
  if (!output_dir.empty()) write_outputs(output_dir, result);
  return result;
}

void Trainer::write_outputs(const std::string& dir, RunResult& result) const {
  const fs::path root(dir);
  const auto trace_path = (root / "trace.csv").string();
  metrics::write_trace_csv(trace_, trace_path);
  result.files.push_back(trace_path);

  const auto model_path = (root / "model.ckpt").string();
  nn::save_checkpoint(model_, model_path);
  result.files.push_back(model_path);

  const auto config_path = (root / "config.resolved").string();
  {
    std::ofstream out(config_path, std::ios::binary);
    for (const auto& [key, value] : config_.canonical()) out << key << " = " << value << '\n';
  }
  result.files.push_back(config_path);

  const auto summary_path = (root / "summary.txt").string();
  {
    std::ofstream out(summary_path, std::ios::binary);
    const auto& last = trace_.records().back();
    out << "name: " << config_.name << '\n';
    out << "steps: " << last.step << '\n';
    out << "final loss_total: " << format_double(last.loss_total) << '\n';
    out << "final gamma: " << format_double(last.gamma) << '\n';
    out << "final p_hat: " << format_double(last.p_hat) << '\n';
    for (std::size_t g = 0; g < variance_names_.size(); ++g) {
      out << "final sigma2." << variance_names_[g] << ": " << format_double(result.final_sigma2[g]) << '\n';
    }
    for (const auto& [name, value] : result.test_metrics) out << name << ": " << format_double(value) << '\n';
    out << "convergence (" << config_.convergence.metric << goal_symbol(config_.convergence.goal)
        << format_double(config_.convergence.threshold)
        << ", patience " << config_.convergence.patience << "): "
        << (result.convergence ? std::to_string(*result.convergence) : std::string("none")) << '\n';
  }
  result.files.push_back(summary_path);

  if (config_.svg) {
    auto series_of = [&](const std::string& metric) {
      svg::Series s{metric, {}, {}};
      for (const auto& [step, value] : trace_.series(metric)) {
        s.x.push_back(double(step));
        s.y.push_back(value);
      }
      return s;
    };
    const auto loss_svg = (root / "loss.svg").string();
    svg::write_line_plot(loss_svg, config_.name + ": loss", "step", {series_of("loss_total")});
    const auto gamma_svg = (root / "gamma.svg").string();
    svg::write_line_plot(gamma_svg, config_.name + ": gamma", "step", {series_of("gamma")});
    const auto p_hat_svg = (root / "p_hat.svg").string();
    svg::write_line_plot(p_hat_svg, config_.name + ": smoothed p_correct", "step", {series_of("p_hat")});
    result.files.insert(result.files.end(), {loss_svg, gamma_svg, p_hat_svg});
    if (!variance_names_.empty()) {
      std::vector<svg::Series> sigma;
      for (const auto& g : variance_names_) sigma.push_back(series_of("sigma2." + g));
      const auto sigma_svg = (root / "sigma2.svg").string();
      svg::write_line_plot(sigma_svg, config_.name + ": learned variance", "step", sigma);
      result.files.push_back(sigma_svg);
    }
  }
}

}  // namespace

RunResult run(const ExperimentConfig& config, const std::string& output_dir) {
  config.validate();
  if (!output_dir.empty()) ensure_writable_directory(output_dir);
  data::Splits splits;
  try {
    splits = data::generate(config.data);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("dataset: ") + e.what());
  }
  Trainer trainer(config, std::move(splits));
  return trainer.train(output_dir);
}

// ---------------------------------------------------------------------------
// comparisons

void check_comparable(const std::vector<ExperimentConfig>& configs) {
  if (configs.empty()) throw ConfigError("compare: no configs given");
  auto shared = [](const ExperimentConfig& c) {
    auto m = c.canonical();
    for (auto it = m.begin(); it != m.end();) {
      if (it->first == "name" || it->first.rfind("loss.", 0) == 0 || it->first.rfind("output.", 0) == 0) {
        it = m.erase(it);
      } else {
        ++it;
      }
    }
    return m;
  };
  const auto reference = shared(configs.front());
  for (std::size_t i = 1; i < configs.size(); ++i) {
    const auto other = shared(configs[i]);
    for (const auto& [key, value] : reference) {
      const auto it = other.find(key);
      if (it == other.end() || it->second != value) {
        throw ConfigError("compare: '" + configs[i].name + "' differs from '" + configs.front().name + "' in " + key +
                          " (" + (it == other.end() ? std::string("missing") : it->second) + " vs " + value +
                          "); only loss settings may differ");
      }
    }
  }
}

ComparisonReport compare(const std::vector<ExperimentConfig>& configs, const std::string& output_dir,
                         unsigned workers) {
  check_comparable(configs);
  if (!output_dir.empty()) ensure_writable_directory(output_dir);

  std::vector<std::optional<RunResult>> results(configs.size());
  std::vector<std::exception_ptr> errors(configs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < configs.size(); i = next++) {
      try {
        const std::string dir =
            output_dir.empty() ? std::string() : (fs::path(output_dir) / (std::to_string(i) + "-" + configs[i].name)).string();
        results[i] = run(configs[i], dir);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned count = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(configs.size())));
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < count; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  ComparisonReport report;
  report.convergence_metric = configs.front().convergence.metric;
  report.convergence_threshold = configs.front().convergence.threshold;
  report.convergence_goal = configs.front().convergence.goal;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    const auto& c = configs[i];
    ComparisonRow row;
    row.name = c.name;
    row.cls_loss = to_string(c.loss.cls);
    row.reg_loss = to_string(c.loss.reg);
    if (c.loss.cls == ClassificationLoss::Focal) {
      row.schedule = c.loss.cls_schedule.describe();
    } else if (c.loss.reg == RegressionLoss::Focal) {
      row.schedule = c.loss.reg_schedule.describe();
    } else {
      row.schedule = "-";
    }
    row.convergence = results[i]->convergence;
    row.test_metrics = results[i]->test_metrics;
    report.rows.push_back(std::move(row));
  }
  if (!output_dir.empty()) {
    write_comparison_csv(report, (fs::path(output_dir) / "compare.csv").string());
    std::ofstream out(fs::path(output_dir) / "compare.txt", std::ios::binary);
    out << format_comparison(report);
  }
  return report;
}

namespace {

std::vector<std::string> metric_columns(const ComparisonReport& report) {
  std::vector<std::string> cols;
  for (const auto& row : report.rows) {
    for (const auto& [name, value] : row.test_metrics) {
      if (std::find(cols.begin(), cols.end(), name) == cols.end()) cols.push_back(name);
    }
  }
  return cols;
}

std::optional<double> metric_value(const ComparisonRow& row, const std::string& name) {
  for (const auto& [n, v] : row.test_metrics) {
    if (n == name) return v;
  }
  return std::nullopt;
}

}  // namespace

void write_comparison_csv(const ComparisonReport& report, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("compare: cannot write " + path);
  const auto cols = metric_columns(report);
  out << "name,loss_cls,loss_reg,schedule,convergence_step";
  for (const auto& c : cols) out << ',' << c;
  out << '\n';
  for (const auto& row : report.rows) {
    out << row.name << ',' << row.cls_loss << ',' << row.reg_loss << ',' << row.schedule << ',';
    if (row.convergence) out << *row.convergence;
    for (const auto& c : cols) {
      out << ',';
      if (const auto v = metric_value(row, c)) out << format_double(*v);
    }
    out << '\n';
  }
}

std::string format_comparison(const ComparisonReport& report) {
  const auto cols = metric_columns(report);
  std::vector<std::string> header{"name", "cls", "reg", "schedule", "converged@"};
  header.insert(header.end(), cols.begin(), cols.end());
  std::vector<std::vector<std::string>> cells;
  for (const auto& row : report.rows) {
    std::vector<std::string> line{row.name, row.cls_loss, row.reg_loss, row.schedule,
                                  row.convergence ? std::to_string(*row.convergence) : "never"};
    for (const auto& c : cols) {
      char buf[32] = "-";
      if (const auto v = metric_value(row, c)) std::snprintf(buf, sizeof buf, "%.4f", *v);
      line.emplace_back(buf);
    }
    cells.push_back(std::move(line));
  }
  std::vector<std::size_t> width(header.size());
  for (std::size_t k = 0; k < header.size(); ++k) {
    width[k] = header[k].size();
    for (const auto& line : cells) width[k] = std::max(width[k], line[k].size());
  }
  std::ostringstream o;
  o << "convergence: first step with " << report.convergence_metric << goal_symbol(report.convergence_goal)
    << format_threshold(report.convergence_threshold) << '\n';
  auto emit = [&](const std::vector<std::string>& line) {
    for (std::size_t k = 0; k < line.size(); ++k) {
      o << line[k] << std::string(width[k] - line[k].size() + 2, ' ');
    }
    o << '\n';
  };
  emit(header);
  for (const auto& line : cells) emit(line);
  return o.str();
}

// ---------------------------------------------------------------------------
// gamma curves and data files

GammaTable gamma_trace(const std::vector<GammaSchedule<double>>& schedules, const std::vector<double>& grid) {
  for (double p : grid) {
    if (!(p > 0.0 && p < 1.0)) throw std::domain_error("gamma_trace: grid values must lie in (0, 1)");
  }
  GammaTable table;
  table.p_hat = grid;
  for (const auto& s : schedules) {
    table.names.push_back(s.describe());
    std::vector<double> column;
    column.reserve(grid.size());
    for (double p : grid) column.push_back(s(p));
    table.gamma.push_back(std::move(column));
  }
  return table;
}

GammaSchedule<double> parse_schedule(const std::string& text) {
  auto parts = split_list(text, ',');
  if (parts.empty()) throw ConfigError("empty schedule");
  double clamp = kDefaultGammaClamp;
  for (std::size_t k = 1; k < parts.size(); ++k) {
    if (parts[k].rfind("clamp=", 0) != 0) throw ConfigError("unknown schedule option '" + parts[k] + "'");
    clamp = data::parse_double(parts[k].substr(6), 0, 0);
  }
  const std::string& head = parts[0];
  const auto colon = head.find(':');
  const std::string kind = head.substr(0, colon);
  try {
    if (kind == "info" && colon == std::string::npos) return GammaSchedule<double>::info(clamp);
    if (colon != std::string::npos) {
      const double value = data::parse_double(head.substr(colon + 1), 0, 0);
      if (kind == "quantile") return GammaSchedule<double>::quantile(value, clamp);
      if (kind == "fixed") return GammaSchedule<double>(schedule::Fixed<double>{value}, clamp);
    }
  } catch (const std::domain_error& e) {
    throw ConfigError(std::string("schedule '") + text + "': " + e.what());
  } catch (const data::CsvError&) {
    throw ConfigError("schedule '" + text + "': bad number");
  }
  throw ConfigError("schedule must be info, quantile:<h> or fixed:<gamma> (got '" + text + "')");
}

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> grid;
  try {
    if (text.find(':') != std::string::npos) {
      const auto parts = split_list(text, ':');
      if (parts.size() != 3) throw ConfigError("grid range must be start:stop:step");
      const double start = data::parse_double(parts[0], 0, 0);
      const double stop = data::parse_double(parts[1], 0, 0);
      const double step = data::parse_double(parts[2], 0, 0);
      if (!(step > 0.0)) throw ConfigError("grid step must be positive");
      const auto n = static_cast<long>(std::floor((stop - start) / step + 1e-9));
      for (long k = 0; k <= n; ++k) grid.push_back(start + double(k) * step);
    } else {
      for (const auto& item : split_list(text, ',')) grid.push_back(data::parse_double(item, 0, 0));
    }
  } catch (const data::CsvError&) {
    throw ConfigError("grid '" + text + "' contains a value that is not a number");
  }
  if (grid.empty()) throw ConfigError("grid '" + text + "' is empty");
  for (double p : grid) {
    if (!(p > 0.0 && p < 1.0)) throw ConfigError("grid values must lie in (0, 1)");
  }
  return grid;
}

void write_gamma_csv(const GammaTable& table, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("gamma-trace: cannot write " + path);
  out << "p_hat";
  for (const auto& n : table.names) out << ",gamma." << n;
  out << '\n';
  for (std::size_t i = 0; i < table.p_hat.size(); ++i) {
    out << format_double(table.p_hat[i]);
    for (const auto& column : table.gamma) out << ',' << format_double(column[i]);
    out << '\n';
  }
}

std::vector<std::string> generate_data_files(const data::DatasetSpec& spec, const std::string& output_dir) {
  ensure_writable_directory(output_dir);
  const data::Splits splits = data::generate(spec);
  std::vector<std::string> files;
  const std::pair<const char*, const data::Dataset*> parts[] = {
      {"train.csv", &splits.train}, {"validation.csv", &splits.validation}, {"test.csv", &splits.test}};
  for (const auto& [name, dataset] : parts) {
    const auto path = (fs::path(output_dir) / name).string();
    data::export_csv(*dataset, path);
    files.push_back(path);
  }
  return files;
}

}  // namespace autofocal::harness
