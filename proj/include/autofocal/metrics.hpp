#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "autofocal/losses.hpp"

namespace autofocal::metrics {

struct ClassificationReport {
  double accuracy = 0;
  Eigen::VectorXd precision;
  Eigen::VectorXd recall;
  Eigen::VectorXd f1;
  double macro_f1 = 0;
  /// Recall of the least frequent class present in the labels (the active
  /// label for multi-target reports).
  double minority_recall = 0;
  int minority_class = 0;
  /// Classes that were never predicted; their precision is reported as 0.
  std::vector<bool> never_predicted;
};

Eigen::VectorXi argmax_rows(const Eigen::MatrixXd& probabilities);

ClassificationReport classification_metrics(const Eigen::VectorXi& predicted, const Eigen::VectorXi& labels,
                                            int class_count);

/// Per-class binary metrics for multi-target outputs thresholded at `threshold`;
/// precision/recall/F1 refer to the active label of each class.
ClassificationReport multilabel_metrics(const Eigen::MatrixXd& probabilities, const Eigen::MatrixXd& mask,
                                        double threshold = 0.5);

/// Mean regression p_correct per target group. It does not depend on the
/// value range of the task as long as sigma^2 scales with it.
std::vector<double> regression_progress_metric(const RegressionBatch<double>& batch,
                                               std::span<const TaskVariance<double>> variances,
                                               VarianceNormalization normalization = VarianceNormalization::Squared);

struct TraceRecord {
  std::int64_t step = 0;
  double lr = 0;
  double loss_total = 0;
  double loss_cls = 0;
  double loss_reg = 0;
  double gamma = 0;
  double p_hat = 0;
  std::vector<double> sigma2;
  std::vector<std::optional<double>> validation;
  double wall_seconds = 0;  // not serialized
};

/// Time series of one training run. Column order in CSV form: step, lr,
/// loss_total, loss_cls, loss_reg, gamma, p_hat, sigma2.<group>..., then the
/// validation columns.
class RunTrace {
 public:
  RunTrace() = default;
  RunTrace(std::vector<std::string> sigma2_groups, std::vector<std::string> validation_columns);

  const std::vector<std::string>& sigma2_groups() const { return sigma2_groups_; }
  const std::vector<std::string>& validation_columns() const { return validation_columns_; }
  const std::vector<TraceRecord>& records() const { return records_; }
  std::vector<TraceRecord>& mutable_records() { return records_; }

  /// Appends a record; steps must increase strictly, gamma and p_hat must be finite.
  void append(TraceRecord record);

  bool has_metric(const std::string& name) const;
  /// (step, value) pairs for a named column, skipping rows where it is empty.
  std::vector<std::pair<std::int64_t, double>> series(const std::string& name) const;

  std::vector<std::string> header() const;

 private:
  std::vector<std::string> sigma2_groups_;
  std::vector<std::string> validation_columns_;
  std::vector<TraceRecord> records_;
};

void write_trace_csv(const RunTrace& trace, std::ostream& out);
void write_trace_csv(const RunTrace& trace, const std::string& path);
RunTrace read_trace_csv(const std::string& path);
RunTrace parse_trace_csv(const std::string& text);

enum class Goal { AtLeast, AtMost };

/// Earliest step at which `metric` is >= threshold (<= for Goal::AtMost) for
/// `patience` consecutive recorded values, or nothing. Throws
/// std::invalid_argument for an unknown metric.
std::optional<std::int64_t> convergence_step(const RunTrace& trace, const std::string& metric, double threshold,
                                             int patience, Goal goal = Goal::AtLeast);

}  // namespace autofocal::metrics
