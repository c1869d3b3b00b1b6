#include "autofocal/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "autofocal/data.hpp"

namespace autofocal::metrics {

Eigen::VectorXi argmax_rows(const Eigen::MatrixXd& probabilities) {
  Eigen::VectorXi out(probabilities.rows());
  for (Eigen::Index i = 0; i < probabilities.rows(); ++i) {
    Eigen::Index best = 0;
    probabilities.row(i).maxCoeff(&best);
    out(i) = static_cast<int>(best);
  }
  return out;
}

namespace {

void finish_report(ClassificationReport& r, const Eigen::VectorXd& tp, const Eigen::VectorXd& predicted,
                   const Eigen::VectorXd& support) {
  const Eigen::Index k = tp.size();
  r.precision.resize(k);
  r.recall.resize(k);
  r.f1.resize(k);
  r.never_predicted.assign(static_cast<std::size_t>(k), false);
  for (Eigen::Index c = 0; c < k; ++c) {
    r.never_predicted[static_cast<std::size_t>(c)] = predicted(c) == 0;
    r.precision(c) = predicted(c) > 0 ? tp(c) / predicted(c) : 0.0;
    r.recall(c) = support(c) > 0 ? tp(c) / support(c) : 0.0;
    const double denom = r.precision(c) + r.recall(c);
    r.f1(c) = denom > 0 ? 2.0 * r.precision(c) * r.recall(c) / denom : 0.0;
  }
  r.macro_f1 = k > 0 ? r.f1.mean() : 0.0;
}

}  // namespace

ClassificationReport classification_metrics(const Eigen::VectorXi& predicted, const Eigen::VectorXi& labels,
                                            int class_count) {
  if (predicted.size() != labels.size()) throw std::invalid_argument("classification_metrics: shape mismatch");
  if (labels.size() == 0) throw std::invalid_argument("classification_metrics: no samples");
  if (class_count <= 0) throw std::invalid_argument("classification_metrics: class count must be positive");
  Eigen::VectorXd tp = Eigen::VectorXd::Zero(class_count);
  Eigen::VectorXd pred = Eigen::VectorXd::Zero(class_count);
  Eigen::VectorXd support = Eigen::VectorXd::Zero(class_count);
  double correct = 0;
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    const int y = labels(i);
    const int p = predicted(i);
    if (y < 0 || y >= class_count || p < 0 || p >= class_count) {
      throw std::invalid_argument("classification_metrics: class index out of range");
    }
    support(y) += 1;
    pred(p) += 1;
    if (y == p) {
      tp(y) += 1;
      correct += 1;
    }
  }
  ClassificationReport r;
  r.accuracy = correct / double(labels.size());
  finish_report(r, tp, pred, support);
  int minority = -1;
  for (int c = 0; c < class_count; ++c) {
    if (support(c) > 0 && (minority < 0 || support(c) < support(minority))) minority = c;
  }
  r.minority_class = minority;
  r.minority_recall = r.recall(minority);
  return r;
}

ClassificationReport multilabel_metrics(const Eigen::MatrixXd& probabilities, const Eigen::MatrixXd& mask,
                                        double threshold) {
  if (probabilities.rows() != mask.rows() || probabilities.cols() != mask.cols()) {
    throw std::invalid_argument("multilabel_metrics: shape mismatch");
  }
  if (probabilities.size() == 0) throw std::invalid_argument("multilabel_metrics: no samples");
  const Eigen::ArrayXXd predicted = (probabilities.array() >= threshold).cast<double>();
  const Eigen::ArrayXXd active = (mask.array() > 0.5).cast<double>();
  ClassificationReport r;
  r.accuracy = (predicted == active).cast<double>().mean();
  const Eigen::VectorXd tp = (predicted * active).colwise().sum().transpose();
  finish_report(r, tp, predicted.colwise().sum().transpose(), active.colwise().sum().transpose());
  const double all_active = active.sum();
  r.minority_recall = all_active > 0 ? tp.sum() / all_active : 0.0;
  r.minority_class = -1;
  return r;
}

std::vector<double> regression_progress_metric(const RegressionBatch<double>& batch,
                                               std::span<const TaskVariance<double>> variances,
                                               VarianceNormalization normalization) {
  const Eigen::MatrixXd pc = regression_p_correct(batch, variances, normalization);
  std::vector<double> sum(static_cast<std::size_t>(batch.group_count()), 0.0);
  std::vector<double> count(sum.size(), 0.0);
  for (Eigen::Index t = 0; t < pc.cols(); ++t) {
    const auto g = static_cast<std::size_t>(batch.groups()[static_cast<std::size_t>(t)]);
    sum[g] += pc.col(t).sum();
    count[g] += double(pc.rows());
  }
  for (std::size_t g = 0; g < sum.size(); ++g) sum[g] /= count[g];
  return sum;
}

RunTrace::RunTrace(std::vector<std::string> sigma2_groups, std::vector<std::string> validation_columns)
    : sigma2_groups_(std::move(sigma2_groups)), validation_columns_(std::move(validation_columns)) {}

void RunTrace::append(TraceRecord record) {
  if (!records_.empty() && record.step <= records_.back().step) {
    throw std::invalid_argument("trace: steps must increase strictly");
  }
  if (!std::isfinite(record.gamma) || !std::isfinite(record.p_hat)) {
    throw std::invalid_argument("trace: gamma and p_hat must be finite");
  }
  if (record.p_hat < 0.0 || record.p_hat > 1.0) throw std::invalid_argument("trace: p_hat outside [0, 1]");
  if (record.sigma2.size() != sigma2_groups_.size() || record.validation.size() != validation_columns_.size()) {
    throw std::invalid_argument("trace: record does not match the trace columns");
  }
  records_.push_back(std::move(record));
}

std::vector<std::string> RunTrace::header() const {
  std::vector<std::string> h{"step", "lr", "loss_total", "loss_cls", "loss_reg", "gamma", "p_hat"};
  for (const auto& g : sigma2_groups_) h.push_back("sigma2." + g);
  h.insert(h.end(), validation_columns_.begin(), validation_columns_.end());
  return h;
}

bool RunTrace::has_metric(const std::string& name) const {
  const auto h = header();
  return std::find(h.begin(), h.end(), name) != h.end();
}

std::vector<std::pair<std::int64_t, double>> RunTrace::series(const std::string& name) const {
  const auto h = header();
  const auto it = std::find(h.begin(), h.end(), name);
  if (it == h.end()) throw std::invalid_argument("trace: unknown metric '" + name + "'");
  const auto column = static_cast<std::size_t>(it - h.begin());
  std::vector<std::pair<std::int64_t, double>> out;
  out.reserve(records_.size());
  for (const auto& r : records_) {
    std::optional<double> v;
    switch (column) {
      case 0: v = double(r.step); break;
      case 1: v = r.lr; break;
      case 2: v = r.loss_total; break;
      case 3: v = r.loss_cls; break;
      case 4: v = r.loss_reg; break;
      case 5: v = r.gamma; break;
      case 6: v = r.p_hat; break;
      default:
        if (column - 7 < sigma2_groups_.size()) {
          v = r.sigma2[column - 7];
        } else {
          v = r.validation[column - 7 - sigma2_groups_.size()];
        }
    }
    if (v) out.emplace_back(r.step, *v);
  }
  return out;
}

void write_trace_csv(const RunTrace& trace, std::ostream& out) {
  const auto h = trace.header();
  for (std::size_t k = 0; k < h.size(); ++k) out << (k ? "," : "") << h[k];
  out << '\n';
  using data::format_double;
  for (const auto& r : trace.records()) {
    out << r.step << ',' << format_double(r.lr) << ',' << format_double(r.loss_total) << ','
        << format_double(r.loss_cls) << ',' << format_double(r.loss_reg) << ',' << format_double(r.gamma) << ','
        << format_double(r.p_hat);
    for (double s : r.sigma2) out << ',' << format_double(s);
    for (const auto& v : r.validation) {
      out << ',';
      if (v) out << format_double(*v);
    }
    out << '\n';
  }
}

void write_trace_csv(const RunTrace& trace, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("trace: cannot write " + path);
  write_trace_csv(trace, out);
  if (!out) throw std::runtime_error("trace: write failed for " + path);
}

RunTrace parse_trace_csv(const std::string& text) {
  const data::CsvTable table = data::parse_csv_table(text);
  static const std::vector<std::string> fixed{"step", "lr", "loss_total", "loss_cls", "loss_reg", "gamma", "p_hat"};
  if (table.header.size() < fixed.size() || !std::equal(fixed.begin(), fixed.end(), table.header.begin())) {
    throw data::CsvError("trace: unexpected header", 1, 0);
  }
  std::vector<std::string> groups, validation;
  std::size_t c = fixed.size();
  for (; c < table.header.size() && table.header[c].rfind("sigma2.", 0) == 0; ++c) {
    groups.push_back(table.header[c].substr(7));
  }
  for (; c < table.header.size(); ++c) validation.push_back(table.header[c]);

  RunTrace trace(groups, validation);
  std::size_t line = 1;
  for (const auto& row : table.rows) {
    ++line;
    auto num = [&](std::size_t col) { return data::parse_double(row[col], line, col + 1); };
    TraceRecord r;
    r.step = static_cast<std::int64_t>(num(0));
    r.lr = num(1);
    r.loss_total = num(2);
    r.loss_cls = num(3);
    r.loss_reg = num(4);
    r.gamma = num(5);
    r.p_hat = num(6);
    for (std::size_t g = 0; g < groups.size(); ++g) r.sigma2.push_back(num(fixed.size() + g));
    for (std::size_t v = 0; v < validation.size(); ++v) {
      const std::size_t col = fixed.size() + groups.size() + v;
      r.validation.push_back(row[col].empty() ? std::nullopt : std::optional<double>(num(col)));
    }
    trace.append(std::move(r));
  }
  return trace;
}

RunTrace read_trace_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("trace: cannot open " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_trace_csv(text.str());
}

std::optional<std::int64_t> convergence_step(const RunTrace& trace, const std::string& metric, double threshold,
                                             int patience, Goal goal) {
  if (patience < 1) throw std::invalid_argument("convergence_step: patience must be >= 1");
  const auto values = trace.series(metric);
  int run = 0;
  for (std::size_t k = 0; k < values.size(); ++k) {
    const bool reached = goal == Goal::AtLeast ? values[k].second >= threshold : values[k].second <= threshold;
    run = reached ? run + 1 : 0;
    if (run == patience) return values[k + 1 - static_cast<std::size_t>(patience)].first;
  }
  return std::nullopt;
}

}  // namespace autofocal::metrics
