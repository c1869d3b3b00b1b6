#pragma once

// Trainable losses. Every loss returns its mean-reduced value together with the
// gradient with respect to the model outputs it was given (probabilities for
// classification, raw predictions for regression). Focal weights are treated
// as constants in every output gradient.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "autofocal/focal_core.hpp"
#include "autofocal/normal_cdf.hpp"

namespace autofocal {

template <std::floating_point Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <std::floating_point Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Lower clamp applied to p_correct before taking logarithms.
inline constexpr double kProbabilityEpsilon = 1e-7;

enum class TargetKind { SingleTarget, MultiTarget };

/// Model probabilities with their labels. Single-target batches carry one class
/// index per sample and rows summing to one; multi-target batches carry a
/// binary mask with one independent probability per class.
template <std::floating_point Scalar>
class ClassificationBatch {
 public:
  static ClassificationBatch single_target(MatrixX<Scalar> probabilities, Eigen::VectorXi labels) {
    ClassificationBatch batch;
    batch.kind_ = TargetKind::SingleTarget;
    batch.probs_ = std::move(probabilities);
    batch.labels_ = std::move(labels);
    batch.validate();
    return batch;
  }

  static ClassificationBatch multi_target(MatrixX<Scalar> probabilities, MatrixX<Scalar> mask) {
    ClassificationBatch batch;
    batch.kind_ = TargetKind::MultiTarget;
    batch.probs_ = std::move(probabilities);
    batch.mask_ = std::move(mask);
    batch.validate();
    return batch;
  }

  TargetKind kind() const { return kind_; }
  Eigen::Index samples() const { return probs_.rows(); }
  Eigen::Index classes() const { return probs_.cols(); }
  const MatrixX<Scalar>& probabilities() const { return probs_; }
  const Eigen::VectorXi& labels() const { return labels_; }
  const MatrixX<Scalar>& mask() const { return mask_; }

  /// Correct probability per loss element: samples x 1 (single) or samples x classes (multi).
  MatrixX<Scalar> correct_probabilities() const {
    if (kind_ == TargetKind::SingleTarget) {
      MatrixX<Scalar> pc(samples(), 1);
      for (Eigen::Index i = 0; i < samples(); ++i) pc(i, 0) = probs_(i, labels_(i));
      return pc;
    }
    return (mask_.array() > Scalar(0.5)).select(probs_.array(), Scalar(1) - probs_.array()).matrix();
  }

 private:
  ClassificationBatch() = default;

  void validate() const {
    if (probs_.rows() == 0 || probs_.cols() == 0) throw std::domain_error("classification batch is empty");
    if (!((probs_.array() >= Scalar(0)).all() && (probs_.array() <= Scalar(1)).all())) {
      throw std::domain_error("classification batch: probabilities outside [0, 1]");
    }
    if (kind_ == TargetKind::SingleTarget) {
      if (labels_.size() != probs_.rows()) throw std::domain_error("classification batch: label count mismatch");
      for (Eigen::Index i = 0; i < labels_.size(); ++i) {
        if (labels_(i) < 0 || labels_(i) >= probs_.cols()) {
          throw std::domain_error("classification batch: label index out of range");
        }
        if (std::abs(probs_.row(i).sum() - Scalar(1)) > Scalar(1e-6)) {
          throw std::domain_error("classification batch: single-target row does not sum to 1");
        }
      }
    } else {
      if (mask_.rows() != probs_.rows() || mask_.cols() != probs_.cols()) {
        throw std::domain_error("classification batch: mask shape mismatch");
      }
      if (!((mask_.array() == Scalar(0)) || (mask_.array() == Scalar(1))).all()) {
        throw std::domain_error("classification batch: mask entries must be 0 or 1");
      }
    }
  }

  TargetKind kind_ = TargetKind::SingleTarget;
  MatrixX<Scalar> probs_;
  Eigen::VectorXi labels_;
  MatrixX<Scalar> mask_;
};

/// Learnable variance of one regression target group, parametrized as
/// sigma^2 = exp(s) so any finite s gives a positive variance.
template <std::floating_point Scalar>
struct TaskVariance {
  Scalar s = Scalar(0);

  static TaskVariance from_sigma2(Scalar sigma2) {
    if (!(sigma2 > Scalar(0))) throw std::domain_error("TaskVariance: sigma^2 must be positive");
    return TaskVariance{std::log(sigma2)};
  }
  Scalar sigma2() const { return std::exp(s); }
  /// log(sigma^2 + 1)
  Scalar regularizer() const { return std::log1p(sigma2()); }
  /// d/ds log(exp(s) + 1)
  Scalar regularizer_grad() const {
    const Scalar v = sigma2();
    return v / (v + Scalar(1));
  }
};

/// Predictions and labels of a regression head. groups[t] names the variance
/// group of target column t; groups are numbered 0..group_count-1.
template <std::floating_point Scalar>
class RegressionBatch {
 public:
  RegressionBatch(MatrixX<Scalar> predictions, MatrixX<Scalar> labels, std::vector<int> groups = {})
      : predictions_(std::move(predictions)), labels_(std::move(labels)), groups_(std::move(groups)) {
    if (predictions_.rows() != labels_.rows() || predictions_.cols() != labels_.cols()) {
      throw std::domain_error("regression batch: predictions and labels differ in shape");
    }
    if (predictions_.size() == 0) throw std::domain_error("regression batch is empty");
    if (groups_.empty()) groups_.assign(static_cast<std::size_t>(predictions_.cols()), 0);
    if (static_cast<Eigen::Index>(groups_.size()) != predictions_.cols()) {
      throw std::domain_error("regression batch: every target needs a group");
    }
    group_count_ = 0;
    for (int g : groups_) {
      if (g < 0) throw std::domain_error("regression batch: negative group index");
      group_count_ = std::max(group_count_, g + 1);
    }
    std::vector<bool> used(static_cast<std::size_t>(group_count_), false);
    for (int g : groups_) used[static_cast<std::size_t>(g)] = true;
    if (std::find(used.begin(), used.end(), false) != used.end()) {
      throw std::domain_error("regression batch: group indices must be contiguous");
    }
  }

  const MatrixX<Scalar>& predictions() const { return predictions_; }
  const MatrixX<Scalar>& labels() const { return labels_; }
  const std::vector<int>& groups() const { return groups_; }
  int group_count() const { return group_count_; }
  MatrixX<Scalar> residuals() const { return predictions_ - labels_; }

 private:
  MatrixX<Scalar> predictions_;
  MatrixX<Scalar> labels_;
  std::vector<int> groups_;
  int group_count_ = 1;
};

template <std::floating_point Scalar>
struct LossDiagnostics {
  Scalar mean_p_correct = Scalar(0);
  Scalar gamma = Scalar(0);
  /// Progress estimate gamma was computed from.
  Scalar p_hat = Scalar(0);
  /// Set when the loss degenerated (e.g. a single-class batch under alpha balancing).
  bool degenerate = false;
};

template <std::floating_point Scalar>
struct LossOutput {
  Scalar total = Scalar(0);
  /// Per loss element weight: samples x 1 for single-target, samples x columns otherwise.
  MatrixX<Scalar> per_sample_weight;
  MatrixX<Scalar> grad_wrt_outputs;
  VectorX<Scalar> grad_wrt_variance;
  LossDiagnostics<Scalar> diagnostics;
};

namespace detail {

template <std::floating_point Scalar>
struct BaseCrossEntropy {
  MatrixX<Scalar> p_correct;   // loss elements
  MatrixX<Scalar> loss;        // -log(max(pc, eps)) per element
  MatrixX<Scalar> grad;        // d(mean loss)/d(probabilities), unweighted
  Scalar count = Scalar(1);    // number of loss elements in the mean
};

template <std::floating_point Scalar>
BaseCrossEntropy<Scalar> base_cross_entropy(const ClassificationBatch<Scalar>& batch) {
  const Scalar eps = Scalar(kProbabilityEpsilon);
  BaseCrossEntropy<Scalar> out;
  out.p_correct = batch.correct_probabilities();
  out.loss = -out.p_correct.array().max(eps).log();
  out.count = Scalar(out.p_correct.size());
  out.grad = MatrixX<Scalar>::Zero(batch.samples(), batch.classes());
  if (batch.kind() == TargetKind::SingleTarget) {
    for (Eigen::Index i = 0; i < batch.samples(); ++i) {
      const Scalar pc = out.p_correct(i, 0);
      out.grad(i, batch.labels()(i)) = pc > eps ? -Scalar(1) / pc / out.count : Scalar(0);
    }
  } else {
    for (Eigen::Index i = 0; i < batch.samples(); ++i) {
      for (Eigen::Index c = 0; c < batch.classes(); ++c) {
        const Scalar pc = out.p_correct(i, c);
        // pc = p for active classes and 1 - p otherwise
        const Scalar sign = batch.mask()(i, c) > Scalar(0.5) ? Scalar(-1) : Scalar(1);
        out.grad(i, c) = pc > eps ? sign / pc / out.count : Scalar(0);
      }
    }
  }
  return out;
}

/// grad(i, c) = weight(i) * base(i, c) for column weights, weight(i, c) * base(i, c) otherwise.
template <std::floating_point Scalar>
MatrixX<Scalar> apply_weights(const MatrixX<Scalar>& weight, const MatrixX<Scalar>& base) {
  if (weight.cols() == base.cols()) return weight.cwiseProduct(base);
  MatrixX<Scalar> out(base.rows(), base.cols());
  for (Eigen::Index i = 0; i < base.rows(); ++i) out.row(i) = weight(i, 0) * base.row(i);
  return out;
}

template <std::floating_point Scalar>
std::optional<Scalar> batch_progress(const ClassificationBatch<Scalar>& batch, const MatrixX<Scalar>& pc,
                                     ProgressPolicy policy) {
  if (batch.kind() == TargetKind::SingleTarget || policy == ProgressPolicy::SingleTarget) {
    return progress_mean(pc);
  }
  return progress_mean(batch.probabilities(), batch.mask(), policy);
}

}  // namespace detail

/// Folds a batch into the tracker without computing a loss, for losses that
/// do not focus but whose progress is still monitored.
template <std::floating_point Scalar>
void observe_progress(const ClassificationBatch<Scalar>& batch, ProgressTracker<Scalar>& tracker) {
  if (const auto m = detail::batch_progress(batch, batch.correct_probabilities(), tracker.policy())) {
    tracker.observe(CorrectProbability<Scalar>(std::clamp(*m, Scalar(0), Scalar(1))));
  } else {
    tracker.skip();
  }
}

/// Mean -log(p_correct); binary cross entropy per class for multi-target batches.
template <std::floating_point Scalar>
LossOutput<Scalar> cross_entropy(const ClassificationBatch<Scalar>& batch) {
  auto base = detail::base_cross_entropy(batch);
  LossOutput<Scalar> out;
  out.total = base.loss.mean();
  out.per_sample_weight = MatrixX<Scalar>::Ones(base.loss.rows(), base.loss.cols());
  out.grad_wrt_outputs = std::move(base.grad);
  out.diagnostics.mean_p_correct = base.p_correct.mean();
  return out;
}

/// Cross entropy weighted by (1 - p_correct)^gamma with gamma taken from the
/// schedule at the tracker's estimate before this batch. The tracker is
/// updated with this batch afterwards. On the very first batch the estimate is
/// the batch's own progress observation.
template <std::floating_point Scalar>
LossOutput<Scalar> focal_classification(const ClassificationBatch<Scalar>& batch,
                                        const GammaSchedule<Scalar>& schedule,
                                        ProgressTracker<Scalar>& tracker) {
  auto base = detail::base_cross_entropy(batch);
  const auto observation = detail::batch_progress(batch, base.p_correct, tracker.policy());

  Scalar p_hat;
  if (tracker.initialized()) {
    p_hat = tracker.smoothed()->value();
  } else {
    p_hat = observation.value_or(base.p_correct.mean());
  }
  p_hat = std::clamp(p_hat, Scalar(0), Scalar(1));
  const Scalar gamma = schedule(p_hat);

  LossOutput<Scalar> out;
  out.per_sample_weight = focal_weights(base.p_correct.array(), gamma).matrix();
  out.total = out.per_sample_weight.cwiseProduct(base.loss).mean();
  out.grad_wrt_outputs = detail::apply_weights(out.per_sample_weight, base.grad);
  out.diagnostics.mean_p_correct = base.p_correct.mean();
  out.diagnostics.gamma = gamma;
  out.diagnostics.p_hat = p_hat;

  if (observation) {
    tracker.observe(CorrectProbability<Scalar>(std::clamp(*observation, Scalar(0), Scalar(1))));
  } else {
    tracker.skip();
  }
  return out;
}

/// Cross entropy scaled per element by alpha = 1 - (relative frequency of the
/// element's label in this batch). Multi-target batches compute frequencies
/// per class column.
template <std::floating_point Scalar>
LossOutput<Scalar> alpha_balanced_classification(const ClassificationBatch<Scalar>& batch) {
  auto base = detail::base_cross_entropy(batch);
  LossOutput<Scalar> out;
  out.per_sample_weight.resize(base.loss.rows(), base.loss.cols());
  const Scalar n = Scalar(batch.samples());
  if (batch.kind() == TargetKind::SingleTarget) {
    VectorX<Scalar> freq = VectorX<Scalar>::Zero(batch.classes());
    for (Eigen::Index i = 0; i < batch.samples(); ++i) freq(batch.labels()(i)) += Scalar(1);
    freq /= n;
    for (Eigen::Index i = 0; i < batch.samples(); ++i) {
      out.per_sample_weight(i, 0) = Scalar(1) - freq(batch.labels()(i));
    }
    out.diagnostics.degenerate = (freq.array() == Scalar(1)).any();
  } else {
    for (Eigen::Index c = 0; c < batch.classes(); ++c) {
      const Scalar active = (batch.mask().col(c).array() > Scalar(0.5)).template cast<Scalar>().sum() / n;
      for (Eigen::Index i = 0; i < batch.samples(); ++i) {
        const bool on = batch.mask()(i, c) > Scalar(0.5);
        out.per_sample_weight(i, c) = Scalar(1) - (on ? active : Scalar(1) - active);
      }
      if (active == Scalar(0) || active == Scalar(1)) out.diagnostics.degenerate = true;
    }
  }
  out.total = out.per_sample_weight.cwiseProduct(base.loss).mean();
  out.grad_wrt_outputs = detail::apply_weights(out.per_sample_weight, base.grad);
  out.diagnostics.mean_p_correct = base.p_correct.mean();
  return out;
}

enum class RegressionBase { L1, L2 };

/// Scale dividing |dx| inside the Gaussian CDF: sigma^2 as written, or sigma.
enum class VarianceNormalization { Squared, StdDev };

/// Which terms train the variance parameter s. Detached keeps only the
/// regularizer; Full also differentiates the focal weight through sigma^2
/// (gamma stays constant either way).
enum class VarianceGradient { Full, Detached };

struct FocalRegressionOptions {
  RegressionBase base = RegressionBase::L2;
  VarianceNormalization normalization = VarianceNormalization::Squared;
  VarianceGradient variance_gradient = VarianceGradient::Detached;
};

template <std::floating_point Scalar>
Scalar normalized_residual(Scalar delta, Scalar sigma2, VarianceNormalization normalization) {
  const Scalar scale = normalization == VarianceNormalization::Squared ? sigma2 : std::sqrt(sigma2);
  return std::abs(delta) / scale;
}

/// Probability that the label error exceeds |delta| under a zero-mean Gaussian
/// label noise model: 1 - (Phi(a) - Phi(-a)) with a = |delta| / sigma^2.
template <std::floating_point Scalar>
Scalar regression_p_correct(Scalar delta, Scalar sigma2,
                            VarianceNormalization normalization = VarianceNormalization::Squared) {
  if (!std::isfinite(delta)) throw std::domain_error("regression_p_correct: non-finite residual");
  if (!(sigma2 > Scalar(0))) throw std::domain_error("regression_p_correct: sigma^2 must be positive");
  return normal_two_sided_tail(normalized_residual(delta, sigma2, normalization));
}

template <std::floating_point Scalar>
MatrixX<Scalar> regression_p_correct(const RegressionBatch<Scalar>& batch,
                                     std::span<const TaskVariance<Scalar>> variances,
                                     VarianceNormalization normalization = VarianceNormalization::Squared) {
  if (static_cast<int>(variances.size()) != batch.group_count()) {
    throw std::domain_error("regression_p_correct: one variance per target group required");
  }
  const MatrixX<Scalar> delta = batch.residuals();
  MatrixX<Scalar> pc(delta.rows(), delta.cols());
  for (Eigen::Index t = 0; t < delta.cols(); ++t) {
    const Scalar sigma2 = variances[static_cast<std::size_t>(batch.groups()[static_cast<std::size_t>(t)])].sigma2();
    for (Eigen::Index i = 0; i < delta.rows(); ++i) {
      pc(i, t) = regression_p_correct(delta(i, t), sigma2, normalization);
    }
  }
  return pc;
}

namespace detail {

template <std::floating_point Scalar>
void base_regression(const MatrixX<Scalar>& delta, RegressionBase base, MatrixX<Scalar>& loss,
                     MatrixX<Scalar>& grad) {
  const Scalar count = Scalar(delta.size());
  if (!delta.allFinite()) throw std::domain_error("regression loss: non-finite residual");
  if (base == RegressionBase::L2) {
    loss = delta.array().square();
    grad = Scalar(2) * delta.array() / count;
  } else {
    loss = delta.array().abs();
    grad = delta.array().sign() / count;
  }
}

}  // namespace detail

/// Plain mean L1 or L2 regression loss.
template <std::floating_point Scalar>
LossOutput<Scalar> regression_loss(const RegressionBatch<Scalar>& batch, RegressionBase base) {
  MatrixX<Scalar> loss;
  LossOutput<Scalar> out;
  detail::base_regression(batch.residuals(), base, loss, out.grad_wrt_outputs);
  out.total = loss.mean();
  out.per_sample_weight = MatrixX<Scalar>::Ones(loss.rows(), loss.cols());
  out.grad_wrt_variance = VectorX<Scalar>::Zero(batch.group_count());
  return out;
}

/// mean(w * L_base) + sum over groups of log(sigma^2 + 1), with
/// w = (1 - p_correct)^gamma and p_correct from the Gaussian label-noise model.
/// Output gradients treat w as a constant. The tracker observes the batch mean
/// p_correct after the weights are computed.
template <std::floating_point Scalar>
LossOutput<Scalar> focal_regression(const RegressionBatch<Scalar>& batch,
                                    std::span<const TaskVariance<Scalar>> variances,
                                    const GammaSchedule<Scalar>& schedule, ProgressTracker<Scalar>& tracker,
                                    const FocalRegressionOptions& options = {}) {
  const MatrixX<Scalar> delta = batch.residuals();
  MatrixX<Scalar> loss, base_grad;
  detail::base_regression(delta, options.base, loss, base_grad);
  const MatrixX<Scalar> pc = regression_p_correct(batch, variances, options.normalization);

  const Scalar mean_pc = pc.mean();
  const Scalar p_hat = std::clamp(tracker.initialized() ? tracker.smoothed()->value() : mean_pc, Scalar(0), Scalar(1));
  const Scalar gamma = schedule(p_hat);

  LossOutput<Scalar> out;
  out.per_sample_weight = focal_weights(pc.array(), gamma).matrix();
  const Scalar count = Scalar(delta.size());
  out.total = out.per_sample_weight.cwiseProduct(loss).mean();
  for (const auto& v : variances) out.total += v.regularizer();
  out.grad_wrt_outputs = out.per_sample_weight.cwiseProduct(base_grad);

  out.grad_wrt_variance.resize(batch.group_count());
  for (int g = 0; g < batch.group_count(); ++g) {
    out.grad_wrt_variance(g) = variances[static_cast<std::size_t>(g)].regularizer_grad();
  }
  if (options.variance_gradient == VarianceGradient::Full && gamma > Scalar(0)) {
    // da/ds = -a (sigma^2 scaling) or -a/2 (sigma scaling); dpc/da = -2 phi(a)
    const Scalar ds_scale = options.normalization == VarianceNormalization::Squared ? Scalar(1) : Scalar(0.5);
    for (Eigen::Index t = 0; t < delta.cols(); ++t) {
      const int g = batch.groups()[static_cast<std::size_t>(t)];
      const Scalar sigma2 = variances[static_cast<std::size_t>(g)].sigma2();
      Scalar acc = 0;
      for (Eigen::Index i = 0; i < delta.rows(); ++i) {
        const Scalar a = normalized_residual(delta(i, t), sigma2, options.normalization);
        // the derivative vanishes like a^gamma as the residual goes to zero
        if (a == Scalar(0) || pc(i, t) >= Scalar(1)) continue;
        const Scalar dpc_ds = Scalar(2) * normal_pdf(a) * a * ds_scale;
        const Scalar dw_ds = -gamma * std::pow(Scalar(1) - pc(i, t), gamma - Scalar(1)) * dpc_ds;
        acc += loss(i, t) * dw_ds;
      }
      out.grad_wrt_variance(g) += acc / count;
    }
  }

  out.diagnostics.mean_p_correct = mean_pc;
  out.diagnostics.gamma = gamma;
  out.diagnostics.p_hat = p_hat;
  tracker.observe(CorrectProbability<Scalar>(std::clamp(mean_pc, Scalar(0), Scalar(1))));
  return out;
}

/// sum_i L_i / (2 sigma_i^2) + log(sigma_i^2 + 1)
template <std::floating_point Scalar>
Scalar multiloss_combine(std::span<const std::pair<Scalar, TaskVariance<Scalar>>> task_losses) {
  Scalar total = 0;
  for (const auto& [loss, variance] : task_losses) {
    total += loss / (Scalar(2) * variance.sigma2()) + variance.regularizer();
  }
  return total;
}

template <std::floating_point Scalar>
struct MultilossGradient {
  VectorX<Scalar> d_loss;      // d total / d L_i
  VectorX<Scalar> d_variance;  // d total / d s_i
};

template <std::floating_point Scalar>
MultilossGradient<Scalar> multiloss_gradient(std::span<const std::pair<Scalar, TaskVariance<Scalar>>> task_losses) {
  const auto n = static_cast<Eigen::Index>(task_losses.size());
  MultilossGradient<Scalar> g{VectorX<Scalar>(n), VectorX<Scalar>(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& [loss, variance] = task_losses[static_cast<std::size_t>(i)];
    const Scalar sigma2 = variance.sigma2();
    g.d_loss(i) = Scalar(1) / (Scalar(2) * sigma2);
    g.d_variance(i) = -loss / (Scalar(2) * sigma2) + variance.regularizer_grad();
  }
  return g;
}

template <std::floating_point Scalar>
Scalar weighted_sum_loss(std::span<const std::pair<Scalar, Scalar>> losses) {
  Scalar total = 0;
  for (const auto& [loss, weight] : losses) {
    if (!std::isfinite(weight)) throw std::domain_error("weighted_sum_loss: non-finite weight");
    total += weight * loss;
  }
  return total;
}

}  // namespace autofocal
