#pragma once

// Focusing mathematics: probability of the correct outcome, focal weights,
// the two automated gamma schedules and the smoothed progress tracker.
//
// Everything here is templated on the scalar type and free of state except
// ProgressTracker, which is a single-writer value owned by the training loop.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>

#include <Eigen/Core>

namespace autofocal {

/// A probability in [0, 1]. Construction outside the range throws std::domain_error.
template <std::floating_point Scalar>
class CorrectProbability {
 public:
  constexpr CorrectProbability() = default;
  explicit CorrectProbability(Scalar value) : value_(value) {
    if (!(value >= Scalar(0) && value <= Scalar(1))) {
      throw std::domain_error("probability outside [0, 1]: " + std::to_string(double(value)));
    }
  }
  constexpr Scalar value() const { return value_; }
  constexpr operator Scalar() const { return value_; }

 private:
  Scalar value_ = Scalar(0);
};

/// p if the label is active, 1 - p otherwise.
template <std::floating_point Scalar>
CorrectProbability<Scalar> p_correct(Scalar p, bool label) {
  if (!(p >= Scalar(0) && p <= Scalar(1))) {
    throw std::domain_error("p_correct: p outside [0, 1]");
  }
  return CorrectProbability<Scalar>(label ? p : Scalar(1) - p);
}

template <std::floating_point Scalar>
CorrectProbability<Scalar> p_correct(Scalar p, int label) {
  if (label != 0 && label != 1) {
    throw std::domain_error("p_correct: label must be 0 or 1");
  }
  return p_correct(p, label == 1);
}

/// (1 - pc)^gamma. 0^0 is taken as 1 so gamma = 0 disables focusing everywhere.
template <std::floating_point Scalar>
Scalar focal_weight(Scalar pc, Scalar gamma) {
  if (!(gamma >= Scalar(0))) throw std::domain_error("focal_weight: gamma must be >= 0");
  if (gamma == Scalar(0)) return Scalar(1);
  return std::pow(Scalar(1) - pc, gamma);
}

template <std::floating_point Scalar>
Scalar focal_weight(CorrectProbability<Scalar> pc, Scalar gamma) {
  return focal_weight(pc.value(), gamma);
}

/// Element-wise focal weights for an array of correct probabilities.
template <typename Derived>
auto focal_weights(const Eigen::ArrayBase<Derived>& pc, typename Derived::Scalar gamma) {
  using Scalar = typename Derived::Scalar;
  using Result = Eigen::Array<Scalar, Derived::RowsAtCompileTime, Derived::ColsAtCompileTime>;
  if (!(gamma >= Scalar(0))) throw std::domain_error("focal_weights: gamma must be >= 0");
  if (gamma == Scalar(0)) return Result(Result::Ones(pc.rows(), pc.cols()));
  return Result((Scalar(1) - pc).pow(gamma));
}

inline constexpr double kDefaultGammaClamp = 10.0;

/// gamma such that a fraction k = h * p_hat + (1 - h) of the total focal weight
/// mass lies below p_hat. Since 1 - k = h (1 - p_hat), the closed form reduces
/// to log(h) / log(1 - p_hat), which stays accurate for p_hat close to 0 or 1.
template <std::floating_point Scalar>
Scalar gamma_quantile(Scalar p_hat, Scalar h, Scalar clamp_max = Scalar(kDefaultGammaClamp)) {
  if (!(h > Scalar(0) && h < Scalar(1))) throw std::domain_error("gamma_quantile: h must lie in (0, 1)");
  if (!(p_hat >= Scalar(0) && p_hat <= Scalar(1))) {
    throw std::domain_error("gamma_quantile: p_hat outside [0, 1]");
  }
  if (p_hat <= Scalar(0)) return clamp_max;
  if (p_hat >= Scalar(1)) return Scalar(0);
  const Scalar gamma = std::log(h) / std::log1p(-p_hat);
  return std::clamp(gamma, Scalar(0), clamp_max);
}

/// gamma = -ln(p_hat), the information content of a correct prediction.
template <std::floating_point Scalar>
Scalar gamma_info(Scalar p_hat, Scalar clamp_max = Scalar(kDefaultGammaClamp)) {
  if (!(p_hat >= Scalar(0) && p_hat <= Scalar(1))) {
    throw std::domain_error("gamma_info: p_hat outside [0, 1]");
  }
  if (p_hat <= Scalar(0)) return clamp_max;
  if (p_hat == Scalar(1)) return Scalar(0);
  return std::clamp(-std::log(p_hat), Scalar(0), clamp_max);
}

/// E{1 - p_correct}, the exponent of the expected focal weight. Diagnostics only.
template <std::floating_point Scalar>
Scalar expected_weight_exponent(Scalar p_hat) {
  return Scalar(1) - p_hat;
}

namespace schedule {
template <std::floating_point Scalar>
struct Fixed {
  Scalar gamma = Scalar(0);
};
template <std::floating_point Scalar>
struct QuantileH {
  Scalar h = Scalar(0.7);
};
struct ShannonInfo {};
}  // namespace schedule

/// Policy mapping the smoothed progress estimate to a focusing parameter.
template <std::floating_point Scalar>
class GammaSchedule {
 public:
  using Kind = std::variant<schedule::Fixed<Scalar>, schedule::QuantileH<Scalar>, schedule::ShannonInfo>;

  static GammaSchedule fixed(Scalar gamma) { return GammaSchedule(schedule::Fixed<Scalar>{gamma}); }
  static GammaSchedule quantile(Scalar h, Scalar clamp_max = Scalar(kDefaultGammaClamp)) {
    return GammaSchedule(schedule::QuantileH<Scalar>{h}, clamp_max);
  }
  static GammaSchedule info(Scalar clamp_max = Scalar(kDefaultGammaClamp)) {
    return GammaSchedule(schedule::ShannonInfo{}, clamp_max);
  }

  explicit GammaSchedule(Kind kind, Scalar clamp_max = Scalar(kDefaultGammaClamp))
      : kind_(kind), clamp_max_(clamp_max) {
    if (!(clamp_max_ >= Scalar(0)) || !std::isfinite(clamp_max_)) {
      throw std::domain_error("GammaSchedule: clamp_max must be finite and >= 0");
    }
    if (const auto* f = std::get_if<schedule::Fixed<Scalar>>(&kind_)) {
      if (!(f->gamma >= Scalar(0)) || !std::isfinite(f->gamma)) {
        throw std::domain_error("GammaSchedule: fixed gamma must be finite and >= 0");
      }
    }
    if (const auto* q = std::get_if<schedule::QuantileH<Scalar>>(&kind_)) {
      if (!(q->h > Scalar(0) && q->h < Scalar(1))) {
        throw std::domain_error("GammaSchedule: h must lie in (0, 1)");
      }
    }
  }

  const Kind& kind() const { return kind_; }
  Scalar clamp_max() const { return clamp_max_; }

  /// True when gamma does not depend on the progress estimate.
  bool is_fixed() const { return std::holds_alternative<schedule::Fixed<Scalar>>(kind_); }

  Scalar operator()(Scalar p_hat) const {
    if (const auto* f = std::get_if<schedule::Fixed<Scalar>>(&kind_)) {
      return std::min(f->gamma, clamp_max_);
    }
    if (const auto* q = std::get_if<schedule::QuantileH<Scalar>>(&kind_)) {
      return gamma_quantile(p_hat, q->h, clamp_max_);
    }
    return gamma_info(p_hat, clamp_max_);
  }

  std::string describe() const {
    if (const auto* f = std::get_if<schedule::Fixed<Scalar>>(&kind_)) {
      return "fixed:" + std::to_string(double(f->gamma));
    }
    if (const auto* q = std::get_if<schedule::QuantileH<Scalar>>(&kind_)) {
      return "quantile:" + std::to_string(double(q->h));
    }
    return "info";
  }

 private:
  Kind kind_;
  Scalar clamp_max_;
};

/// How a batch is reduced to a single progress observation.
enum class ProgressPolicy {
  SingleTarget,            // mean p_correct over every element
  MultiTargetAllExamples,  // positives: mean active-class p; negatives: mean (1 - p)
  MultiTargetPositiveOnly  // positives only; examples without an active class are ignored
};

/// Exponentially smoothed estimate of the expected probability of a correct prediction.
template <std::floating_point Scalar>
class ProgressTracker {
 public:
  explicit ProgressTracker(ProgressPolicy policy = ProgressPolicy::SingleTarget,
                           Scalar smoothing_factor = Scalar(0.95))
      : policy_(policy), factor_(smoothing_factor) {
    if (!(factor_ >= Scalar(0) && factor_ < Scalar(1))) {
      throw std::domain_error("ProgressTracker: smoothing factor must lie in [0, 1)");
    }
  }

  ProgressPolicy policy() const { return policy_; }
  Scalar smoothing_factor() const { return factor_; }
  bool initialized() const { return smoothed_.has_value(); }
  std::optional<CorrectProbability<Scalar>> smoothed() const { return smoothed_; }
  std::size_t updates() const { return updates_; }
  /// Number of batches that were skipped because the policy left nothing to average.
  std::size_t skipped_updates() const { return skipped_; }

  /// Folds one batch mean into the estimate; the first observation initializes it.
  void observe(CorrectProbability<Scalar> batch_mean) {
    if (!smoothed_) {
      smoothed_ = batch_mean;
    } else {
      const Scalar old = smoothed_->value();
      Scalar next = factor_ * old + (Scalar(1) - factor_) * batch_mean.value();
      next = std::clamp(next, std::min(old, batch_mean.value()), std::max(old, batch_mean.value()));
      smoothed_ = CorrectProbability<Scalar>(next);
    }
    ++updates_;
  }

  void skip() { ++skipped_; }

 private:
  ProgressPolicy policy_;
  Scalar factor_;
  std::optional<CorrectProbability<Scalar>> smoothed_;
  std::size_t updates_ = 0;
  std::size_t skipped_ = 0;
};

/// Mean p_correct of a batch of correct probabilities, or nothing for an empty batch.
template <typename Derived>
std::optional<typename Derived::Scalar> progress_mean(const Eigen::DenseBase<Derived>& p_correct) {
  if (p_correct.size() == 0) return std::nullopt;
  return p_correct.mean();
}

/// Progress observation for multi-target batches under the given policy.
/// probs and mask are samples x classes; mask entries are 0 or 1.
template <typename DerivedP, typename DerivedM>
std::optional<typename DerivedP::Scalar> progress_mean(const Eigen::DenseBase<DerivedP>& probs,
                                                       const Eigen::DenseBase<DerivedM>& mask,
                                                       ProgressPolicy policy) {
  using Scalar = typename DerivedP::Scalar;
  if (probs.rows() != mask.rows() || probs.cols() != mask.cols()) {
    throw std::domain_error("progress_mean: probabilities and mask differ in shape");
  }
  if (probs.size() == 0) return std::nullopt;
  if (policy == ProgressPolicy::SingleTarget) {
    const auto pc = (mask.derived().array() > Scalar(0.5))
                        .select(probs.derived().array(), Scalar(1) - probs.derived().array());
    return pc.mean();
  }
  Scalar sum = 0;
  Eigen::Index counted = 0;
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    Scalar active_sum = 0;
    Eigen::Index active = 0;
    for (Eigen::Index c = 0; c < probs.cols(); ++c) {
      if (mask(i, c) > Scalar(0.5)) {
        active_sum += probs(i, c);
        ++active;
      }
    }
    if (active > 0) {
      sum += active_sum / Scalar(active);
      ++counted;
    } else if (policy == ProgressPolicy::MultiTargetAllExamples) {
      sum += (Scalar(1) - probs.row(i).array()).mean();
      ++counted;
    }
  }
  if (counted == 0) return std::nullopt;
  return sum / Scalar(counted);
}

/// Returns the tracker after folding in a batch of per-element correct
/// probabilities. An empty batch leaves the estimate unchanged and is counted
/// in skipped_updates().
template <std::floating_point Scalar, typename Derived>
ProgressTracker<Scalar> update_progress(ProgressTracker<Scalar> tracker,
                                        const Eigen::DenseBase<Derived>& p_correct) {
  if (const auto m = progress_mean(p_correct)) {
    tracker.observe(CorrectProbability<Scalar>(std::clamp(*m, Scalar(0), Scalar(1))));
  } else {
    tracker.skip();
  }
  return tracker;
}

/// Multi-target variant; the tracker's policy decides which examples count.
template <std::floating_point Scalar, typename DerivedP, typename DerivedM>
ProgressTracker<Scalar> update_progress(ProgressTracker<Scalar> tracker,
                                        const Eigen::DenseBase<DerivedP>& probs,
                                        const Eigen::DenseBase<DerivedM>& mask) {
  if (const auto m = progress_mean(probs, mask, tracker.policy())) {
    tracker.observe(CorrectProbability<Scalar>(std::clamp(*m, Scalar(0), Scalar(1))));
  } else {
    tracker.skip();
  }
  return tracker;
}

}  // namespace autofocal
