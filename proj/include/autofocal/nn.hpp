#pragma once

// Fully connected networks with named output heads, reverse-mode gradients,
// Adam and an exponential learning-rate schedule. All parameters live in one
// flat vector so optimizers and checkpoints see a single contiguous block.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace autofocal::nn {

enum class Activation { Relu, Tanh, Sigmoid, Softmax, Identity };

Activation parse_activation(const std::string& name);
std::string to_string(Activation activation);

/// Raised when the network is used out of order, e.g. backward without a
/// matching forward pass.
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct HeadSpec {
  std::string name;
  int size = 1;
  Activation activation = Activation::Identity;
};

struct MlpSpec {
  int input_size = 1;
  std::vector<int> hidden;
  std::vector<Activation> hidden_activations;  // one per hidden layer
  std::vector<HeadSpec> heads;

  void validate() const;
};

using HeadOutputs = std::map<std::string, Eigen::MatrixXd>;

class Mlp {
 public:
  /// Weights drawn uniformly from [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases zero.
  Mlp(MlpSpec spec, std::uint64_t seed);
  /// All parameters zero.
  explicit Mlp(MlpSpec spec);

  const MlpSpec& spec() const { return spec_; }
  Eigen::Index parameter_count() const { return params_.size(); }

  const Eigen::VectorXd& parameters() const { return params_; }
  /// Mutable access invalidates any cached forward pass.
  Eigen::VectorXd& mutable_parameters() {
    ++version_;
    return params_;
  }
  void set_parameters(const Eigen::VectorXd& params);

  /// Weight matrix (fan_in x fan_out) and bias of layer `index`; hidden layers
  /// come first, then heads in spec order.
  Eigen::Map<const Eigen::MatrixXd> weight(std::size_t index) const;
  Eigen::Map<const Eigen::VectorXd> bias(std::size_t index) const;
  Eigen::Map<Eigen::MatrixXd> mutable_weight(std::size_t index);
  Eigen::Map<Eigen::VectorXd> mutable_bias(std::size_t index);
  std::size_t layer_count() const { return layers_.size(); }

  /// Evaluates all heads for `inputs` (samples x input_size) and caches the
  /// activations for backward().
  const HeadOutputs& forward(const Eigen::MatrixXd& inputs);

  /// Same as forward() without touching the cache.
  HeadOutputs predict(const Eigen::MatrixXd& inputs) const;

  /// Parameter gradient given d(loss)/d(head output) for each head. Heads
  /// missing from `grads` contribute nothing.
  Eigen::VectorXd backward(const HeadOutputs& grads) const;

 private:
  struct Layer {
    Eigen::Index fan_in = 0;
    Eigen::Index fan_out = 0;
    Eigen::Index offset = 0;  // weights, then bias
    Activation activation = Activation::Identity;
  };

  void build_layout();
  HeadOutputs run(const Eigen::MatrixXd& inputs, std::vector<Eigen::MatrixXd>* trunk) const;

  MlpSpec spec_;
  std::vector<Layer> layers_;
  Eigen::VectorXd params_;

  std::uint64_t version_ = 0;
  bool cached_ = false;
  std::uint64_t cached_version_ = 0;
  std::vector<Eigen::MatrixXd> trunk_cache_;  // input followed by each hidden activation
  HeadOutputs head_cache_;
};

/// Applies an activation row-wise (softmax) or element-wise (everything else).
Eigen::MatrixXd activate(Activation activation, const Eigen::MatrixXd& z);

/// d(loss)/dz given the activation's output y and d(loss)/dy.
Eigen::MatrixXd activation_backward(Activation activation, const Eigen::MatrixXd& y, const Eigen::MatrixXd& dy);

struct AdamHyperparameters {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class OptimizerState {
 public:
  explicit OptimizerState(Eigen::Index parameter_count, AdamHyperparameters hyper = {});

  const Eigen::VectorXd& first_moment() const { return m_; }
  const Eigen::VectorXd& second_moment() const { return v_; }
  std::int64_t step() const { return step_; }
  const AdamHyperparameters& hyperparameters() const { return hyper_; }

  friend void adam_step(OptimizerState& state, Eigen::Ref<Eigen::VectorXd> params, const Eigen::VectorXd& grads,
                        double lr);

 private:
  AdamHyperparameters hyper_;
  Eigen::VectorXd m_;
  Eigen::VectorXd v_;
  std::int64_t step_ = 0;
};

/// One bias-corrected Adam update. Throws std::domain_error on non-finite gradients.
void adam_step(OptimizerState& state, Eigen::Ref<Eigen::VectorXd> params, const Eigen::VectorXd& grads, double lr);

struct LrSchedule {
  double start = 1e-4;
  double end = 1e-6;
  std::int64_t total_steps = 5000;
};

/// start * (end / start)^(min(step, total) / total)
double lr_at(const LrSchedule& schedule, std::int64_t step);

/// Text checkpoint: a header with the architecture followed by one hex-float
/// parameter per line, so loading reproduces every bit.
void save_checkpoint(const Mlp& model, std::ostream& out);
void save_checkpoint(const Mlp& model, const std::string& path);
Mlp load_checkpoint(std::istream& in);
Mlp load_checkpoint(const std::string& path);

}  // namespace autofocal::nn
