#include "autofocal/nn.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

namespace autofocal::nn {

Activation parse_activation(const std::string& name) {
  if (name == "relu") return Activation::Relu;
  if (name == "tanh") return Activation::Tanh;
  if (name == "sigmoid") return Activation::Sigmoid;
  if (name == "softmax") return Activation::Softmax;
  if (name == "identity") return Activation::Identity;
  throw std::invalid_argument("unknown activation '" + name + "'");
}

std::string to_string(Activation activation) {
  switch (activation) {
    case Activation::Relu: return "relu";
    case Activation::Tanh: return "tanh";
    case Activation::Sigmoid: return "sigmoid";
    case Activation::Softmax: return "softmax";
    case Activation::Identity: return "identity";
  }
  return "identity";
}

void MlpSpec::validate() const {
  if (input_size <= 0) throw std::invalid_argument("mlp: input size must be positive");
  if (hidden.size() != hidden_activations.size()) {
    throw std::invalid_argument("mlp: one activation per hidden layer required");
  }
  for (int h : hidden) {
    if (h <= 0) throw std::invalid_argument("mlp: hidden layer sizes must be positive");
  }
  for (auto a : hidden_activations) {
    if (a == Activation::Softmax) throw std::invalid_argument("mlp: softmax is only valid on heads");
  }
  if (heads.empty()) throw std::invalid_argument("mlp: at least one output head required");
  for (std::size_t i = 0; i < heads.size(); ++i) {
    if (heads[i].size <= 0) throw std::invalid_argument("mlp: head '" + heads[i].name + "' has no outputs");
    if (heads[i].activation == Activation::Relu) {
      throw std::invalid_argument("mlp: head activation must be softmax, sigmoid, identity or tanh");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (heads[i].name == heads[j].name) throw std::invalid_argument("mlp: duplicate head '" + heads[i].name + "'");
    }
  }
}

Mlp::Mlp(MlpSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  build_layout();
}

Mlp::Mlp(MlpSpec spec, std::uint64_t seed) : Mlp(std::move(spec)) {
  std::mt19937_64 rng(seed);
  for (const auto& layer : layers_) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Eigen::Index k = 0; k < layer.fan_in * layer.fan_out; ++k) params_(layer.offset + k) = dist(rng);
  }
}

void Mlp::build_layout() {
  layers_.clear();
  Eigen::Index offset = 0;
  Eigen::Index fan_in = spec_.input_size;
  for (std::size_t i = 0; i < spec_.hidden.size(); ++i) {
    layers_.push_back({fan_in, spec_.hidden[i], offset, spec_.hidden_activations[i]});
    offset += fan_in * spec_.hidden[i] + spec_.hidden[i];
    fan_in = spec_.hidden[i];
  }
  for (const auto& head : spec_.heads) {
    layers_.push_back({fan_in, head.size, offset, head.activation});
    offset += fan_in * head.size + head.size;
  }
  params_ = Eigen::VectorXd::Zero(offset);
}

void Mlp::set_parameters(const Eigen::VectorXd& params) {
  if (params.size() != params_.size()) throw std::invalid_argument("mlp: parameter vector has wrong size");
  mutable_parameters() = params;
}

Eigen::Map<const Eigen::MatrixXd> Mlp::weight(std::size_t index) const {
  const auto& l = layers_.at(index);
  return {params_.data() + l.offset, l.fan_in, l.fan_out};
}

Eigen::Map<const Eigen::VectorXd> Mlp::bias(std::size_t index) const {
  const auto& l = layers_.at(index);
  return {params_.data() + l.offset + l.fan_in * l.fan_out, l.fan_out};
}

Eigen::Map<Eigen::MatrixXd> Mlp::mutable_weight(std::size_t index) {
  const auto& l = layers_.at(index);
  return {mutable_parameters().data() + l.offset, l.fan_in, l.fan_out};
}

Eigen::Map<Eigen::VectorXd> Mlp::mutable_bias(std::size_t index) {
  const auto& l = layers_.at(index);
  return {mutable_parameters().data() + l.offset + l.fan_in * l.fan_out, l.fan_out};
}

Eigen::MatrixXd activate(Activation activation, const Eigen::MatrixXd& z) {
  switch (activation) {
    case Activation::Relu: return z.cwiseMax(0.0);
    case Activation::Tanh: return z.array().tanh().matrix();
    case Activation::Sigmoid: return (1.0 / (1.0 + (-z.array()).exp())).matrix();
    case Activation::Softmax: {
      Eigen::MatrixXd y = (z.colwise() - z.rowwise().maxCoeff()).array().exp().matrix();
      y.array().colwise() /= y.rowwise().sum().array();
      return y;
    }
    case Activation::Identity: return z;
  }
  return z;
}

Eigen::MatrixXd activation_backward(Activation activation, const Eigen::MatrixXd& y, const Eigen::MatrixXd& dy) {
  switch (activation) {
    case Activation::Relu: return (y.array() > 0.0).select(dy, 0.0);
    case Activation::Tanh: return (dy.array() * (1.0 - y.array().square())).matrix();
    case Activation::Sigmoid: return (dy.array() * y.array() * (1.0 - y.array())).matrix();
    case Activation::Softmax: {
      const Eigen::VectorXd inner = dy.cwiseProduct(y).rowwise().sum();
      return (y.array() * (dy.colwise() - inner).array()).matrix();
    }
    case Activation::Identity: return dy;
  }
  return dy;
}

HeadOutputs Mlp::run(const Eigen::MatrixXd& inputs, std::vector<Eigen::MatrixXd>* trunk) const {
  if (inputs.cols() != spec_.input_size) {
    throw std::domain_error("mlp: input width " + std::to_string(inputs.cols()) + " does not match " +
                            std::to_string(spec_.input_size));
  }
  Eigen::MatrixXd a = inputs;
  if (trunk) {
    trunk->clear();
    trunk->push_back(a);
  }
  for (std::size_t i = 0; i < spec_.hidden.size(); ++i) {
    Eigen::MatrixXd z = a * weight(i);
    z.rowwise() += bias(i).transpose();
    a = activate(layers_[i].activation, z);
    if (trunk) trunk->push_back(a);
  }
  HeadOutputs out;
  for (std::size_t h = 0; h < spec_.heads.size(); ++h) {
    const std::size_t index = spec_.hidden.size() + h;
    Eigen::MatrixXd z = a * weight(index);
    z.rowwise() += bias(index).transpose();
    out.emplace(spec_.heads[h].name, activate(layers_[index].activation, z));
  }
  return out;
}

const HeadOutputs& Mlp::forward(const Eigen::MatrixXd& inputs) {
  head_cache_ = run(inputs, &trunk_cache_);
  cached_ = true;
  cached_version_ = version_;
  return head_cache_;
}

HeadOutputs Mlp::predict(const Eigen::MatrixXd& inputs) const { return run(inputs, nullptr); }

Eigen::VectorXd Mlp::backward(const HeadOutputs& grads) const {
  if (!cached_) throw UsageError("mlp: backward called without a forward pass");
  if (cached_version_ != version_) throw UsageError("mlp: parameters changed since the last forward pass");

  Eigen::VectorXd g = Eigen::VectorXd::Zero(params_.size());
  const Eigen::MatrixXd& top = trunk_cache_.back();
  Eigen::MatrixXd da = Eigen::MatrixXd::Zero(top.rows(), top.cols());

  for (const auto& [name, upstream] : grads) {
    std::size_t h = 0;
    while (h < spec_.heads.size() && spec_.heads[h].name != name) ++h;
    if (h == spec_.heads.size()) throw std::invalid_argument("mlp: unknown head '" + name + "'");
    const std::size_t index = spec_.hidden.size() + h;
    const auto& layer = layers_[index];
    const Eigen::MatrixXd& y = head_cache_.at(name);
    if (upstream.rows() != y.rows() || upstream.cols() != y.cols()) {
      throw std::domain_error("mlp: gradient for head '" + name + "' has the wrong shape");
    }
    const Eigen::MatrixXd dz = activation_backward(layer.activation, y, upstream);
    Eigen::Map<Eigen::MatrixXd>(g.data() + layer.offset, layer.fan_in, layer.fan_out) = top.transpose() * dz;
    Eigen::Map<Eigen::VectorXd>(g.data() + layer.offset + layer.fan_in * layer.fan_out, layer.fan_out) =
        dz.colwise().sum().transpose();
    da.noalias() += dz * weight(index).transpose();
  }

  for (std::size_t i = spec_.hidden.size(); i-- > 0;) {
    const auto& layer = layers_[i];
    const Eigen::MatrixXd dz = activation_backward(layer.activation, trunk_cache_[i + 1], da);
    const Eigen::MatrixXd& below = trunk_cache_[i];
    Eigen::Map<Eigen::MatrixXd>(g.data() + layer.offset, layer.fan_in, layer.fan_out) = below.transpose() * dz;
    Eigen::Map<Eigen::VectorXd>(g.data() + layer.offset + layer.fan_in * layer.fan_out, layer.fan_out) =
        dz.colwise().sum().transpose();
    if (i > 0) da = dz * weight(i).transpose();
  }
  return g;
}

OptimizerState::OptimizerState(Eigen::Index parameter_count, AdamHyperparameters hyper)
    : hyper_(hyper),
      m_(Eigen::VectorXd::Zero(parameter_count)),
      v_(Eigen::VectorXd::Zero(parameter_count)) {}

void adam_step(OptimizerState& state, Eigen::Ref<Eigen::VectorXd> params, const Eigen::VectorXd& grads, double lr) {
  if (params.size() != state.m_.size() || grads.size() != state.m_.size()) {
    throw std::invalid_argument("adam: parameter, gradient and state sizes disagree");
  }
  if (!grads.allFinite()) throw std::domain_error("adam: non-finite gradient");
  const auto& h = state.hyper_;
  ++state.step_;
  state.m_ = h.beta1 * state.m_ + (1.0 - h.beta1) * grads;
  state.v_ = h.beta2 * state.v_ + (1.0 - h.beta2) * grads.cwiseAbs2();
  const double t = static_cast<double>(state.step_);
  const double c1 = 1.0 - std::pow(h.beta1, t);
  const double c2 = 1.0 - std::pow(h.beta2, t);
  params.array() -= lr * (state.m_.array() / c1) / ((state.v_.array() / c2).sqrt() + h.epsilon);
}

double lr_at(const LrSchedule& schedule, std::int64_t step) {
  if (step < 0) throw std::domain_error("lr_at: negative step");
  if (schedule.total_steps <= 0) return schedule.start;
  if (step >= schedule.total_steps) return schedule.end;
  const double fraction = static_cast<double>(step) / static_cast<double>(schedule.total_steps);
  return schedule.start * std::pow(schedule.end / schedule.start, fraction);
}

namespace {

constexpr const char* kCheckpointMagic = "autofocal-mlp";
constexpr int kCheckpointVersion = 1;

std::string hex_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::hex);
  return std::string(buf, end);
}

double parse_hex_double(const std::string& token) {
  double v = 0;
  const char* first = token.data();
  const char* last = first + token.size();
  bool negative = false;
  if (first != last && *first == '-') {
    negative = true;
    ++first;
  }
  auto [ptr, ec] = std::from_chars(first, last, v, std::chars_format::hex);
  if (ec != std::errc() || ptr != last) throw std::runtime_error("checkpoint: bad parameter '" + token + "'");
  return negative ? -v : v;
}

}  // namespace

void save_checkpoint(const Mlp& model, std::ostream& out) {
  const auto& spec = model.spec();
  out << kCheckpointMagic << ' ' << kCheckpointVersion << '\n';
  out << "input " << spec.input_size << '\n';
  out << "hidden " << spec.hidden.size();
  for (std::size_t i = 0; i < spec.hidden.size(); ++i) {
    out << ' ' << spec.hidden[i] << ' ' << to_string(spec.hidden_activations[i]);
  }
  out << '\n' << "heads " << spec.heads.size() << '\n';
  for (const auto& head : spec.heads) {
    out << "head " << head.name << ' ' << head.size << ' ' << to_string(head.activation) << '\n';
  }
  out << "params " << model.parameter_count() << '\n';
  for (Eigen::Index i = 0; i < model.parameter_count(); ++i) out << hex_double(model.parameters()(i)) << '\n';
}

void save_checkpoint(const Mlp& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("checkpoint: cannot write " + path);
  save_checkpoint(model, out);
  if (!out) throw std::runtime_error("checkpoint: write failed for " + path);
}

Mlp load_checkpoint(std::istream& in) {
  auto expect = [&](const std::string& word) {
    std::string token;
    if (!(in >> token) || token != word) throw std::runtime_error("checkpoint: expected '" + word + "'");
  };
  expect(kCheckpointMagic);
  int version = 0;
  if (!(in >> version) || version != kCheckpointVersion) {
    throw std::runtime_error("checkpoint: unsupported version");
  }
  MlpSpec spec;
  std::size_t count = 0;
  expect("input");
  in >> spec.input_size;
  expect("hidden");
  in >> count;
  for (std::size_t i = 0; i < count; ++i) {
    int size = 0;
    std::string act;
    in >> size >> act;
    spec.hidden.push_back(size);
    spec.hidden_activations.push_back(parse_activation(act));
  }
  expect("heads");
  in >> count;
  for (std::size_t i = 0; i < count; ++i) {
    HeadSpec head;
    std::string act;
    expect("head");
    in >> head.name >> head.size >> act;
    head.activation = parse_activation(act);
    spec.heads.push_back(head);
  }
  expect("params");
  Eigen::Index n = 0;
  in >> n;
  if (!in) throw std::runtime_error("checkpoint: truncated header");
  Mlp model(spec);
  if (n != model.parameter_count()) throw std::runtime_error("checkpoint: parameter count does not match layout");
  Eigen::VectorXd params(n);
  std::string token;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(in >> token)) throw std::runtime_error("checkpoint: truncated parameter block");
    params(i) = parse_hex_double(token);
  }
  model.set_parameters(params);
  return model;
}

Mlp load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path);
  return load_checkpoint(in);
}

}  // namespace autofocal::nn
