#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "autofocal/nn.hpp"
#include "oracles.hpp"

using namespace autofocal::nn;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MlpSpec small_spec(Activation hidden, Activation head, int outputs = 3) {
  MlpSpec spec;
  spec.input_size = 4;
  spec.hidden = {5, 6};
  spec.hidden_activations = {hidden, hidden};
  spec.heads = {{"out", outputs, head}};
  return spec;
}

MatrixXd random_inputs(std::uint64_t seed, int rows, int cols) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  MatrixXd x(rows, cols);
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = z(rng);
  return x;
}

}  // namespace

TEST(Activation, ParsesNames) {
  EXPECT_EQ(parse_activation("relu"), Activation::Relu);
  EXPECT_EQ(parse_activation("softmax"), Activation::Softmax);
  EXPECT_EQ(to_string(Activation::Tanh), "tanh");
  EXPECT_THROW(parse_activation("gelu"), std::invalid_argument);
}

TEST(MlpSpec, RejectsInconsistentShapes) {
  MlpSpec spec = small_spec(Activation::Relu, Activation::Identity);
  spec.hidden_activations.pop_back();
  EXPECT_THROW(spec.validate(), std::invalid_argument);
  spec = small_spec(Activation::Softmax, Activation::Identity);
  EXPECT_THROW(spec.validate(), std::invalid_argument);
  spec = small_spec(Activation::Relu, Activation::Identity);
  spec.heads.clear();
  EXPECT_THROW(spec.validate(), std::invalid_argument);
  spec = small_spec(Activation::Relu, Activation::Identity);
  spec.heads.push_back(spec.heads.front());
  EXPECT_THROW(spec.validate(), std::invalid_argument);
}

TEST(Forward, ZeroNetworkWithSigmoidHeadGivesOneHalf) {
  Mlp net(small_spec(Activation::Tanh, Activation::Sigmoid));
  const auto out = net.predict(random_inputs(1, 7, 4));
  EXPECT_TRUE((out.at("out").array() == 0.5).all());
}

TEST(Forward, IdentityLayerReproducesInputs) {
  MlpSpec spec;
  spec.input_size = 3;
  spec.heads = {{"y", 3, Activation::Identity}};
  Mlp net(spec);
  net.mutable_weight(0) = Eigen::MatrixXd::Identity(3, 3);
  const MatrixXd x = random_inputs(2, 5, 3);
  EXPECT_TRUE(net.predict(x).at("y") == x);
}

TEST(Forward, SoftmaxRowsSumToOne) {
  Mlp net(small_spec(Activation::Relu, Activation::Softmax, 5), 3);
  const MatrixXd y = net.predict(random_inputs(3, 20, 4) * 10.0).at("out");
  for (Eigen::Index i = 0; i < y.rows(); ++i) EXPECT_NEAR(y.row(i).sum(), 1.0, 1e-12);
}

TEST(Forward, DeterministicForSeed) {
  Mlp a(small_spec(Activation::Relu, Activation::Identity), 42);
  Mlp b(small_spec(Activation::Relu, Activation::Identity), 42);
  Mlp c(small_spec(Activation::Relu, Activation::Identity), 43);
  const MatrixXd x = random_inputs(4, 3, 4);
  EXPECT_TRUE(a.parameters() == b.parameters());
  EXPECT_FALSE(a.parameters() == c.parameters());
  EXPECT_TRUE(a.forward(x).at("out") == b.predict(x).at("out"));
}

TEST(Forward, InitializationIsScaledByFanIn) {
  Mlp net(small_spec(Activation::Relu, Activation::Identity), 9);
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    const auto w = net.weight(l);
    const double bound = 1.0 / std::sqrt(double(w.rows()));
    EXPECT_LE(w.cwiseAbs().maxCoeff(), bound);
    EXPECT_TRUE((net.bias(l).array() == 0.0).all());
  }
}

TEST(Forward, RejectsWrongInputWidth) {
  Mlp net(small_spec(Activation::Relu, Activation::Identity), 1);
  EXPECT_THROW(net.forward(MatrixXd::Zero(2, 3)), std::domain_error);
}

TEST(Backward, ZeroUpstreamGradientGivesZeroGradient) {
  Mlp net(small_spec(Activation::Relu, Activation::Sigmoid), 5);
  const auto& out = net.forward(random_inputs(5, 6, 4));
  const VectorXd g = net.backward({{"out", MatrixXd::Zero(out.at("out").rows(), out.at("out").cols())}});
  EXPECT_TRUE((g.array() == 0.0).all());
}

TEST(Backward, SingleLinearNeuronWithSquaredError) {
  MlpSpec spec;
  spec.input_size = 2;
  spec.heads = {{"y", 1, Activation::Identity}};
  Mlp net(spec);
  net.mutable_weight(0) << 0.3, -0.7;
  net.mutable_bias(0) << 0.1;
  MatrixXd x(1, 2);
  x << 2.0, 5.0;
  const double label = 1.5;
  const double pred = net.forward(x).at("y")(0, 0);
  const VectorXd g = net.backward({{"y", MatrixXd::Constant(1, 1, 2.0 * (pred - label))}});
  EXPECT_NEAR(g(0), 2.0 * (pred - label) * 2.0, 1e-14);
  EXPECT_NEAR(g(1), 2.0 * (pred - label) * 5.0, 1e-14);
  EXPECT_NEAR(g(2), 2.0 * (pred - label), 1e-14);
}

TEST(Backward, MatchesFiniteDifferences) {
  for (auto hidden : {Activation::Relu, Activation::Tanh, Activation::Sigmoid}) {
    for (auto head : {Activation::Identity, Activation::Sigmoid, Activation::Softmax, Activation::Tanh}) {
      MlpSpec spec = small_spec(hidden, head);
      spec.heads.push_back({"aux", 2, Activation::Identity});
      Mlp net(spec, 21);
      const MatrixXd x = random_inputs(22, 8, 4);
      const MatrixXd up_out = random_inputs(23, 8, 3);
      const MatrixXd up_aux = random_inputs(24, 8, 2);
      // loss = sum(up .* out) so d loss / d out = up
      const auto loss = [&](const VectorXd& p) {
        Mlp probe = net;
        probe.set_parameters(p);
        const auto y = probe.predict(x);
        return y.at("out").cwiseProduct(up_out).sum() + y.at("aux").cwiseProduct(up_aux).sum();
      };
      net.forward(x);
      const VectorXd analytic = net.backward({{"out", up_out}, {"aux", up_aux}});
      const VectorXd numeric = oracle::numeric_gradient(loss, net.parameters());
      EXPECT_LT(oracle::relative_error(analytic, numeric), 1e-5)
          << to_string(hidden) << " -> " << to_string(head);
    }
  }
}

TEST(Backward, RequiresFreshForwardPass) {
  Mlp net(small_spec(Activation::Relu, Activation::Identity), 1);
  const MatrixXd up = MatrixXd::Ones(2, 3);
  EXPECT_THROW(net.backward({{"out", up}}), UsageError);
  net.forward(random_inputs(1, 2, 4));
  EXPECT_NO_THROW(net.backward({{"out", up}}));
  net.mutable_parameters()(0) += 1.0;
  EXPECT_THROW(net.backward({{"out", up}}), UsageError);
  net.forward(random_inputs(1, 2, 4));
  EXPECT_THROW(net.backward({{"out", MatrixXd::Ones(3, 3)}}), std::domain_error);
  EXPECT_THROW(net.backward({{"nope", up}}), std::invalid_argument);
}

TEST(Adam, ZeroGradientLeavesParametersAndAdvancesStep) {
  OptimizerState state(3);
  VectorXd p = VectorXd::LinSpaced(3, -1.0, 1.0);
  const VectorXd before = p;
  adam_step(state, p, VectorXd::Zero(3), 1e-3);
  EXPECT_TRUE(p == before);
  EXPECT_EQ(state.step(), 1);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  OptimizerState state(1);
  VectorXd p = VectorXd::Zero(1);
  adam_step(state, p, VectorXd::Ones(1), 1e-3);
  EXPECT_NEAR(p(0), -1e-3 / (1.0 + 1e-8), 1e-18);
}

TEST(Adam, ConstantGradientApproachesSignedLearningRate) {
  for (double scale : {1e-3, 1.0, 1e3}) {
    OptimizerState state(2);
    VectorXd p = VectorXd::Zero(2);
    const VectorXd g = (VectorXd(2) << 2.0 * scale, -0.5 * scale).finished();
    VectorXd last = p;
    for (int i = 0; i < 2000; ++i) {
      last = p;
      adam_step(state, p, g, 0.01);
    }
    EXPECT_NEAR(p(0) - last(0), -0.01, 1e-6);
    EXPECT_NEAR(p(1) - last(1), 0.01, 1e-6);
  }
}

TEST(Adam, RejectsNonFiniteGradient) {
  OptimizerState state(2);
  VectorXd p = VectorXd::Zero(2);
  EXPECT_THROW(adam_step(state, p, (VectorXd(2) << 1.0, std::nan("")).finished(), 1e-3), std::domain_error);
  EXPECT_THROW(adam_step(state, p, VectorXd::Zero(3), 1e-3), std::invalid_argument);
}

TEST(LrSchedule, Examples) {
  const LrSchedule s{1e-4, 1e-6, 5000};
  EXPECT_DOUBLE_EQ(lr_at(s, 0), 1e-4);
  EXPECT_NEAR(lr_at(s, 5000), 1e-6, 1e-20);
  EXPECT_NEAR(lr_at(s, 2500), 1e-5, 1e-19);
  EXPECT_NEAR(lr_at(s, 9000), 1e-6, 1e-20);
  for (int k = 1; k < 5000; k += 250) EXPECT_LT(lr_at(s, k), lr_at(s, k - 1));
  EXPECT_THROW(lr_at(s, -1), std::domain_error);
}

TEST(Checkpoint, RoundTripsEveryBit) {
  MlpSpec spec = small_spec(Activation::Tanh, Activation::Softmax);
  spec.heads.push_back({"reg", 2, Activation::Identity});
  Mlp net(spec, 77);
  net.mutable_parameters() *= std::acos(-1.0);  // values without short decimal forms
  std::stringstream buffer;
  save_checkpoint(net, buffer);
  const Mlp back = load_checkpoint(buffer);
  EXPECT_TRUE(back.parameters() == net.parameters());
  EXPECT_EQ(back.spec().hidden, spec.hidden);
  EXPECT_EQ(back.spec().heads.size(), 2u);
  EXPECT_EQ(back.spec().heads[1].name, "reg");
  const MatrixXd x = random_inputs(8, 4, 4);
  EXPECT_TRUE(back.predict(x).at("out") == net.predict(x).at("out"));
}

TEST(Checkpoint, RejectsCorruptInput) {
  std::stringstream bad("not a checkpoint\n");
  EXPECT_THROW(load_checkpoint(bad), std::runtime_error);
  Mlp net(small_spec(Activation::Relu, Activation::Identity), 1);
  std::stringstream buffer;
  save_checkpoint(net, buffer);
  std::string text = buffer.str();
  text.resize(text.size() / 2);
  std::stringstream truncated(text);
  EXPECT_THROW(load_checkpoint(truncated), std::runtime_error);
}
