#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "pma/errors.hpp"
#include "pma/neuralnet.hpp"
#include "pma/random.hpp"
#include "support/oracles.hpp"

namespace pma {
namespace {

Eigen::VectorXd random_vector(RandomStream& rng, Eigen::Index n, double scale = 1.0) {
  Eigen::VectorXd v(n);
  for (auto& x : v) x = rng.normal(0.0, scale);
  return v;
}

TEST(Softmax, HandValues) {
  const auto half = softmax(Eigen::Vector2d(0, 0));
  EXPECT_DOUBLE_EQ(half.probs[0], 0.5);
  EXPECT_DOUBLE_EQ(half.probs[1], 0.5);
  const auto third = softmax(Eigen::Vector2d(std::log(2.0), 0));
  EXPECT_NEAR(third.probs[0], 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(third.probs[1], 1.0 / 3.0, 1e-15);
  EXPECT_EQ(third.argmax(), 0);
}

TEST(Softmax, LargeLogitsMatchExtendedPrecision) {
  for (const Eigen::Vector2d z : {Eigen::Vector2d(1000, 0), Eigen::Vector2d(0, 1000), Eigen::Vector2d(1000, 999),
                                  Eigen::Vector2d(-1000, -1000), Eigen::Vector2d(700, -700)}) {
    const auto p = softmax(z);
    const auto ref = oracle::softmax_long_double(z);
    for (int i = 0; i < 2; ++i) {
      ASSERT_TRUE(std::isfinite(p.probs[i]));
      EXPECT_NEAR(p.probs[i], static_cast<double>(ref[static_cast<std::size_t>(i)]), 1e-15) << z.transpose();
    }
  }
}

TEST(Softmax, PropertiesOverRandomLogits) {
  RandomStream rng(31);
  for (int trial = 0; trial < 2000; ++trial) {
    const auto n = static_cast<Eigen::Index>(2 + trial % 5);
    const Eigen::VectorXd z = random_vector(rng, n, trial % 2 ? 300.0 : 3.0);
    const auto p = softmax(z);
    ASSERT_NEAR(p.probs.sum(), 1.0, 1e-9);
    ASSERT_TRUE((p.probs.array() >= 0.0).all() && (p.probs.array() <= 1.0).all());
    const double shift = rng.uniform(-500, 500);
    const auto q = softmax((z.array() + shift).matrix());
    for (Eigen::Index i = 0; i < n; ++i) ASSERT_NEAR(p.probs[i], q.probs[i], 1e-12);
  }
}

TEST(Softmax, RejectsNonFinite) {
  EXPECT_THROW(softmax(Eigen::Vector2d(std::nan(""), 0)), NumericError);
  EXPECT_THROW(softmax(Eigen::Vector2d(INFINITY, 0)), NumericError);
}

TEST(Forward, ZeroNetIsUniform) {
  const Mlp net = Mlp::zeros(MlpSpec::with_input(5));
  const auto p = forward(net, Eigen::VectorXd::Constant(5, 3.0));
  EXPECT_DOUBLE_EQ(p.probs[0], 0.5);
  EXPECT_DOUBLE_EQ(p.probs[1], 0.5);
}

TEST(Forward, SingleLinearLayer) {
  MlpSpec spec;
  spec.layer_sizes = {1, 2};
  Mlp net = Mlp::zeros(spec);
  net.layers()[0].weights << 1.0, -1.0;
  const auto p = forward(net, Eigen::VectorXd::Zero(1));
  EXPECT_DOUBLE_EQ(p.probs[0], 0.5);
  const auto q = forward(net, Eigen::VectorXd::Constant(1, std::log(2.0) / 2));
  EXPECT_NEAR(q.probs[0], 2.0 / 3.0, 1e-15);
}

TEST(Forward, RandomNetsGiveValidConfidenceVectors) {
  RandomStream rng(37);
  for (int trial = 0; trial < 10000; ++trial) {
    MlpSpec spec = MlpSpec::with_input(1 + trial % 12, {1 + trial % 7, 4});
    spec.activation = trial % 3 == 0 ? Activation::Tanh : Activation::ReLU;
    spec.rng_seed = static_cast<std::uint64_t>(trial);
    const Mlp net(spec);
    const auto p = forward(net, random_vector(rng, spec.input_dim(), 5.0));
    ASSERT_EQ(p.size(), 2);
    ASSERT_NEAR(p.probs.sum(), 1.0, 1e-9);
    ASSERT_TRUE((p.probs.array() >= 0.0).all());
  }
}

TEST(Forward, BatchMatchesSingle) {
  const Mlp net(MlpSpec::with_input(6));
  RandomStream rng(41);
  Eigen::MatrixXd x(6, 9);
  for (Eigen::Index j = 0; j < x.cols(); ++j) x.col(j) = random_vector(rng, 6);
  const Eigen::MatrixXd batch = forward_batch(net, x);
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    EXPECT_TRUE(batch.col(j).isApprox(forward(net, Eigen::VectorXd(x.col(j))).probs, 1e-14));
  }
  EXPECT_THROW(net.logits(Eigen::VectorXd(Eigen::VectorXd::Zero(5))), InputError);
}

TEST(Gradients, InputGradientMatchesFiniteDifferences) {
  RandomStream rng(43);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    MlpSpec spec = MlpSpec::with_input(1 + trial % 10);
    spec.activation = trial % 4 == 0 ? Activation::Tanh : Activation::ReLU;
    spec.rng_seed = 1000 + static_cast<std::uint64_t>(trial);
    const Mlp net(spec);
    Eigen::VectorXd x = random_vector(rng, spec.input_dim());
    while (oracle::min_relu_preactivation(net, x) < oracle::kKinkMargin) x = random_vector(rng, spec.input_dim());
    const int target = trial % 2;
    const Eigen::VectorXd analytic = input_gradient(net, x, target);
    const Eigen::VectorXd numeric = oracle::fd_input_gradient(net, x, target);
    for (Eigen::Index i = 0; i < x.size(); ++i) worst = std::max(worst, oracle::relative_error(analytic[i], numeric[i]));
  }
  EXPECT_LT(worst, 1e-4);
}

TEST(Gradients, WeightGradientsMatchFiniteDifferences) {
  RandomStream rng(47);
  for (int trial = 0; trial < 20; ++trial) {
    MlpSpec spec = MlpSpec::with_input(2 + trial % 4, {6, 5});
    spec.activation = trial % 2 ? Activation::Tanh : Activation::ReLU;
    spec.rng_seed = 77 + static_cast<std::uint64_t>(trial);
    const Mlp net(spec);
    Eigen::MatrixXd x(spec.input_dim(), 4);
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      do {
        x.col(j) = random_vector(rng, x.rows());
      } while (oracle::min_relu_preactivation(net, x.col(j)) < oracle::kKinkMargin);
    }
    const std::vector<int> labels{0, 1, 1, 0};
    EXPECT_LT(oracle::max_weight_gradient_error(net, x, labels), 1e-4) << "trial " << trial;
  }
}

TEST(Gradients, ReluSubgradientIsZeroAtKink) {
  // One hidden unit with pre-activation exactly 0: it contributes nothing.
  MlpSpec spec;
  spec.layer_sizes = {1, 1, 2};
  Mlp net = Mlp::zeros(spec);
  net.layers()[0].weights(0, 0) = 1.0;
  net.layers()[1].weights << 1.0, -1.0;
  EXPECT_EQ(input_gradient(net, Eigen::VectorXd::Zero(1), 0)[0], 0.0);
  EXPECT_NE(input_gradient(net, Eigen::VectorXd::Constant(1, 0.1), 0)[0], 0.0);
}

TEST(Gradients, ZeroNetHasZeroInputGradient) {
  const Mlp net = Mlp::zeros(MlpSpec::with_input(4));
  EXPECT_TRUE(input_gradient(net, Eigen::VectorXd::Ones(4), 1).isZero(0.0));
}

TEST(Gradients, SingleLayerClosedForm) {
  MlpSpec spec;
  spec.layer_sizes = {3, 2};
  spec.rng_seed = 5;
  const Mlp net(spec);
  const Eigen::Vector3d x(0.3, -1.2, 0.7);
  const Eigen::MatrixXd& w = net.layers()[0].weights;
  for (int target : {0, 1}) {
    Eigen::Vector2d onehot = Eigen::Vector2d::Zero();
    onehot[target] = 1.0;
    const Eigen::VectorXd expected = w.transpose() * (forward(net, x).probs - onehot);
    EXPECT_TRUE(input_gradient(net, x, target).isApprox(expected, 1e-13));
  }
}

TEST(Gradients, BatchInputGradientsArePerSample) {
  const Mlp net(MlpSpec::with_input(3));
  RandomStream rng(53);
  Eigen::MatrixXd x(3, 5);
  for (Eigen::Index j = 0; j < x.cols(); ++j) x.col(j) = random_vector(rng, 3);
  const std::vector<int> targets{1, 0, 0, 1, 1};
  const Eigen::MatrixXd g = input_gradients(net, x, targets);
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    EXPECT_TRUE(g.col(j).isApprox(input_gradient(net, x.col(j), targets[static_cast<std::size_t>(j)]), 1e-13));
  }
}

TEST(Training, SeparableOneDimensionalData) {
  Eigen::MatrixXd x(1, 200);
  std::vector<int> y(200);
  for (int k = 0; k < 200; ++k) {
    x(0, k) = k % 2 ? 1.0 : -1.0;
    y[static_cast<std::size_t>(k)] = k % 2;
  }
  Mlp net(MlpSpec::with_input(1));
  const auto result = train(net, x, y, {});
  EXPECT_EQ(result.loss_curve.size(), 20u);
  EXPECT_LT(result.loss_curve.back(), result.loss_curve.front());
  EXPECT_EQ(forward(net, Eigen::VectorXd::Constant(1, -1.0)).argmax(), 0);
  EXPECT_EQ(forward(net, Eigen::VectorXd::Constant(1, 1.0)).argmax(), 1);
}

TEST(Training, ZeroLearningRateLeavesWeightsUnchanged) {
  RandomStream rng(59);
  Eigen::MatrixXd x(4, 64);
  std::vector<int> y(64);
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    x.col(j) = random_vector(rng, 4);
    y[static_cast<std::size_t>(j)] = x(0, j) > 0 ? 1 : 0;
  }
  Mlp net(MlpSpec::with_input(4));
  const Mlp initial = net;
  SgdConfig cfg;
  cfg.learning_rate = 0.0;
  train(net, x, y, cfg);
  EXPECT_TRUE(net == initial);
}

TEST(Training, AllOneClassFitsConstant) {
  RandomStream rng(61);
  Eigen::MatrixXd x(3, 100);
  for (Eigen::Index j = 0; j < x.cols(); ++j) x.col(j) = random_vector(rng, 3);
  const std::vector<int> y(100, 0);
  Mlp net(MlpSpec::with_input(3));
  SgdConfig cfg;
  cfg.epochs = 100;
  const auto result = train(net, x, y, cfg);
  EXPECT_LT(result.loss_curve.back(), 0.01);
  for (Eigen::Index j = 0; j < x.cols(); ++j) EXPECT_EQ(forward(net, Eigen::VectorXd(x.col(j))).argmax(), 0);
}

TEST(Training, DeterministicAndValidated) {
  RandomStream rng(67);
  Eigen::MatrixXd x(2, 50);
  std::vector<int> y(50);
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    x.col(j) = random_vector(rng, 2);
    y[static_cast<std::size_t>(j)] = x(1, j) > 0 ? 1 : 0;
  }
  Mlp a(MlpSpec::with_input(2)), b(MlpSpec::with_input(2));
  train(a, x, y, {});
  train(b, x, y, {});
  EXPECT_TRUE(a == b);

  SgdConfig bad;
  bad.batch_size = 0;
  EXPECT_THROW(validate(bad), ConfigError);
  EXPECT_THROW(train(a, x, std::vector<int>(49, 0), {}), InputError);
  MlpSpec too_short;
  too_short.layer_sizes = {3};
  EXPECT_THROW(validate(too_short), ConfigError);
}

TEST(Serialization, MlpRoundTripsExactly) {
  MlpSpec spec = MlpSpec::with_input(5, {7, 3});
  spec.activation = Activation::Tanh;
  const Mlp net(spec);
  std::stringstream ss;
  write_mlp(ss, net);
  const Mlp back = read_mlp(ss);
  EXPECT_TRUE(back == net);
  std::stringstream junk("mlp relu 2\nsizes 3\n");
  EXPECT_THROW(read_mlp(junk), InputError);
}

}  // namespace
}  // namespace pma
