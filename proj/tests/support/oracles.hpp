// Independent reference computations used as test oracles.
#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "pma/fusion.hpp"
#include "pma/neuralnet.hpp"
#include "pma/report_io.hpp"
#include "pma/scenario.hpp"
#include "pma/simulator.hpp"

namespace pma::oracle {

inline double relative_error(double a, double b, double floor = 1e-8) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

/// Central difference of the cross-entropy loss w.r.t. the input.
inline Eigen::VectorXd fd_input_gradient(const Mlp& net, const Eigen::VectorXd& x, int target, double h = 1e-5) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Eigen::VectorXd xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    g[i] = (cross_entropy(net.logits(xp), target) - cross_entropy(net.logits(xm), target)) / (2 * h);
  }
  return g;
}

/// Smallest |pre-activation| over the hidden ReLU units for input x, or
/// infinity for tanh nets. Central differences are only valid when this
/// exceeds the perturbation's effect, so samples near a kink are redrawn.
inline double min_relu_preactivation(const Mlp& net, const Eigen::VectorXd& x) {
  if (net.spec().activation != Activation::ReLU) return INFINITY;
  double smallest = INFINITY;
  Eigen::VectorXd a = x;
  const auto layers = net.layers();
  for (std::size_t l = 0; l + 1 < layers.size(); ++l) {
    const Eigen::VectorXd z = layers[l].weights * a + layers[l].bias;
    smallest = std::min(smallest, z.cwiseAbs().minCoeff());
    a = z.cwiseMax(0.0);
  }
  return smallest;
}

inline constexpr double kKinkMargin = 1e-3;

/// Mean batch loss, recomputed from logits.
inline double batch_loss(const Mlp& net, const Eigen::MatrixXd& inputs, std::span<const int> labels) {
  const Eigen::MatrixXd z = net.logits(inputs);
  double sum = 0.0;
  for (Eigen::Index j = 0; j < z.cols(); ++j) sum += cross_entropy(z.col(j), labels[static_cast<std::size_t>(j)]);
  return sum / static_cast<double>(z.cols());
}

/// Worst relative error between backprop weight/bias gradients and central
/// differences over every parameter of the net.
inline double max_weight_gradient_error(const Mlp& net, const Eigen::MatrixXd& inputs, std::span<const int> labels,
                                        double h = 1e-5) {
  const Gradients g = backprop(net, inputs, labels);
  Mlp probe = net;
  double worst = 0.0;
  const auto check = [&](double& param, double analytic) {
    const double saved = param;
    param = saved + h;
    const double up = batch_loss(probe, inputs, labels);
    param = saved - h;
    const double down = batch_loss(probe, inputs, labels);
    param = saved;
    worst = std::max(worst, relative_error(analytic, (up - down) / (2 * h)));
  };
  for (std::size_t l = 0; l < probe.layers().size(); ++l) {
    DenseLayer& layer = probe.layers()[l];
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) check(layer.weights(r, c), g.layers[l].weights(r, c));
      check(layer.bias[r], g.layers[l].bias[r]);
    }
  }
  return worst;
}

/// Softmax evaluated directly in long double, without max subtraction.
inline std::vector<long double> softmax_long_double(const Eigen::VectorXd& z) {
  std::vector<long double> e(static_cast<std::size_t>(z.size()));
  long double sum = 0.0L;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    e[static_cast<std::size_t>(i)] = std::exp(static_cast<long double>(z[i]));
    sum += e[static_cast<std::size_t>(i)];
  }
  for (auto& v : e) v /= sum;
  return e;
}

/// sign(w.x + b) with a zero decision value mapped to class 0.
inline int refuse(const Eigen::VectorXd& w, double b, const Eigen::VectorXd& x) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < w.size(); ++i) s += w[i] * x[i];
  return s + b > 0.0 ? 1 : 0;
}

/// Fisher linear discriminant with pooled covariance, the Bayes rule for
/// equal-covariance Gaussian classes.
class Lda {
 public:
  explicit Lda(const std::vector<Round>& data) {
    const Eigen::Index n = data.front().readings.size();
    Eigen::VectorXd mean[2] = {Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)};
    double count[2] = {0, 0};
    for (const Round& r : data) {
      mean[r.true_label] += r.readings;
      count[r.true_label] += 1;
    }
    for (int k = 0; k < 2; ++k) mean[k] /= count[k];
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(n, n);
    for (const Round& r : data) {
      const Eigen::VectorXd d = r.readings - mean[r.true_label];
      cov += d * d.transpose();
    }
    cov /= static_cast<double>(data.size() - 2);
    w_ = cov.ldlt().solve(mean[1] - mean[0]);
    b_ = -0.5 * w_.dot(mean[0] + mean[1]) + std::log(count[1] / count[0]);
  }

  int classify(const Eigen::VectorXd& x) const { return w_.dot(x) + b_ > 0.0 ? 1 : 0; }

  double accuracy(const std::vector<Round>& data) const {
    int hits = 0;
    for (const Round& r : data) hits += classify(r.readings) == r.true_label ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(data.size());
  }

 private:
  Eigen::VectorXd w_;
  double b_ = 0.0;
};

struct ReplayTotals {
  int launched = 0;
  int flipped = 0;
  int decision_mismatches = 0;  // stored decisions that disagree with re-fusion
  std::optional<double> hit_ratio;
};

/// Re-fuses every dumped clean and attacked report vector with the stored
/// linear model and recounts launches and flips.
inline ReplayTotals replay(const FusionModel& model, const std::vector<DumpedRound>& rounds) {
  ReplayTotals t;
  for (const DumpedRound& d : rounds) {
    const int clean = refuse(model.weights(), model.bias(), d.clean);
    const int attacked = refuse(model.weights(), model.bias(), d.attacked);
    if (clean != d.record.clean_decision || attacked != d.record.attacked_decision) ++t.decision_mismatches;
    const bool changed = !(d.clean.array() == d.attacked.array()).all();
    if (d.record.launched || changed) ++t.launched;
    if (clean != attacked) ++t.flipped;
  }
  if (t.launched > 0) t.hit_ratio = static_cast<double>(t.flipped) / t.launched;
  return t;
}

/// Spearman rank correlation (average ranks for ties).
inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  const auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = 0.5 * static_cast<double>(i + j) + 1.0;
      i = j + 1;
    }
    return r;
  };
  const auto rx = ranks(x), ry = ranks(y);
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / static_cast<double>(rx.size());
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / static_cast<double>(ry.size());
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace pma::oracle
