#include "pma/neuralnet.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>

#include "pma/errors.hpp"
#include "pma/random.hpp"

namespace pma {
namespace {

Eigen::MatrixXd activate(const Eigen::MatrixXd& z, Activation a) {
  if (a == Activation::ReLU) return z.cwiseMax(0.0);
  return z.array().tanh().matrix();
}

// Derivative expressed through the pre-activation z and activation h.
Eigen::MatrixXd activation_derivative(const Eigen::MatrixXd& z, const Eigen::MatrixXd& h, Activation a) {
  if (a == Activation::ReLU) return (z.array() > 0.0).cast<double>().matrix();
  return (1.0 - h.array().square()).matrix();
}

void check_labels(std::span<const int> labels, int classes) {
  for (int y : labels) {
    if (y < 0 || y >= classes) {
      throw InputError("class index " + std::to_string(y) + " outside [0, " + std::to_string(classes) + ")");
    }
  }
}

struct Trace {
  std::vector<Eigen::MatrixXd> pre;   // z per layer
  std::vector<Eigen::MatrixXd> post;  // inputs, then h per hidden layer
};

Trace run_forward(const Mlp& net, const Eigen::MatrixXd& inputs) {
  const auto layers = net.layers();
  Trace t;
  t.post.reserve(layers.size());
  t.pre.reserve(layers.size());
  t.post.push_back(inputs);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    Eigen::MatrixXd z = layers[l].weights * t.post.back();
    z.colwise() += layers[l].bias;
    if (l + 1 < layers.size()) t.post.push_back(activate(z, net.spec().activation));
    t.pre.push_back(std::move(z));
  }
  return t;
}

const char* activation_name(Activation a) { return a == Activation::ReLU ? "relu" : "tanh"; }

}  // namespace

MlpSpec MlpSpec::with_input(int input_dim, std::vector<int> hidden, int classes) {
  MlpSpec s;
  s.layer_sizes.clear();
  s.layer_sizes.push_back(input_dim);
  s.layer_sizes.insert(s.layer_sizes.end(), hidden.begin(), hidden.end());
  s.layer_sizes.push_back(classes);
  return s;
}

void validate(const MlpSpec& spec) {
  if (spec.layer_sizes.size() < 2) throw ConfigError("need at least input and output layers", "surrogate.layer_sizes");
  for (int s : spec.layer_sizes) {
    if (s < 1) throw ConfigError("layer sizes must be positive", "surrogate.layer_sizes");
  }
  if (spec.num_classes() < 2) throw ConfigError("output layer needs at least two classes", "surrogate.layer_sizes");
}

void validate(const SgdConfig& cfg) {
  if (cfg.epochs < 1) throw ConfigError("must be >= 1", "surrogate.epochs");
  if (!(cfg.learning_rate >= 0.0) || !std::isfinite(cfg.learning_rate)) {
    throw ConfigError("must be finite and >= 0", "surrogate.learning_rate");
  }
  if (cfg.batch_size < 1) throw ConfigError("must be >= 1", "surrogate.batch_size");
}

int ConfidenceVector::argmax() const {
  Eigen::Index i = 0;
  probs.maxCoeff(&i);
  return static_cast<int>(i);
}

Mlp::Mlp(MlpSpec spec) : spec_(std::move(spec)) {
  validate(spec_);
  RandomStream rng = RandomStream(spec_.rng_seed).derive("mlp-init");
  const auto& sizes = spec_.layer_sizes;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const int fan_in = sizes[l], fan_out = sizes[l + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    DenseLayer layer{Eigen::MatrixXd(fan_out, fan_in), Eigen::VectorXd::Zero(fan_out)};
    // Row-major fill keeps the draw order independent of Eigen's storage.
    for (int r = 0; r < fan_out; ++r)
      for (int c = 0; c < fan_in; ++c) layer.weights(r, c) = rng.uniform(-limit, limit);
    layers_.push_back(std::move(layer));
  }
}

Mlp Mlp::zeros(MlpSpec spec) {
  validate(spec);
  std::vector<DenseLayer> layers;
  for (std::size_t l = 0; l + 1 < spec.layer_sizes.size(); ++l) {
    layers.push_back({Eigen::MatrixXd::Zero(spec.layer_sizes[l + 1], spec.layer_sizes[l]),
                      Eigen::VectorXd::Zero(spec.layer_sizes[l + 1])});
  }
  return Mlp(std::move(spec), std::move(layers));
}

Eigen::MatrixXd Mlp::logits(const Eigen::MatrixXd& inputs) const {
  if (inputs.rows() != input_dim()) {
    throw InputError("expected input dimension " + std::to_string(input_dim()) + ", got " +
                     std::to_string(inputs.rows()));
  }
  Eigen::MatrixXd a = inputs;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Eigen::MatrixXd z = layers_[l].weights * a;
    z.colwise() += layers_[l].bias;
    a = l + 1 < layers_.size() ? activate(z, spec_.activation) : std::move(z);
  }
  return a;
}

Eigen::VectorXd Mlp::logits(const Eigen::VectorXd& input) const {
  return logits(Eigen::MatrixXd(input)).col(0);
}

bool Mlp::operator==(const Mlp& other) const {
  if (!(spec_ == other.spec_) || layers_.size() != other.layers_.size()) return false;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    if (layers_[l].weights != other.layers_[l].weights || layers_[l].bias != other.layers_[l].bias) return false;
  }
  return true;
}

ConfidenceVector softmax(const Eigen::VectorXd& logits) {
  if (logits.size() == 0) throw InputError("softmax of an empty vector");
  if (!logits.allFinite()) throw NumericError("softmax input contains NaN or infinity");
  const double top = logits.maxCoeff();
  Eigen::VectorXd e = (logits.array() - top).exp().matrix();
  return ConfidenceVector{e / e.sum()};
}

Eigen::MatrixXd softmax_columns(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd out(logits.rows(), logits.cols());
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    const double top = logits.col(j).maxCoeff();
    out.col(j) = (logits.col(j).array() - top).exp().matrix();
    out.col(j) /= out.col(j).sum();
  }
  return out;
}

ConfidenceVector forward(const Mlp& net, const Eigen::VectorXd& input) { return softmax(net.logits(input)); }

Eigen::MatrixXd forward_batch(const Mlp& net, const Eigen::MatrixXd& inputs) {
  return softmax_columns(net.logits(inputs));
}

double cross_entropy(const Eigen::VectorXd& logits, int target) {
  if (target < 0 || target >= logits.size()) throw InputError("target class out of range");
  const double top = logits.maxCoeff();
  const double lse = top + std::log((logits.array() - top).exp().sum());
  return lse - logits[target];
}

Gradients backprop(const Mlp& net, const Eigen::MatrixXd& inputs, std::span<const int> labels) {
  if (inputs.cols() != static_cast<Eigen::Index>(labels.size())) {
    throw InputError("inputs and labels differ in length");
  }
  if (inputs.cols() == 0) throw InputError("empty batch");
  check_labels(labels, net.num_classes());
  Trace t = run_forward(net, inputs);
  const auto layers = net.layers();
  const auto batch = static_cast<double>(inputs.cols());

  Gradients g;
  const Eigen::MatrixXd& z_out = t.pre.back();
  Eigen::MatrixXd delta = softmax_columns(z_out);  // dLoss_j / dz_out, per sample
  for (Eigen::Index j = 0; j < inputs.cols(); ++j) {
    const int y = labels[static_cast<std::size_t>(j)];
    g.loss += cross_entropy(z_out.col(j), y);
    delta(y, j) -= 1.0;
  }
  g.loss /= batch;

  g.layers.resize(layers.size());
  for (std::size_t l = layers.size(); l-- > 0;) {
    g.layers[l].weights = delta * t.post[l].transpose() / batch;
    g.layers[l].bias = delta.rowwise().sum() / batch;
    Eigen::MatrixXd back = layers[l].weights.transpose() * delta;
    if (l == 0) {
      g.inputs = std::move(back);
    } else {
      delta = back.cwiseProduct(activation_derivative(t.pre[l - 1], t.post[l], net.spec().activation));
    }
  }
  return g;
}

Eigen::MatrixXd input_gradients(const Mlp& net, const Eigen::MatrixXd& inputs, std::span<const int> targets) {
  if (inputs.rows() != net.input_dim()) {
    throw InputError("expected input dimension " + std::to_string(net.input_dim()) + ", got " +
                     std::to_string(inputs.rows()));
  }
  check_labels(targets, net.num_classes());
  if (inputs.cols() != static_cast<Eigen::Index>(targets.size())) {
    throw InputError("inputs and targets differ in length");
  }
  // Skip weight gradients: only the input-side chain is needed.
  Trace t = run_forward(net, inputs);
  const auto layers = net.layers();
  Eigen::MatrixXd delta = softmax_columns(t.pre.back());
  for (Eigen::Index j = 0; j < inputs.cols(); ++j) delta(targets[static_cast<std::size_t>(j)], j) -= 1.0;
  for (std::size_t l = layers.size(); l-- > 0;) {
    Eigen::MatrixXd back = layers[l].weights.transpose() * delta;
    if (l == 0) return back;
    delta = back.cwiseProduct(activation_derivative(t.pre[l - 1], t.post[l], net.spec().activation));
  }
  return {};
}

Eigen::VectorXd input_gradient(const Mlp& net, const Eigen::VectorXd& input, int target_class) {
  const int targets[1] = {target_class};
  return input_gradients(net, Eigen::MatrixXd(input), targets).col(0);
}

TrainResult train(Mlp& net, const Eigen::MatrixXd& inputs, std::span<const int> labels, const SgdConfig& cfg) {
  validate(cfg);
  if (inputs.cols() == 0 || labels.empty()) throw TrainingError("empty training set");
  if (inputs.cols() != static_cast<Eigen::Index>(labels.size())) throw InputError("inputs and labels differ in length");
  if (inputs.rows() != net.input_dim()) throw InputError("training inputs do not match the input layer");
  check_labels(labels, net.num_classes());

  const auto n = static_cast<std::size_t>(inputs.cols());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  RandomStream rng = RandomStream(net.spec().rng_seed).derive("sgd-shuffle");

  TrainResult result;
  result.loss_curve.reserve(static_cast<std::size_t>(cfg.epochs));
  const auto batch_size = static_cast<std::size_t>(cfg.batch_size);
  Eigen::MatrixXd batch;
  std::vector<int> batch_labels;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng.engine());
    double loss_sum = 0.0;
    int batches = 0;
    for (std::size_t start = 0; start < n; start += batch_size) {
      const std::size_t stop = std::min(n, start + batch_size);
      batch.resize(inputs.rows(), static_cast<Eigen::Index>(stop - start));
      batch_labels.resize(stop - start);
      for (std::size_t k = start; k < stop; ++k) {
        batch.col(static_cast<Eigen::Index>(k - start)) = inputs.col(static_cast<Eigen::Index>(order[k]));
        batch_labels[k - start] = labels[order[k]];
      }
      Gradients g = backprop(net, batch, batch_labels);
      loss_sum += g.loss;
      ++batches;
      if (cfg.learning_rate == 0.0) continue;
      auto layers = net.layers();
      for (std::size_t l = 0; l < layers.size(); ++l) {
        layers[l].weights -= cfg.learning_rate * g.layers[l].weights;
        layers[l].bias -= cfg.learning_rate * g.layers[l].bias;
      }
    }
    result.loss_curve.push_back(loss_sum / batches);
  }
  return result;
}

void write_mlp(std::ostream& os, const Mlp& net) {
  const auto old_precision = os.precision(std::numeric_limits<double>::max_digits10);
  const auto& sizes = net.spec().layer_sizes;
  os << "mlp " << activation_name(net.spec().activation) << ' ' << sizes.size() << ' ' << net.spec().rng_seed << '\n';
  os << "sizes";
  for (int s : sizes) os << ' ' << s;
  os << '\n';
  const auto layers = net.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    os << "layer " << l << '\n';
    for (Eigen::Index r = 0; r < layers[l].weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < layers[l].weights.cols(); ++c) os << (c ? " " : "") << layers[l].weights(r, c);
      os << '\n';
    }
    os << "bias";
    for (Eigen::Index r = 0; r < layers[l].bias.size(); ++r) os << ' ' << layers[l].bias[r];
    os << '\n';
  }
  os.precision(old_precision);
}

Mlp read_mlp(std::istream& is) {
  std::string magic, act, word;
  std::size_t count = 0;
  MlpSpec spec;
  if (!(is >> magic >> act >> count >> spec.rng_seed) || magic != "mlp" || count < 2) {
    throw InputError("mlp record: bad header");
  }
  if (act == "relu") {
    spec.activation = Activation::ReLU;
  } else if (act == "tanh") {
    spec.activation = Activation::Tanh;
  } else {
    throw InputError("mlp record: unknown activation '" + act + "'");
  }
  if (!(is >> word) || word != "sizes") throw InputError("mlp record: expected 'sizes'");
  spec.layer_sizes.assign(count, 0);
  for (auto& s : spec.layer_sizes) {
    if (!(is >> s)) throw InputError("mlp record: truncated sizes");
  }
  Mlp net = Mlp::zeros(spec);
  auto layers = net.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    std::size_t index = 0;
    if (!(is >> word >> index) || word != "layer" || index != l) throw InputError("mlp record: expected 'layer'");
    for (Eigen::Index r = 0; r < layers[l].weights.rows(); ++r)
      for (Eigen::Index c = 0; c < layers[l].weights.cols(); ++c)
        if (!(is >> layers[l].weights(r, c))) throw InputError("mlp record: truncated weights");
    if (!(is >> word) || word != "bias") throw InputError("mlp record: expected 'bias'");
    for (Eigen::Index r = 0; r < layers[l].bias.size(); ++r)
      if (!(is >> layers[l].bias[r])) throw InputError("mlp record: truncated bias");
  }
  return net;
}

}  // namespace pma
