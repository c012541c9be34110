#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace pma {

enum class Activation { ReLU, Tanh };

/// Shape of a dense feed-forward classifier. layer_sizes lists every layer,
/// input first and softmax output last; the default is five layers
/// (input, three hidden of width 32, two-way output).
struct MlpSpec {
  std::vector<int> layer_sizes{8, 32, 32, 32, 2};
  Activation activation = Activation::ReLU;
  std::uint64_t rng_seed = 1;

  static MlpSpec with_input(int input_dim, std::vector<int> hidden = {32, 32, 32}, int classes = 2);

  int input_dim() const { return layer_sizes.front(); }
  int num_classes() const { return layer_sizes.back(); }
  bool operator==(const MlpSpec&) const = default;
};

void validate(const MlpSpec& spec);

/// Weights map layer l's activations (rows: next layer) from the previous
/// layer's (cols).
struct DenseLayer {
  Eigen::MatrixXd weights;
  Eigen::VectorXd bias;
};

/// Softmax probabilities. Entries are in [0, 1] and sum to 1.
struct ConfidenceVector {
  Eigen::VectorXd probs;

  int argmax() const;
  double max() const { return probs.maxCoeff(); }
  Eigen::Index size() const { return probs.size(); }
};

class Mlp {
 public:
  /// Glorot-uniform weights (+-sqrt(6/(fan_in+fan_out))), zero biases, drawn
  /// from spec.rng_seed.
  explicit Mlp(MlpSpec spec);

  /// Same shape, every weight and bias zero.
  static Mlp zeros(MlpSpec spec);

  const MlpSpec& spec() const noexcept { return spec_; }
  int input_dim() const noexcept { return spec_.input_dim(); }
  int num_classes() const noexcept { return spec_.num_classes(); }

  std::span<const DenseLayer> layers() const noexcept { return layers_; }
  std::span<DenseLayer> layers() noexcept { return layers_; }

  /// Final-layer pre-softmax values; `inputs` holds one sample per column.
  Eigen::MatrixXd logits(const Eigen::MatrixXd& inputs) const;
  Eigen::VectorXd logits(const Eigen::VectorXd& input) const;

  bool operator==(const Mlp& other) const;

 private:
  Mlp(MlpSpec spec, std::vector<DenseLayer> layers) : spec_(std::move(spec)), layers_(std::move(layers)) {}

  MlpSpec spec_;
  std::vector<DenseLayer> layers_;
};

/// Max-subtracted softmax. Throws NumericError on NaN or infinite logits.
ConfidenceVector softmax(const Eigen::VectorXd& logits);

/// Column-wise softmax of a logit matrix (no finiteness check).
Eigen::MatrixXd softmax_columns(const Eigen::MatrixXd& logits);

ConfidenceVector forward(const Mlp& net, const Eigen::VectorXd& input);

/// Probabilities for a batch, one column per sample.
Eigen::MatrixXd forward_batch(const Mlp& net, const Eigen::MatrixXd& inputs);

/// Cross-entropy -log softmax(z)[target] in log-sum-exp form.
double cross_entropy(const Eigen::VectorXd& logits, int target);

/// Mean cross-entropy over a batch and its gradient with respect to every
/// weight and bias, plus the per-sample input gradients (column j is the
/// gradient of sample j's own loss, not divided by the batch size).
struct Gradients {
  double loss = 0.0;
  std::vector<DenseLayer> layers;
  Eigen::MatrixXd inputs;
};

Gradients backprop(const Mlp& net, const Eigen::MatrixXd& inputs, std::span<const int> labels);

/// d CrossEntropy(forward(net, input), target_class) / d input.
/// ReLU uses subgradient 0 at exactly 0.
Eigen::VectorXd input_gradient(const Mlp& net, const Eigen::VectorXd& input, int target_class);

/// Per-column input gradients for a batch of (input, target) pairs.
Eigen::MatrixXd input_gradients(const Mlp& net, const Eigen::MatrixXd& inputs, std::span<const int> targets);

struct SgdConfig {
  int epochs = 20;
  double learning_rate = 0.05;
  int batch_size = 32;

  bool operator==(const SgdConfig&) const = default;
};

void validate(const SgdConfig& cfg);

struct TrainResult {
  std::vector<double> loss_curve;  // mean batch loss per epoch
};

/// Mini-batch SGD on mean cross-entropy. `inputs` holds one sample per
/// column. Batches are reshuffled every epoch from a stream derived from the
/// net's rng_seed, so identical calls give identical weights.
TrainResult train(Mlp& net, const Eigen::MatrixXd& inputs, std::span<const int> labels, const SgdConfig& cfg);

/// Flat text record:
///   mlp <activation> <L>
///   sizes <s_0> ... <s_{L-1}>
///   layer <l> then rows of weights, then `bias` row.
void write_mlp(std::ostream& os, const Mlp& net);
Mlp read_mlp(std::istream& is);

}  // namespace pma
