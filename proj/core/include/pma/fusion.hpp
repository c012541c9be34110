#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "pma/scenario.hpp"

namespace pma {

enum class FusionKind { LinearSVM, MajorityVote };

/// The fusion center's binary decision rule over the n reported readings.
///
/// LinearSVM decides class 1 iff w.x + b > 0; a decision value of exactly 0
/// maps to class 0. MajorityVote decides class 1 iff strictly more than half
/// of the devices report a value above their threshold.
class FusionModel {
 public:
  static FusionModel linear(Eigen::VectorXd weights, double bias);
  static FusionModel majority_vote(Eigen::VectorXd thresholds);

  FusionKind kind() const noexcept { return kind_; }
  int dimension() const noexcept { return static_cast<int>(params_.size()); }

  const Eigen::VectorXd& weights() const;     // LinearSVM only
  double bias() const;                        // LinearSVM only
  const Eigen::VectorXd& thresholds() const;  // MajorityVote only

  /// LinearSVM: w.x + b, accumulated left to right.
  double decision_value(const Eigen::VectorXd& readings) const;

  bool operator==(const FusionModel&) const;

 private:
  FusionModel(FusionKind kind, Eigen::VectorXd params, double bias)
      : kind_(kind), params_(std::move(params)), bias_(bias) {}

  FusionKind kind_ = FusionKind::LinearSVM;
  Eigen::VectorXd params_;
  double bias_ = 0.0;
};

struct FusionTrainConfig {
  double regularization = 1e-3;  // lambda
  int epochs = 50;
  double learning_rate_scale = 1.0;
  std::uint64_t rng_seed = 1;

  bool operator==(const FusionTrainConfig&) const = default;
};

void validate(const FusionTrainConfig& cfg);

struct FusionTrainResult {
  FusionModel model;
  double training_accuracy = 0.0;
};

/// Pegasos: stochastic subgradient descent on the L2-regularised hinge loss,
/// step learning_rate_scale / (lambda * t), followed by projection onto the
/// ball of radius 1/sqrt(lambda). The bias is learned as the weight of a
/// constant feature and is regularised with the rest.
FusionTrainResult train_fusion(const std::vector<Round>& data, const FusionTrainConfig& cfg);

/// Per-device threshold at the midpoint of the two empirical class means.
FusionModel train_majority_vote(const std::vector<Round>& data);

int fuse(const FusionModel& model, const Eigen::VectorXd& readings);

/// (w.x + b) / ||w||. Throws UnsupportedError for MajorityVote.
double decision_margin(const FusionModel& model, const Eigen::VectorXd& readings);

/// Fraction of rounds whose fused decision equals the true label.
double accuracy(const FusionModel& model, const std::vector<Round>& data);

/// Flat text record:
///   fusion LinearSVM <n>
///   weights <w_0> ... <w_{n-1}>
///   bias <b>
/// or `fusion MajorityVote <n>` followed by `thresholds ...`. Values are
/// written with enough digits to round-trip exactly.
void write_fusion_model(std::ostream& os, const FusionModel& model);
FusionModel read_fusion_model(std::istream& is);

}  // namespace pma
