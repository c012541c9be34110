#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "pma/neuralnet.hpp"

namespace pma {

/// Which side of the confidence threshold triggers an attack.
enum class GateDirection {
  AtLeast,  // launch iff confidence >= tau (default)
  Below,    // launch iff confidence < tau (sensitivity analysis only)
};

struct AdversaryConfig {
  std::vector<int> controlled_ids;  // size m, distinct, each in [0, n)
  double confidence_threshold = 0.75;
  double craft_step = 0.085;
  int craft_iters = 20;
  bool stop_on_surrogate_flip = false;
  int margin_steps = 1;  // extra steps after the surrogate flips, when stopping early
  bool clip_to_observed_range = true;
  GateDirection gate_direction = GateDirection::AtLeast;

  int m() const noexcept { return static_cast<int>(controlled_ids.size()); }
  static std::vector<int> first_devices(int m);
  bool operator==(const AdversaryConfig&) const = default;
};

void validate(const AdversaryConfig& cfg, int n_devices);
void validate_threshold(double tau);

/// Readings of the controlled devices, in controlled_ids order.
Eigen::VectorXd controlled_view(const Eigen::VectorXd& readings, std::span<const int> controlled_ids);

/// The adversary's passive record of (controlled readings, fusion decision).
class ObservationLog {
 public:
  struct Entry {
    Eigen::VectorXd controlled_readings;
    int fusion_decision = 0;
  };

  explicit ObservationLog(int dimension);

  int dimension() const noexcept { return dimension_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  std::span<const Entry> entries() const noexcept { return entries_; }

  /// Appends one entry. Throws InputError on a length mismatch or a
  /// decision outside {0, 1}.
  void observe(Eigen::VectorXd controlled_readings, int fusion_decision);

  /// Coordinatewise min and max over every logged reading.
  Eigen::VectorXd observed_min() const;
  Eigen::VectorXd observed_max() const;

 private:
  int dimension_;
  std::vector<Entry> entries_;
};

struct SurrogateModel {
  Mlp net;
  Eigen::VectorXd observed_min;
  Eigen::VectorXd observed_max;
  double log_agreement = 0.0;  // fraction of logged decisions reproduced
  std::vector<double> loss_curve;
};

/// Trains `spec` (whose input layer must match the log's dimension) on the
/// fusion decisions recorded in the log. Throws TrainingError when the log
/// is empty or holds a single decision class.
SurrogateModel fit_surrogate(const ObservationLog& log, const MlpSpec& spec, const SgdConfig& sgd);

struct AttackDecision {
  bool launched = false;
  int inferred_label = 0;
  double confidence = 0.0;
  std::optional<Eigen::VectorXd> crafted_readings;  // set when launched
  bool surrogate_flipped = false;
};

/// Confidence gate: inferred_label = argmax, confidence = max softmax entry.
AttackDecision gate(const SurrogateModel& surrogate, const Eigen::VectorXd& controlled_readings, double tau,
                    GateDirection direction = GateDirection::AtLeast);

struct CraftResult {
  Eigen::VectorXd readings;
  bool surrogate_flipped = false;
  int steps = 0;
};

/// Iterative sign-gradient push of the controlled readings toward the class
/// opposite `inferred_label`: each step descends the surrogate's loss for the
/// opposite class by craft_step per coordinate, then clips to the observed
/// box when enabled. By default all craft_iters steps are taken. With
/// stop_on_surrogate_flip, the first iterate the surrogate assigns to the
/// opposite class gets margin_steps further steps and is returned instead.
/// surrogate_flipped reports the surrogate's verdict on the returned vector.
CraftResult craft(const SurrogateModel& surrogate, const Eigen::VectorXd& controlled_readings, int inferred_label,
                  const AdversaryConfig& cfg);

/// Applies craft to every column of a batch.
std::vector<CraftResult> craft_batch(const SurrogateModel& surrogate, const Eigen::MatrixXd& controlled_readings,
                                     std::span<const int> inferred_labels, const AdversaryConfig& cfg);

}  // namespace pma
