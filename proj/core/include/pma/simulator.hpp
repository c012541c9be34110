#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "pma/adversary.hpp"
#include "pma/fusion.hpp"
#include "pma/neuralnet.hpp"
#include "pma/scenario.hpp"

namespace pma {

struct SurrogateConfig {
  std::vector<int> hidden_layers{32, 32, 32};
  Activation activation = Activation::ReLU;
  SgdConfig sgd;

  bool operator==(const SurrogateConfig&) const = default;
};

struct RunConfig {
  ScenarioConfig scenario;
  FusionTrainConfig fusion_train;
  int fusion_training_rounds = 2000;
  SurrogateConfig surrogate;
  AdversaryConfig adversary{AdversaryConfig::first_devices(8)};
  int observation_rounds = 2000;
  int attack_rounds = 8000;
  std::uint64_t master_seed = 1;

  bool operator==(const RunConfig&) const = default;
};

/// Throws ConfigError naming the first violated field.
void validate(const RunConfig& cfg);

struct AttackRecord {
  int round_id = 0;
  int true_label = 0;
  int clean_decision = 0;
  int attacked_decision = 0;
  bool launched = false;
  int inferred_label = 0;
  double confidence = 0.0;
  bool flipped = false;
};

/// Clean and submitted report vectors of one attack-phase round.
struct RoundReports {
  Eigen::VectorXd clean;
  Eigen::VectorXd attacked;
};

struct RunMetrics {
  std::optional<double> hit_ratio;  // absent when nothing was launched
  int attacks_launched = 0;
  int attacks_flipped = 0;
  double attack_rate = 0.0;
  std::optional<double> surrogate_agreement;  // absent when m = 0
  double fusion_clean_accuracy = 0.0;
  int surrogate_flips = 0;  // launched rounds whose crafted vector flipped the surrogate

  bool operator==(const RunMetrics&) const = default;
};

struct RunReport {
  RunConfig config;
  RunMetrics metrics;
  FusionModel fusion;
  std::vector<AttackRecord> records;
  std::vector<RoundReports> reports;  // filled only when requested
};

/// flipped / launched, or nothing when no attack was launched.
std::optional<double> hit_ratio(std::span<const AttackRecord> records);

/// Runs the fusion pre-training, observation and surrogate-fitting phases
/// once, and precomputes every attack-phase round's gate inputs and crafted
/// report. Evaluating a threshold is then a filter over those rounds, so
/// all thresholds of one (config, seed) see the same surrogate and rounds.
class Experiment {
 public:
  explicit Experiment(const RunConfig& cfg);

  const RunConfig& config() const noexcept { return cfg_; }
  const FusionModel& fusion() const noexcept { return fusion_; }
  const std::optional<SurrogateModel>& surrogate() const noexcept { return surrogate_; }
  const std::vector<DeviceProfile>& profiles() const noexcept { return profiles_; }

  /// Attack-phase outcome at threshold tau (validated to lie in (0.5, 1]).
  RunReport evaluate(double tau, bool keep_reports = false) const;

 private:
  struct Pending {
    Round round;
    int clean_decision = 0;
    int inferred_label = 0;
    double confidence = 0.0;
    Eigen::VectorXd attacked;  // full n-vector with crafted controlled coordinates
    int attacked_decision = 0;
    bool surrogate_flipped = false;
  };

  RunConfig cfg_;
  std::vector<DeviceProfile> profiles_;
  FusionModel fusion_;
  std::optional<SurrogateModel> surrogate_;
  std::vector<Pending> attack_phase_;
};

/// One full timeline. Deterministic given cfg (including master_seed).
RunReport run(const RunConfig& cfg, bool keep_reports = false);

struct SweepRow {
  int m = 0;
  double tau = 0.0;
  std::uint64_t seed = 0;
  RunMetrics metrics;

  bool operator==(const SweepRow&) const = default;
};

/// Full factorial over (m, tau, seed) with controlled_ids = first m devices.
/// Runs fan out over `jobs` worker threads; rows come back sorted by
/// (m, tau, seed) regardless of scheduling.
std::vector<SweepRow> sweep(const RunConfig& base, std::span<const int> m_values, std::span<const double> tau_values,
                            std::span<const std::uint64_t> seeds, int jobs = 1);

struct SweepCell {
  int m = 0;
  double tau = 0.0;
  std::optional<double> mean_hit_ratio;  // over seeds with a defined hit ratio
  double std_hit_ratio = 0.0;            // sample standard deviation
  int defined_runs = 0;
  int runs = 0;
  double mean_attack_rate = 0.0;
};

/// Per-(m, tau) aggregation; undefined hit ratios are skipped.
std::vector<SweepCell> aggregate(std::span<const SweepRow> rows);

std::vector<SweepCell> sweep_m(const RunConfig& base, std::span<const int> m_values,
                               std::span<const std::uint64_t> seeds, int jobs = 1);

std::vector<SweepCell> sweep_threshold(const RunConfig& base, std::span<const double> tau_values,
                                       std::span<const int> m_values, std::span<const std::uint64_t> seeds,
                                       int jobs = 1);

}  // namespace pma
