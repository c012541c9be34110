#include "pma/scenario.hpp"

#include <cmath>
#include <string>

#include "pma/errors.hpp"

namespace pma {
namespace {

void check_interval(const Interval& r, const char* key) {
  if (!std::isfinite(r.lo) || !std::isfinite(r.hi)) throw ConfigError("interval bounds must be finite", key);
  if (r.lo > r.hi) {
    throw ConfigError("lower bound " + std::to_string(r.lo) + " exceeds upper bound " + std::to_string(r.hi), key);
  }
}

}  // namespace

void validate(const ScenarioConfig& cfg) {
  if (cfg.n_devices < 1) throw ConfigError("must be >= 1", "scenario.n_devices");
  if (cfg.n_rounds < 1) throw ConfigError("must be >= 1", "scenario.n_rounds");
  if (!(cfg.class_prior >= 0.0 && cfg.class_prior <= 1.0)) {
    throw ConfigError("must lie in [0, 1]", "scenario.class_prior");
  }
  check_interval(cfg.mean_range_class0, "scenario.mean_range_class0");
  check_interval(cfg.mean_range_class1, "scenario.mean_range_class1");
  check_interval(cfg.std_range, "scenario.std_range");
  if (cfg.std_range.lo <= 0.0) throw ConfigError("standard deviations must be > 0", "scenario.std_range");
}

std::vector<DeviceProfile> generate_profiles(const ScenarioConfig& cfg, const RandomStream& rng) {
  validate(cfg);
  RandomStream stream = rng.derive("profiles");
  std::vector<DeviceProfile> profiles;
  profiles.reserve(static_cast<std::size_t>(cfg.n_devices));
  for (int i = 0; i < cfg.n_devices; ++i) {
    DeviceProfile p;
    p.device_id = i;
    p.mean_per_class[0] = stream.uniform(cfg.mean_range_class0.lo, cfg.mean_range_class0.hi);
    p.mean_per_class[1] = stream.uniform(cfg.mean_range_class1.lo, cfg.mean_range_class1.hi);
    p.std_per_class[0] = stream.uniform(cfg.std_range.lo, cfg.std_range.hi);
    p.std_per_class[1] = stream.uniform(cfg.std_range.lo, cfg.std_range.hi);
    profiles.push_back(p);
  }
  return profiles;
}

std::vector<Round> generate_rounds(const std::vector<DeviceProfile>& profiles,
                                   const ScenarioConfig& cfg, const RandomStream& rng,
                                   int count) {
  validate(cfg);
  if (profiles.empty()) throw ConfigError("no device profiles", "scenario.n_devices");
  const int n_rounds = count < 0 ? cfg.n_rounds : count;
  const auto n = static_cast<Eigen::Index>(profiles.size());

  RandomStream labels = rng.derive("labels");
  RandomStream readings = rng.derive("readings");

  std::vector<Round> rounds;
  rounds.reserve(static_cast<std::size_t>(n_rounds));
  for (int r = 0; r < n_rounds; ++r) {
    Round round;
    round.round_id = r;
    round.true_label = labels.bernoulli(cfg.class_prior) ? 1 : 0;
    round.readings.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& p = profiles[static_cast<std::size_t>(i)];
      round.readings[i] = readings.normal(p.mean_per_class[round.true_label], p.std_per_class[round.true_label]);
    }
    rounds.push_back(std::move(round));
  }
  return rounds;
}

}  // namespace pma
