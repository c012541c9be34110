#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "pma/random.hpp"

namespace pma {

/// Closed real interval [lo, hi].
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double midpoint() const noexcept { return 0.5 * (lo + hi); }
  bool contains(double x) const noexcept { return lo <= x && x <= hi; }
  bool operator==(const Interval&) const = default;
};

struct ScenarioConfig {
  int n_devices = 20;
  double class_prior = 0.5;  // P(label == 1)
  Interval mean_range_class0{-0.65, -0.25};
  Interval mean_range_class1{0.25, 0.65};
  Interval std_range{0.75, 1.25};
  int n_rounds = 10000;
  std::uint64_t rng_seed = 1;

  bool operator==(const ScenarioConfig&) const = default;
};

/// Throws ConfigError naming the first violated field.
void validate(const ScenarioConfig& cfg);

/// One sensor's class-conditional Gaussian.
struct DeviceProfile {
  int device_id = 0;
  std::array<double, 2> mean_per_class{};
  std::array<double, 2> std_per_class{};

  bool operator==(const DeviceProfile&) const = default;
};

/// One sensing instant.
struct Round {
  int round_id = 0;
  int true_label = 0;
  Eigen::VectorXd readings;
};

/// Draws n_devices profiles: means uniform in the class ranges, stds uniform
/// in std_range.
std::vector<DeviceProfile> generate_profiles(const ScenarioConfig& cfg, const RandomStream& rng);

/// Draws `count` rounds (cfg.n_rounds when count < 0). Labels and readings
/// come from separate substreams of `rng`, and round k depends only on the
/// first k draws of each, so a longer timeline extends a shorter one.
std::vector<Round> generate_rounds(const std::vector<DeviceProfile>& profiles,
                                   const ScenarioConfig& cfg, const RandomStream& rng,
                                   int count = -1);

}  // namespace pma
