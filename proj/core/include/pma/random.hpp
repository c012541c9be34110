#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace pma {

/// Mixes a 64-bit value (splitmix64 finalizer).
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Deterministic seed for the substream `tag` of `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag) noexcept;

/// A seeded random stream. Child streams are derived from the seed, not from
/// the current engine state, so drawing from a parent never perturbs a child.
class RandomStream {
 public:
  using Engine = std::mt19937_64;

  explicit RandomStream(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }
  Engine& engine() noexcept { return engine_; }

  RandomStream derive(std::string_view tag) const { return RandomStream(derive_seed(seed_, tag)); }

  double uniform(double lo, double hi);
  double normal(double mean, double stddev);
  bool bernoulli(double p);

 private:
  std::uint64_t seed_;
  Engine engine_;
};

}  // namespace pma
