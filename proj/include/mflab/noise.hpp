#pragma once

// Counter-based Gaussian noise: every variate is a pure function of
// (seed, stream, replication, particle, mode, step), so draws do not depend
// on evaluation order or thread schedule.

#include <array>
#include <cstdint>

namespace mflab {

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

/// Philox4x32 with 10 rounds (Salmon et al., SC'11).
PhiloxCounter philox4x32_10(PhiloxCounter counter, PhiloxKey key);

/// Uniform double in the open interval (0, 1) from two 32-bit words.
double uniform_open(std::uint32_t hi, std::uint32_t lo);

enum class NoiseDomain : std::uint8_t {
  particles = 0,  // interacting systems and their coupled independent copies
  mean_field = 1, // mean-field population used by the Picard solver
  sampling = 2,   // subsampling and other auxiliary randomness
  probes = 3,     // condition-checker samplers
};

class NoiseStream {
 public:
  explicit NoiseStream(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }

  /// Standard normal variate for one key.
  double normal(NoiseDomain domain, std::uint32_t replication, std::uint32_t particle,
                std::uint32_t mode, std::uint32_t step) const;

  /// Normalized sum of `substeps` consecutive fine-grid variates, i.e. the
  /// increment a coarse step sees when the fine grid is `substeps` times finer.
  double coarse_normal(NoiseDomain domain, std::uint32_t replication, std::uint32_t particle,
                       std::uint32_t mode, std::uint32_t step, std::uint32_t substeps) const;

  /// Uniform variate in (0, 1) for auxiliary keyed sampling.
  double uniform(NoiseDomain domain, std::uint32_t a, std::uint32_t b, std::uint32_t c,
                 std::uint32_t d) const;

 private:
  PhiloxCounter block(NoiseDomain domain, std::uint32_t replication, std::uint32_t particle,
                      std::uint32_t mode, std::uint32_t step) const;

  std::uint64_t seed_;
};

}  // namespace mflab
