#include "mflab/noise.hpp"

#include <cmath>
#include <numbers>

#include "mflab/error.hpp"

namespace mflab {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& lo, std::uint32_t& hi) {
  const std::uint64_t prod = static_cast<std::uint64_t>(a) * b;
  lo = static_cast<std::uint32_t>(prod);
  hi = static_cast<std::uint32_t>(prod >> 32);
}

}  // namespace

PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kPhiloxW0;
      key[1] += kPhiloxW1;
    }
    std::uint32_t lo0, hi0, lo1, hi1;
    mulhilo(kPhiloxM0, ctr[0], lo0, hi0);
    mulhilo(kPhiloxM1, ctr[2], lo1, hi1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

double uniform_open(std::uint32_t hi, std::uint32_t lo) {
  // 52 bits so that the half-offset stays exactly representable below 1.
  const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 12;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-52;
}

PhiloxCounter NoiseStream::block(NoiseDomain domain, std::uint32_t replication,
                                 std::uint32_t particle, std::uint32_t mode,
                                 std::uint32_t step) const {
  if (replication >= (1u << 24)) {
    throw Error(ErrorKind::InvalidArgument, "replication index exceeds 2^24");
  }
  const PhiloxKey key{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)};
  const PhiloxCounter ctr{step, mode, particle,
                          (replication << 8) | static_cast<std::uint32_t>(domain)};
  return philox4x32_10(ctr, key);
}

double NoiseStream::normal(NoiseDomain domain, std::uint32_t replication, std::uint32_t particle,
                           std::uint32_t mode, std::uint32_t step) const {
  const PhiloxCounter r = block(domain, replication, particle, mode, step);
  const double u1 = uniform_open(r[0], r[1]);
  const double u2 = uniform_open(r[2], r[3]);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double NoiseStream::coarse_normal(NoiseDomain domain, std::uint32_t replication,
                                  std::uint32_t particle, std::uint32_t mode, std::uint32_t step,
                                  std::uint32_t substeps) const {
  if (substeps <= 1) return normal(domain, replication, particle, mode, step);
  double acc = 0.0;
  for (std::uint32_t s = 0; s < substeps; ++s) {
    acc += normal(domain, replication, particle, mode, step * substeps + s);
  }
  return acc / std::sqrt(static_cast<double>(substeps));
}

double NoiseStream::uniform(NoiseDomain domain, std::uint32_t a, std::uint32_t b,
                            std::uint32_t c, std::uint32_t d) const {
  const PhiloxCounter r = block(domain, a, b, c, d);
  return uniform_open(r[0], r[1]);
}

}  // namespace mflab
