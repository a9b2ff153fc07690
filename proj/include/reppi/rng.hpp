#pragma once

#include <cstdint>
#include <vector>

#include "reppi/common.hpp"

namespace reppi {

// SplitMix64 finalizer; also used to derive independent seed streams.
std::uint64_t mix64(std::uint64_t z);

// Seed for trial t of a study: mix64(base ^ ((t+1) * golden gamma)).
std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t stream);

// Counter-based 64-bit generator (SplitMix64). Chosen over std::mt19937_64
// so that uniform/normal/bounded draws are bit-identical on every platform:
// the standard distributions are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64();

  // Uniform on [0, 1), 53-bit resolution.
  double uniform();

  // Standard normal via Box-Muller; second value cached.
  double normal();

  // Unbiased integer in [0, n), n >= 1.
  std::uint64_t below(std::uint64_t n);

  VectorXd normal_vector(int d);

  // In-place Fisher-Yates shuffle.
  void shuffle(std::vector<int>& items);

 private:
  std::uint64_t state_;
  bool has_cached_ = false;
  double cached_ = 0.0;
};

// Normalized standard Gaussian vector: uniform on the unit sphere.
VectorXd random_unit_vector(Rng& rng, int d);

}  // namespace reppi
