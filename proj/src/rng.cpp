#include "reppi/rng.hpp"

#include <cmath>
#include <numbers>

namespace reppi {

namespace {
constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t stream) {
  return mix64(base_seed ^ ((stream + 1) * kGoldenGamma));
}

std::uint64_t Rng::next_u64() {
  state_ += kGoldenGamma;
  return mix64(state_);
}

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_;
  }
  // u1 in (0, 1] so log is finite.
  double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  double u2 = uniform();
  double radius = std::sqrt(-2.0 * std::log(u1));
  double angle = 2.0 * std::numbers::pi * u2;
  cached_ = radius * std::sin(angle);
  has_cached_ = true;
  return radius * std::cos(angle);
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw NumericalError("Rng::below: n must be positive");
  std::uint64_t threshold = (~n + 1) % n;  // (2^64 - n) % n
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x < threshold);
  return x % n;
}

VectorXd Rng::normal_vector(int d) {
  VectorXd v(d);
  for (int i = 0; i < d; ++i) v[i] = normal();
  return v;
}

void Rng::shuffle(std::vector<int>& items) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(below(i));
    std::swap(items[i - 1], items[j]);
  }
}

VectorXd random_unit_vector(Rng& rng, int d) {
  VectorXd v = rng.normal_vector(d);
  double norm = v.norm();
  while (norm == 0.0) {  // astronomically unlikely
    v = rng.normal_vector(d);
    norm = v.norm();
  }
  return v / norm;
}

}  // namespace reppi
