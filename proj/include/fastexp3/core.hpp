#pragma once

// Shared domain types, learning-rate schedules and the seeded uniform stream.

#include <cstddef>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace fastexp3 {

// Raised when an internal invariant is found broken at run time (corrupted
// weight state, scale mismatch between a snapshot and live weights, ...).
class InvalidState : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Index of an arm (or of an expert, for EXP4) in [0, K).
struct ArmIndex {
  std::size_t value = 0;

  constexpr ArmIndex() = default;
  constexpr explicit ArmIndex(std::size_t v) : value(v) {}

  friend constexpr bool operator==(ArmIndex, ArmIndex) = default;
  friend constexpr auto operator<=>(ArmIndex, ArmIndex) = default;
};

// A loss in [0, 1]. Construction outside the range throws
// std::invalid_argument; the regret guarantees need the range, so values are
// never clamped.
class Loss {
 public:
  constexpr Loss() = default;
  explicit Loss(double value);

  constexpr double value() const { return value_; }

 private:
  double value_ = 0.0;
};

// Strictly positive, finite step size.
class LearningRate {
 public:
  explicit LearningRate(double value);

  constexpr double value() const { return value_; }

 private:
  double value_;
};

// Seeded stream of doubles in [0, 1).
//
// The generator is pinned to std::mt19937_64; a draw takes the top 53 bits of
// one 64-bit output, so u = k * 2^-53 with k < 2^53 and u < 1 strictly. Equal
// seeds give equal streams on every conforming standard library.
class UniformSource {
 public:
  explicit UniformSource(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  double next() {
    ++draws_;
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  std::uint64_t seed() const { return seed_; }
  // Number of uniforms consumed so far.
  std::uint64_t draws() const { return draws_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::uint64_t draws_ = 0;
};

// SplitMix64 finalizer; used to derive independent seeds from a base seed.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  return mix_seed(base ^ mix_seed(stream + 0x632be59bd9b4e019ULL));
}

struct HorizonParams {
  std::size_t arms;
  std::size_t horizon;  // 0 when unknown (anytime algorithms)
  LearningRate eta;
};

// sqrt(2 ln K / (K T)), the fixed-horizon EXP3 step size.
LearningRate fixed_eta(std::size_t arms, std::size_t horizon);

// sqrt(ln K / (K t)), the anytime schedule.
LearningRate anytime_eta(std::size_t arms, std::size_t round);

// Last round of the K-round block containing `round` (rounds are 1-based).
std::size_t block_end(std::size_t round, std::size_t arms);

// loss / p. Throws std::invalid_argument for p outside (0, 1].
double ipw_estimate(Loss loss, double probability);

// True when T >= 2 K ln K, i.e. fixed_eta * K <= 1.
bool in_acceptance_regime(std::size_t arms, std::size_t horizon);

}  // namespace fastexp3
