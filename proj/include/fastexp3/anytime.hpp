#pragma once

// EXP3 without a known horizon.
//
//   DoublingWrapper      fresh fixed-horizon EXP3 on blocks of length 1, 2, 4, ...
//   FtrlAnytimeEngine    exact eta_t = sqrt(ln K / (K t)); O(K) per round
//   DelayedUpdateEngine  eta frozen over K-round blocks; any fast backend

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "fastexp3/core.hpp"
#include "fastexp3/environments.hpp"
#include "fastexp3/exp3.hpp"

namespace fastexp3 {

class DoublingWrapper {
 public:
  DoublingWrapper(std::size_t arms, Backend backend, std::uint64_t seed,
                  Exp3Options options = {});

  Selection select_arm();
  // Starts the next block, with fresh uniform weights, once the current one
  // is exhausted.
  UpdateInfo update(ArmIndex arm, Loss loss);
  RoundRecord step(Environment& env);

  // Global 1-based index of the next round.
  std::size_t round() const { return round_; }
  // Block b covers rounds [2^b, 2^(b+1) - 1].
  std::size_t block_index() const { return block_; }
  std::size_t block_length() const { return std::size_t{1} << block_; }
  const Exp3Engine& inner() const { return *inner_; }
  std::size_t arms() const { return arms_; }
  // Alias rebuilds summed over every block so far.
  std::uint64_t rebuilds() const;

 private:
  void start_block(std::size_t block);

  std::size_t arms_;
  Backend backend_;
  std::uint64_t seed_;
  Exp3Options options_;
  std::size_t block_ = 0;
  std::size_t round_ = 1;
  std::unique_ptr<Exp3Engine> inner_;
  std::uint64_t retired_rebuilds_ = 0;
};

class FtrlAnytimeEngine {
 public:
  FtrlAnytimeEngine(std::size_t arms, std::uint64_t seed);

  // Distribution for the next round: proportional to
  // exp(-eta_{t-1} * cumulative_estimate), uniform in round 1.
  std::vector<double> probabilities() const;
  Selection select_arm();
  void update(ArmIndex arm, Loss loss, double probability);
  RoundRecord step(Environment& env);

  std::size_t round() const { return round_; }
  std::size_t arms() const { return cum_est_loss_.size(); }
  std::span<const double> cumulative_estimates() const {
    return cum_est_loss_;
  }
  // Adds an estimated loss directly and closes the round.
  void force_estimate(ArmIndex arm, double estimated_loss);

 private:
  std::vector<double> cum_est_loss_;
  UniformSource rng_;
  std::size_t round_ = 1;
  mutable std::vector<double> scratch_;
};

class DelayedUpdateEngine {
 public:
  DelayedUpdateEngine(std::size_t arms, Backend backend, std::uint64_t seed,
                      Exp3Options options = {});

  Selection select_arm();
  UpdateInfo update(ArmIndex arm, Loss loss);
  RoundRecord step(Environment& env);

  std::size_t round() const { return round_; }
  std::size_t arms() const { return cum_est_loss_.size(); }
  // Step size in force for the next round: anytime_eta(K, block_end(t, K)).
  LearningRate eta() const { return weights_.eta(); }
  std::span<const double> cumulative_estimates() const {
    return cum_est_loss_;
  }
  const ExpWeights& weights() const { return weights_; }

 private:
  std::vector<double> cum_est_loss_;
  ExpWeights weights_;
  UniformSource rng_;
  std::size_t round_ = 1;
  std::vector<double> scratch_;
};

}  // namespace fastexp3
