#pragma once

// Adversaries for the bandit protocol and pseudo-regret bookkeeping.
//
// Rounds are 1-based. An environment fixes the loss vector of round t before
// the player's arm for that round is known: observe(t, a) and
// full_loss_vector(t) agree no matter which is called first.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fastexp3/core.hpp"

namespace fastexp3 {

class LoadError : public std::runtime_error {
 public:
  LoadError(std::size_t row, const std::string& what)
      : std::runtime_error("row " + std::to_string(row) + ": " + what),
        row_(row) {}

  // 1-based row of the offending line; 0 when the file itself failed.
  std::size_t row() const { return row_; }

 private:
  std::size_t row_;
};

class Environment {
 public:
  virtual ~Environment() = default;

  virtual std::size_t arms() const = 0;

  // The loss the player sees for pulling `arm` in round t.
  Loss observe(std::size_t round, ArmIndex arm);
  // Every arm's loss in round t. For the harness's regret accounting only.
  std::vector<double> full_loss_vector(std::size_t round);

  // Total number of observe/full_loss_vector calls made so far.
  std::uint64_t calls() const { return calls_; }

 protected:
  virtual Loss do_observe(std::size_t round, ArmIndex arm) = 0;
  virtual std::vector<double> do_full_loss_vector(std::size_t round) = 0;

 private:
  std::uint64_t calls_ = 0;
};

// Independent Bernoulli(means[i]) losses. Each cell (t, i) is a pure
// function of (seed, t, i), so the table is random-access and reproducible.
class StochasticEnvironment : public Environment {
 public:
  StochasticEnvironment(std::vector<double> means, std::uint64_t seed);

  std::size_t arms() const override { return means_.size(); }
  std::span<const double> means() const { return means_; }

 protected:
  Loss do_observe(std::size_t round, ArmIndex arm) override;
  std::vector<double> do_full_loss_vector(std::size_t round) override;

 private:
  double cell(std::size_t round, std::size_t arm) const;

  std::vector<double> means_;
  std::uint64_t seed_;
};

std::unique_ptr<StochasticEnvironment> stochastic_env(std::vector<double> means,
                                                      std::uint64_t seed);

// Means (best, other, ..., other): arm 0 is best by `gap`.
std::vector<double> gap_means(std::size_t arms, double other_mean, double gap);

enum class AdaptiveStrategy {
  // Loss 1 on the arm pulled most often so far (lowest index on ties), 0 on
  // every other arm; all zeros in round 1.
  kTargetMostPulled,
};

class AdaptiveEnvironment : public Environment {
 public:
  AdaptiveEnvironment(std::size_t arms, AdaptiveStrategy strategy);

  std::size_t arms() const override { return pulls_.size(); }
  std::span<const std::uint64_t> pulls() const { return pulls_; }

 protected:
  Loss do_observe(std::size_t round, ArmIndex arm) override;
  std::vector<double> do_full_loss_vector(std::size_t round) override;

 private:
  // Fixes the loss vector of `round` from the history before it.
  void enter_round(std::size_t round);

  AdaptiveStrategy strategy_;
  std::vector<std::uint64_t> pulls_;
  std::size_t round_ = 0;
  bool observed_ = false;
  std::vector<double> losses_;
};

std::unique_ptr<AdaptiveEnvironment> adaptive_env(std::size_t arms,
                                                  AdaptiveStrategy strategy);

// Loss table read from a header-free CSV: T rows, K comma-separated losses.
class ReplayEnvironment : public Environment {
 public:
  ReplayEnvironment(std::size_t arms, std::vector<double> table);

  std::size_t arms() const override { return arms_; }
  std::size_t rounds() const { return table_.size() / arms_; }

 protected:
  Loss do_observe(std::size_t round, ArmIndex arm) override;
  std::vector<double> do_full_loss_vector(std::size_t round) override;

 private:
  std::size_t row_offset(std::size_t round) const;

  std::size_t arms_;
  std::vector<double> table_;
};

// Throws LoadError on parse errors, out-of-range values or ragged rows.
std::unique_ptr<ReplayEnvironment> replay_env(const std::filesystem::path& path);
std::unique_ptr<ReplayEnvironment> parse_loss_table(std::istream& in);

// Writes rounds 1..T of `env` in the replay format. Values are printed with
// 17 significant digits so a replay reproduces them exactly.
void write_loss_table(Environment& env, std::size_t rounds, std::ostream& out);

class RegretLedger {
 public:
  explicit RegretLedger(std::size_t arms) : cum_arm_loss_(arms, 0.0) {}

  void record(std::span<const double> loss_vector, ArmIndex played);

  // Cumulative player loss minus the best fixed arm's cumulative loss.
  double pseudo_regret() const;
  double player_loss() const { return cum_player_loss_; }
  std::span<const double> arm_losses() const { return cum_arm_loss_; }

 private:
  double cum_player_loss_ = 0.0;
  std::vector<double> cum_arm_loss_;
};

}  // namespace fastexp3
