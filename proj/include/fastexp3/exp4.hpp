#pragma once

// EXP4 with expert advice through a grouping oracle.
//
// The oracle answers, for round t and expert j, the recommended arm e_t(j)
// and the list E_t(j) of experts recommending the same arm. An update touches
// only the experts in E_t(j_t), so per-round cost is |E_t(j_t)| times the
// backend's update cost.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <memory>
#include <span>
#include <vector>

#include "fastexp3/core.hpp"
#include "fastexp3/environments.hpp"
#include "fastexp3/exp3.hpp"

namespace fastexp3 {

class ExpertOracle {
 public:
  virtual ~ExpertOracle() = default;

  virtual std::size_t experts() const = 0;
  virtual std::size_t arms() const = 0;
  virtual ArmIndex recommendation(std::size_t round, std::size_t expert) = 0;
  // E_t(j); always contains `expert`.
  virtual std::span<const std::size_t> group(std::size_t round,
                                             std::size_t expert) = 0;
};

// N = K experts, expert j always recommends arm j.
class IdentityOracle : public ExpertOracle {
 public:
  explicit IdentityOracle(std::size_t arms);

  std::size_t experts() const override { return ids_.size(); }
  std::size_t arms() const override { return ids_.size(); }
  ArmIndex recommendation(std::size_t, std::size_t expert) override;
  std::span<const std::size_t> group(std::size_t, std::size_t expert) override;

 private:
  std::vector<std::size_t> ids_;
};

// Experts grouped by a fixed expert -> arm map per block. Round t uses block
// (t - 1) mod B, so a single block is a static partition.
class PartitionOracle : public ExpertOracle {
 public:
  // assignments[b][j] is the arm expert j recommends under block b.
  PartitionOracle(std::size_t arms,
                  std::vector<std::vector<std::size_t>> assignments);

  std::size_t experts() const override { return experts_; }
  std::size_t arms() const override { return arms_; }
  std::size_t blocks() const { return blocks_.size(); }
  ArmIndex recommendation(std::size_t round, std::size_t expert) override;
  std::span<const std::size_t> group(std::size_t round,
                                     std::size_t expert) override;

 private:
  struct Block {
    std::vector<std::size_t> arm_of;
    // members[arm] lists the experts recommending it.
    std::vector<std::vector<std::size_t>> members;
  };
  const Block& block_for(std::size_t round) const;

  std::size_t arms_;
  std::size_t experts_;
  std::vector<Block> blocks_;
};

// Partition file: lines "expert_id arm_id"; blank lines separate blocks;
// '#' starts a comment. Every block must list each expert 0..N-1 once.
// Throws LoadError with the offending line number.
std::unique_ptr<PartitionOracle> parse_partition(std::istream& in,
                                                 std::size_t arms);
std::unique_ptr<PartitionOracle> load_partition(
    const std::filesystem::path& path, std::size_t arms);

struct ExpertSelection {
  std::size_t expert = 0;
  ArmIndex arm;
  // Sum of the current expert probabilities over E_t(expert).
  double group_probability = 0.0;
  std::vector<std::size_t> group;
  std::uint64_t attempts = 1;
};

class Exp4Engine {
 public:
  // eta = sqrt(2 ln N / (N T)).
  Exp4Engine(std::size_t experts, std::size_t horizon, Backend backend,
             std::uint64_t seed, Exp3Options options = {});

  ExpertSelection select(ExpertOracle& oracle);
  // Multiplies the weight of every expert in `group` by
  // exp(-eta * loss / group_probability) and closes the round.
  void update(std::size_t expert, std::span<const std::size_t> group,
              Loss loss, double group_probability);
  RoundRecord step(ExpertOracle& oracle, Environment& env);

  std::size_t round() const { return round_; }
  std::size_t experts() const { return weights_.size(); }
  LearningRate eta() const { return weights_.eta(); }
  const ExpWeights& weights() const { return weights_; }
  // Expert weights visited by the last update(); always |E_t(j_t)|.
  std::size_t last_touched() const { return last_touched_; }

 private:
  std::size_t horizon_;
  ExpWeights weights_;
  UniformSource rng_;
  std::size_t round_ = 1;
  std::size_t last_touched_ = 0;
};

}  // namespace fastexp3
