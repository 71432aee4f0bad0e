#pragma once

// Weighted-sampling backends over a vector of nonnegative weights.
//
//   naive_sample        linear inverse-CDF scan, O(K)
//   SegTree             implicit binary tree of subtree sums, O(log K)
//   AliasTable          static two-entry bins, O(1) sampling, O(K) build
//   SnapshotSampler     alias table over a stale snapshot plus rejection
//                       against the live weights
//   IncrementalBuilder  alias construction split into bounded-work steps

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "fastexp3/core.hpp"

namespace fastexp3 {

// Throws std::invalid_argument unless weights has >= 2 finite nonnegative
// entries with a positive sum.
void validate_weights(std::span<const double> weights);

// Inverse-CDF scan: the arm whose half-open prefix interval contains
// r = u * total. Falls back to the last positive weight if rounding pushes r
// past the final prefix sum.
ArmIndex naive_sample(std::span<const double> weights, double total, double u);

class SegTree {
 public:
  // Leaves live at nodes[M + j]; nodes[1] is the root; nodes[0] is unused.
  explicit SegTree(std::span<const double> weights);

  ArmIndex sample(double u) const;
  void update(ArmIndex arm, double weight);
  // Rewrites every leaf and internal node, O(K).
  void rebuild(std::span<const double> weights);

  double total() const { return nodes_[1]; }
  double leaf(std::size_t arm) const { return nodes_[capacity_ + arm]; }
  std::size_t arms() const { return arms_; }
  std::size_t capacity() const { return capacity_; }
  std::span<const double> nodes() const { return nodes_; }

  // Largest |nodes[i] - (nodes[2i] + nodes[2i+1])| / max(nodes[i], tiny)
  // over internal nodes.
  double max_sum_defect() const;

 private:
  std::size_t arms_;
  std::size_t capacity_;
  std::vector<double> nodes_;
};

struct AliasBin {
  static constexpr std::uint32_t kNone = UINT32_MAX;

  std::uint32_t primary = 0;
  std::uint32_t alias = kNone;
  double primary_mass = 0.0;
  double alias_mass = 0.0;
  // Construction-time weights of primary and alias, kept in the bin so a
  // rejection test needs no second lookup.
  double primary_weight = 0.0;
  double alias_weight = 0.0;

  friend bool operator==(const AliasBin&, const AliasBin&) = default;
};

class AliasTable {
 public:
  AliasTable() = default;
  AliasTable(double mean, std::vector<AliasBin> bins)
      : mean_(mean), bins_(std::move(bins)) {}

  struct Proposal {
    ArmIndex arm;
    double weight;  // the arm's weight when the table was built
  };

  // bin = floor(u1 * K); primary if u2 * mean < primary_mass, else alias.
  ArmIndex sample(double u1, double u2) const { return propose(u1, u2).arm; }
  Proposal propose(double u1, double u2) const;

  std::size_t size() const { return bins_.size(); }
  double mean() const { return mean_; }
  std::span<const AliasBin> bins() const { return bins_; }

  // Total mass held by each arm across all bins.
  std::vector<double> reconstruct_masses() const;

  // Multiplies every mass, weight and the mean by factor > 0.
  void rescale(double factor);

  friend bool operator==(const AliasTable&, const AliasTable&) = default;

 private:
  double mean_ = 0.0;
  std::vector<AliasBin> bins_;
};

// The packing loop: pair one Small with one Large element per bin, push the
// Large remainder back, and when either group runs dry give each leftover
// element a bin of its own at full mean mass. Exactly K placement steps.
class AliasConstruction {
 public:
  explicit AliasConstruction(std::vector<double> weights);

  // Performs at most `budget` placements; returns how many were made.
  std::size_t advance(std::size_t budget);
  bool done() const { return next_bin_ == bins_.size(); }
  std::size_t placed() const { return next_bin_; }
  // Moves the finished table out. Requires done().
  AliasTable take();
  std::vector<double> take_weights() { return std::move(weights_); }

  std::span<const double> weights() const { return weights_; }

 private:
  std::vector<double> weights_;
  std::vector<double> remaining_;
  std::vector<std::uint32_t> small_;
  std::vector<std::uint32_t> large_;
  std::vector<AliasBin> bins_;
  double mean_ = 0.0;
  std::size_t next_bin_ = 0;
};

AliasTable alias_build(std::span<const double> weights);

struct SnapshotDraw {
  ArmIndex arm;
  std::uint64_t attempts;
};

class SnapshotSampler {
 public:
  static constexpr std::uint64_t kMaxAttempts = 1'000'000;
  static constexpr double kRatioSlack = 1e-9;

  // Builds the alias table from `snapshot`.
  explicit SnapshotSampler(std::vector<double> snapshot);
  // Adopts a table already built over `snapshot`.
  SnapshotSampler(AliasTable table, std::vector<double> snapshot);

  // Draws until acceptance, three uniforms per attempt.
  SnapshotDraw sample(std::span<const double> live, UniformSource& rng) const;

  // One proposal + accept test with explicit uniforms; nullopt on rejection.
  std::optional<ArmIndex> try_once(std::span<const double> live, double u1,
                                   double u2, double u3) const;

  void rescale(double factor);

  const AliasTable& table() const { return table_; }
  std::span<const double> snapshot() const { return snapshot_; }
  double snapshot_total() const { return snapshot_total_; }

 private:
  AliasTable table_;
  std::vector<double> snapshot_;
  double snapshot_total_ = 0.0;
};

// Alias construction driven a few placements at a time, so a replacement
// table can be prepared while the current one keeps serving samples.
class IncrementalBuilder {
 public:
  static constexpr std::size_t kDefaultBudget = 4;

  explicit IncrementalBuilder(std::vector<double> snapshot,
                              std::size_t work_budget = kDefaultBudget);

  // Returns the finished table on the call that completes construction and
  // nullopt before that. Throws InvalidState once finished.
  std::optional<AliasTable> step();

  bool finished() const { return finished_; }
  std::size_t steps() const { return steps_; }
  std::size_t last_step_work() const { return last_step_work_; }
  std::size_t work_budget() const { return budget_; }
  std::span<const double> snapshot() const { return construction_.weights(); }

  // Moves the snapshot weights out; only valid once finished.
  std::vector<double> release_snapshot();

 private:
  AliasConstruction construction_;
  std::size_t budget_;
  std::size_t steps_ = 0;
  std::size_t last_step_work_ = 0;
  bool finished_ = false;
};

}  // namespace fastexp3
