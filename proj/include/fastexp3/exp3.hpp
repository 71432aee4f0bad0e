#pragma once

// Fixed-horizon EXP3 over interchangeable sampling backends.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fastexp3/core.hpp"
#include "fastexp3/environments.hpp"
#include "fastexp3/samplers.hpp"

namespace fastexp3 {

enum class Backend {
  kNaive,
  kSegTree,
  kAliasSnapshot,
  kAliasDoubleBuffered,
};

inline constexpr Backend kAllBackends[] = {
    Backend::kNaive, Backend::kSegTree, Backend::kAliasSnapshot,
    Backend::kAliasDoubleBuffered};

std::string_view backend_name(Backend backend);
// Accepts naive, segtree, alias, alias_snapshot, alias_double_buffered, double.
Backend parse_backend(std::string_view name);
bool is_alias(Backend backend);

// Exponential weights kept as log-domain master values plus a raw mirror
// raw_i = exp(log_i - scale) and a running raw total.
class WeightState {
 public:
  // Renormalization kicks in once the raw total drops below this.
  static constexpr double kUnderflowGuard = 1e-100;
  // ... or below this fraction of its value at the last renormalization.
  // The running total is maintained by subtraction, so its absolute error is
  // about 1e-16 of that reference value; this keeps the relative error of
  // total() under ~1e-12.
  static constexpr double kShrinkGuard = 1e-4;

  explicit WeightState(std::size_t n);

  // log_i -= exponent. Returns the new raw weight.
  double decrease(std::size_t i, double exponent);
  // Shifts scale to the largest log weight and recomputes every raw value
  // and the total from scratch. Returns the factor the raw weights were
  // multiplied by.
  double renormalize();
  void assign_log_weights(std::span<const double> log_weights);

  std::size_t size() const { return log_weights_.size(); }
  std::span<const double> log_weights() const { return log_weights_; }
  std::span<const double> raw() const { return raw_; }
  double raw(std::size_t i) const { return raw_[i]; }
  double total() const { return total_; }
  double scale() const { return scale_; }
  // ln(sum_i exp(log_i)); unaffected by renormalization.
  double log_total() const;
  // sum_i raw_i recomputed from scratch.
  double recomputed_total() const;
  bool needs_renormalization() const {
    return total_ < kUnderflowGuard || total_ < kShrinkGuard * reference_total_;
  }

 private:
  std::vector<double> log_weights_;
  std::vector<double> raw_;
  double scale_ = 0.0;
  double total_ = 0.0;
  double reference_total_ = 0.0;
};

struct WeightsOptions {
  // Rounds between scheduled renormalizations (and alias rebuilds); 0 means
  // "equal to the weight count".
  std::size_t rebuild_period = 0;
  // When false the owner schedules rebuilds itself (delayed-update engine).
  bool periodic_rebuild = true;
  std::size_t work_budget = IncrementalBuilder::kDefaultBudget;
};

struct Draw {
  ArmIndex index;
  std::uint64_t attempts = 1;
};

// A WeightState bound to one sampling backend, with the rebuild and
// renormalization schedule. Shared by the EXP3, EXP4 and anytime engines.
class ExpWeights {
 public:
  ExpWeights(std::size_t n, Backend backend, LearningRate eta,
             WeightsOptions options = {});

  Draw sample(UniformSource& rng) const;
  // Exact current probability raw_i / total.
  double probability(std::size_t i) const;
  // log_i -= eta * estimated_loss, mirrored into the backend.
  void apply_loss(std::size_t i, double estimated_loss);
  // Closes a round: advances a pending incremental build, runs the periodic
  // rebuild when due and renormalizes on underflow.
  void end_round();

  // Snapshot the live weights, renormalize so the largest raw weight is 1,
  // and rebuild the alias table (drained at once for the double-buffered
  // backend's current build, then restarted incrementally). Alias backends
  // only.
  void checkpoint();
  // Replaces every log weight and rebuilds the backend from scratch.
  void reset_log_weights(std::span<const double> log_weights);

  void set_eta(LearningRate eta) { eta_ = eta; }
  LearningRate eta() const { return eta_; }
  Backend backend() const { return backend_; }
  std::size_t size() const { return state_.size(); }
  std::size_t rebuild_period() const { return period_; }
  const WeightState& state() const { return state_; }

  // Raw snapshot the active alias table was built from (alias backends).
  std::span<const double> active_snapshot() const;
  const SegTree* tree() const { return tree_ ? &*tree_ : nullptr; }
  bool build_pending() const { return builder_.has_value(); }

  std::uint64_t rebuilds() const { return rebuilds_; }
  std::uint64_t renormalizations() const { return renormalizations_; }
  // Background work units spent in the last end_round(): alias placements,
  // or O(K) copies at a boundary.
  std::size_t last_round_work() const { return last_round_work_; }
  // True when the last end_round() did an O(K) rebuild or renormalization.
  bool last_round_boundary() const { return last_round_boundary_; }

 private:
  void rebuild_mirror();
  std::size_t finish_pending_build();

  Backend backend_;
  LearningRate eta_;
  WeightsOptions options_;
  std::size_t period_;
  WeightState state_;
  std::optional<SegTree> tree_;
  std::optional<SnapshotSampler> active_;
  std::optional<IncrementalBuilder> builder_;
  std::size_t rounds_since_checkpoint_ = 0;
  std::uint64_t rebuilds_ = 0;
  std::uint64_t renormalizations_ = 0;
  std::size_t last_round_work_ = 0;
  bool last_round_boundary_ = false;
};

struct Exp3Options {
  std::size_t rebuild_period = 0;  // 0: K
  std::size_t work_budget = IncrementalBuilder::kDefaultBudget;
};

struct Selection {
  ArmIndex arm;
  double probability = 0.0;
  std::uint64_t attempts = 1;
};

// Raw totals around the weight update, on the same scale (renormalization
// only happens after both are taken).
struct UpdateInfo {
  double estimated_loss = 0.0;
  double total_before = 0.0;
  double total_after = 0.0;
  double shrink() const { return total_after / total_before; }
};

struct RoundRecord {
  std::size_t round = 0;
  ArmIndex arm;
  double loss = 0.0;
  double probability = 0.0;
  std::uint64_t attempts = 1;
  std::int64_t elapsed_ns = 0;
};

class Exp3Engine {
 public:
  // Uniform weights and eta = fixed_eta(K, T).
  Exp3Engine(std::size_t arms, std::size_t horizon, Backend backend,
             std::uint64_t seed, Exp3Options options = {});

  // Throws InvalidState once the horizon is exhausted.
  Selection select_arm();
  // One round's weight update with p taken from the live state.
  UpdateInfo update(ArmIndex arm, Loss loss);
  void rebuild_checkpoint() { weights_.checkpoint(); }

  // 1-based index of the next round to play.
  std::size_t round() const { return round_; }
  std::size_t horizon() const { return horizon_; }
  std::size_t arms() const { return weights_.size(); }
  LearningRate eta() const { return weights_.eta(); }
  const ExpWeights& weights() const { return weights_; }
  UniformSource& rng() { return rng_; }

  // Set when T < 2 K ln K; the engine still runs, but the expected number of
  // rejection attempts is no longer bounded by e^2.
  const std::optional<std::string>& regime_warning() const {
    return warning_;
  }

 private:
  std::size_t horizon_;
  ExpWeights weights_;
  UniformSource rng_;
  std::size_t round_ = 1;
  std::optional<std::string> warning_;
};

// select -> observe -> IPW -> update, for `rounds` rounds. elapsed_ns is
// filled only when `timed` is set.
std::vector<RoundRecord> run_episode(Exp3Engine& engine, Environment& env,
                                     std::size_t rounds, bool timed = false);

}  // namespace fastexp3
