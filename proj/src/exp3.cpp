#include "fastexp3/exp3.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace fastexp3 {

std::string_view backend_name(Backend backend) {
  switch (backend) {
    case Backend::kNaive:
      return "naive";
    case Backend::kSegTree:
      return "segtree";
    case Backend::kAliasSnapshot:
      return "alias_snapshot";
    case Backend::kAliasDoubleBuffered:
      return "alias_double_buffered";
  }
  return "?";
}

Backend parse_backend(std::string_view name) {
  if (name == "naive") return Backend::kNaive;
  if (name == "segtree" || name == "tree") return Backend::kSegTree;
  if (name == "alias" || name == "alias_snapshot") {
    return Backend::kAliasSnapshot;
  }
  if (name == "alias_double_buffered" || name == "double") {
    return Backend::kAliasDoubleBuffered;
  }
  throw std::invalid_argument("unknown backend '" + std::string(name) + "'");
}

bool is_alias(Backend backend) {
  return backend == Backend::kAliasSnapshot ||
         backend == Backend::kAliasDoubleBuffered;
}

// -- WeightState --------------------------------------------------------------

WeightState::WeightState(std::size_t n)
    : log_weights_(n, 0.0), raw_(n, 1.0),
      total_(static_cast<double>(n)),
      reference_total_(total_) {
  if (n < 2) throw std::invalid_argument("need at least two weights");
}

double WeightState::decrease(std::size_t i, double exponent) {
  const double old_raw = raw_[i];
  log_weights_[i] -= exponent;
  const double new_raw = std::exp(log_weights_[i] - scale_);
  raw_[i] = new_raw;
  total_ -= old_raw - new_raw;
  return new_raw;
}

double WeightState::renormalize() {
  const double old_scale = scale_;
  scale_ = *std::max_element(log_weights_.begin(), log_weights_.end());
  total_ = 0.0;
  for (std::size_t i = 0; i < raw_.size(); ++i) {
    raw_[i] = std::exp(log_weights_[i] - scale_);
    total_ += raw_[i];
  }
  reference_total_ = total_;
  return std::exp(old_scale - scale_);
}

void WeightState::assign_log_weights(std::span<const double> log_weights) {
  if (log_weights.size() != log_weights_.size()) {
    throw std::invalid_argument("log weight vector has the wrong length");
  }
  for (double v : log_weights) {
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite weight");
  }
  std::copy(log_weights.begin(), log_weights.end(), log_weights_.begin());
  renormalize();
}

double WeightState::log_total() const { return scale_ + std::log(total_); }

double WeightState::recomputed_total() const {
  return std::accumulate(raw_.begin(), raw_.end(), 0.0);
}

// -- ExpWeights ---------------------------------------------------------------

ExpWeights::ExpWeights(std::size_t n, Backend backend, LearningRate eta,
                       WeightsOptions options)
    : backend_(backend),
      eta_(eta),
      options_(options),
      period_(options.rebuild_period ? options.rebuild_period : n),
      state_(n) {
  if (options_.work_budget == 0) {
    throw std::invalid_argument("work budget must be >= 1");
  }
  rebuild_mirror();
}

void ExpWeights::rebuild_mirror() {
  const auto raw = state_.raw();
  switch (backend_) {
    case Backend::kNaive:
      break;
    case Backend::kSegTree:
      if (tree_) {
        tree_->rebuild(raw);
      } else {
        tree_.emplace(raw);
      }
      break;
    case Backend::kAliasSnapshot:
    case Backend::kAliasDoubleBuffered:
      builder_.reset();
      active_.emplace(std::vector<double>(raw.begin(), raw.end()));
      ++rebuilds_;
      break;
  }
}

Draw ExpWeights::sample(UniformSource& rng) const {
  switch (backend_) {
    case Backend::kNaive:
      return {naive_sample(state_.raw(), state_.total(), rng.next()), 1};
    case Backend::kSegTree:
      return {tree_->sample(rng.next()), 1};
    case Backend::kAliasSnapshot:
    case Backend::kAliasDoubleBuffered: {
      const SnapshotDraw d = active_->sample(state_.raw(), rng);
      return {d.arm, d.attempts};
    }
  }
  throw InvalidState("unknown backend");
}

double ExpWeights::probability(std::size_t i) const {
  return state_.raw(i) / state_.total();
}

void ExpWeights::apply_loss(std::size_t i, double estimated_loss) {
  if (i >= state_.size()) throw std::invalid_argument("index out of range");
  if (estimated_loss == 0.0) return;
  const double w = state_.decrease(i, eta_.value() * estimated_loss);
  if (tree_) tree_->update(ArmIndex(i), w);
}

std::size_t ExpWeights::finish_pending_build() {
  std::size_t work = 0;
  while (builder_) {
    std::optional<AliasTable> table = builder_->step();
    work += builder_->last_step_work();
    if (table) {
      active_.emplace(std::move(*table), builder_->release_snapshot());
      builder_.reset();
      ++rebuilds_;
    }
  }
  return work;
}

void ExpWeights::checkpoint() {
  if (!is_alias(backend_)) {
    throw InvalidState("checkpoint() needs an alias backend");
  }
  const std::size_t n = state_.size();
  if (backend_ == Backend::kAliasSnapshot) {
    state_.renormalize();
    active_.emplace(std::vector<double>(state_.raw().begin(),
                                        state_.raw().end()));
    ++rebuilds_;
    last_round_work_ += n;
  } else {
    last_round_work_ += finish_pending_build();
    const double factor = state_.renormalize();
    active_->rescale(factor);
    builder_.emplace(
        std::vector<double>(state_.raw().begin(), state_.raw().end()),
        options_.work_budget);
    last_round_work_ += n;
  }
  ++renormalizations_;
  rounds_since_checkpoint_ = 0;
  last_round_boundary_ = true;
}

void ExpWeights::end_round() {
  last_round_work_ = 0;
  last_round_boundary_ = false;
  if (builder_) {
    std::optional<AliasTable> table = builder_->step();
    last_round_work_ += builder_->last_step_work();
    if (table) {
      active_.emplace(std::move(*table), builder_->release_snapshot());
      builder_.reset();
      ++rebuilds_;
    }
  }
  ++rounds_since_checkpoint_;
  // Every backend renormalizes at the same rounds, so their states stay
  // bit-identical under the same (arm, loss) sequence. The IPW feedback
  // amplifies any last-bit difference in p roughly by exp(|log weight|).
  const bool periodic =
      options_.periodic_rebuild && rounds_since_checkpoint_ >= period_;
  if (!periodic && !state_.needs_renormalization()) return;
  if (is_alias(backend_)) {
    checkpoint();
  } else {
    state_.renormalize();
    ++renormalizations_;
    rebuild_mirror();
    rounds_since_checkpoint_ = 0;
    last_round_work_ += state_.size();
    last_round_boundary_ = true;
  }
}

void ExpWeights::reset_log_weights(std::span<const double> log_weights) {
  state_.assign_log_weights(log_weights);
  rebuild_mirror();
  rounds_since_checkpoint_ = 0;
  last_round_work_ = state_.size();
  last_round_boundary_ = true;
}

std::span<const double> ExpWeights::active_snapshot() const {
  if (!active_) return {};
  return active_->snapshot();
}

// -- Exp3Engine ---------------------------------------------------------------

Exp3Engine::Exp3Engine(std::size_t arms, std::size_t horizon, Backend backend,
                       std::uint64_t seed, Exp3Options options)
    : horizon_(horizon),
      weights_(arms, backend, fixed_eta(arms, horizon),
               WeightsOptions{options.rebuild_period, true,
                              options.work_budget}),
      rng_(seed) {
  if (!in_acceptance_regime(arms, horizon)) {
    warning_ = "T = " + std::to_string(horizon) + " is below 2 K ln K for K = " +
               std::to_string(arms) +
               "; the e^2 bound on rejection attempts does not apply";
  }
}

Selection Exp3Engine::select_arm() {
  if (round_ > horizon_) {
    throw InvalidState("horizon of " + std::to_string(horizon_) +
                       " rounds is exhausted");
  }
  const Draw d = weights_.sample(rng_);
  const double p = weights_.probability(d.index.value);
  if (!(p > 0.0)) throw InvalidState("sampled an arm with zero probability");
  return {d.index, p, d.attempts};
}

UpdateInfo Exp3Engine::update(ArmIndex arm, Loss loss) {
  if (arm.value >= arms()) throw std::invalid_argument("arm out of range");
  UpdateInfo info;
  info.total_before = weights_.state().total();
  info.estimated_loss = ipw_estimate(loss, weights_.probability(arm.value));
  weights_.apply_loss(arm.value, info.estimated_loss);
  info.total_after = weights_.state().total();
  weights_.end_round();
  ++round_;
  return info;
}

std::vector<RoundRecord> run_episode(Exp3Engine& engine, Environment& env,
                                     std::size_t rounds, bool timed) {
  if (env.arms() != engine.arms()) {
    throw std::invalid_argument("environment and engine disagree on K");
  }
  using Clock = std::chrono::steady_clock;
  std::vector<RoundRecord> records;
  records.reserve(rounds);
  for (std::size_t i = 0; i < rounds; ++i) {
    const auto start = timed ? Clock::now() : Clock::time_point{};
    RoundRecord rec;
    rec.round = engine.round();
    const Selection s = engine.select_arm();
    const Loss loss = env.observe(rec.round, s.arm);
    engine.update(s.arm, loss);
    rec.arm = s.arm;
    rec.loss = loss.value();
    rec.probability = s.probability;
    rec.attempts = s.attempts;
    if (timed) {
      rec.elapsed_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(
                           Clock::now() - start)
                           .count();
    }
    records.push_back(rec);
  }
  return records;
}

}  // namespace fastexp3
