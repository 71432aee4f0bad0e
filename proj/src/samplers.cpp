#include "fastexp3/samplers.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace fastexp3 {

void validate_weights(std::span<const double> weights) {
  if (weights.size() < 2) {
    throw std::invalid_argument("need at least two weights");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double w = weights[i];
    if (!std::isfinite(w) || w < 0.0) {
      throw std::invalid_argument("weight " + std::to_string(i) +
                                  " is negative or not finite");
    }
    total += w;
  }
  if (!(total > 0.0)) throw std::invalid_argument("all weights are zero");
}

ArmIndex naive_sample(std::span<const double> weights, double total,
                      double u) {
  const double r = u * total;
  double cumulative = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    cumulative += weights[i];
    if (r < cumulative) return ArmIndex(i);
    if (weights[i] > 0.0) last_positive = i;
  }
  return ArmIndex(last_positive);
}

// -- SegTree ------------------------------------------------------------------

SegTree::SegTree(std::span<const double> weights) : arms_(weights.size()) {
  validate_weights(weights);
  capacity_ = std::bit_ceil(arms_);
  nodes_.assign(2 * capacity_, 0.0);
  rebuild(weights);
}

void SegTree::rebuild(std::span<const double> weights) {
  if (weights.size() != arms_) {
    throw std::invalid_argument("SegTree::rebuild: arm count changed");
  }
  std::copy(weights.begin(), weights.end(), nodes_.begin() + capacity_);
  std::fill(nodes_.begin() + capacity_ + arms_, nodes_.end(), 0.0);
  for (std::size_t i = capacity_ - 1; i >= 1; --i) {
    nodes_[i] = nodes_[2 * i] + nodes_[2 * i + 1];
  }
}

ArmIndex SegTree::sample(double u) const {
  const double root = nodes_[1];
  if (!(root > 0.0)) throw InvalidState("SegTree::sample: total weight is 0");
  double r = u * root;
  std::size_t idx = 1;
  while (idx < capacity_) {
    const double left = nodes_[2 * idx];
    // A zero right subtree is never entered, even if rounding in the
    // subtraction leaves r >= left there.
    if (r < left || nodes_[2 * idx + 1] <= 0.0) {
      idx = 2 * idx;
    } else {
      r -= left;
      idx = 2 * idx + 1;
    }
  }
  return ArmIndex(idx - capacity_);
}

void SegTree::update(ArmIndex arm, double weight) {
  if (arm.value >= arms_) throw std::invalid_argument("SegTree: bad arm");
  if (!std::isfinite(weight) || weight < 0.0) {
    throw std::invalid_argument("SegTree::update: bad weight");
  }
  std::size_t idx = capacity_ + arm.value;
  nodes_[idx] = weight;
  while (idx > 1) {
    idx /= 2;
    nodes_[idx] = nodes_[2 * idx] + nodes_[2 * idx + 1];
  }
}

double SegTree::max_sum_defect() const {
  double worst = 0.0;
  for (std::size_t i = 1; i < capacity_; ++i) {
    const double sum = nodes_[2 * i] + nodes_[2 * i + 1];
    const double scale = std::max(std::abs(nodes_[i]),
                                  std::numeric_limits<double>::min());
    worst = std::max(worst, std::abs(nodes_[i] - sum) / scale);
  }
  return worst;
}

// -- AliasTable ---------------------------------------------------------------

AliasTable::Proposal AliasTable::propose(double u1, double u2) const {
  const std::size_t k = bins_.size();
  const std::size_t bin =
      std::min(static_cast<std::size_t>(u1 * static_cast<double>(k)), k - 1);
  const AliasBin& b = bins_[bin];
  if (u2 * mean_ < b.primary_mass || b.alias == AliasBin::kNone) {
    return {ArmIndex(b.primary), b.primary_weight};
  }
  return {ArmIndex(b.alias), b.alias_weight};
}

std::vector<double> AliasTable::reconstruct_masses() const {
  std::vector<double> mass(bins_.size(), 0.0);
  for (const AliasBin& b : bins_) {
    mass[b.primary] += b.primary_mass;
    if (b.alias != AliasBin::kNone) mass[b.alias] += b.alias_mass;
  }
  return mass;
}

void AliasTable::rescale(double factor) {
  mean_ *= factor;
  for (AliasBin& b : bins_) {
    b.primary_mass *= factor;
    b.alias_mass *= factor;
    b.primary_weight *= factor;
    b.alias_weight *= factor;
  }
}

// -- AliasConstruction --------------------------------------------------------

AliasConstruction::AliasConstruction(std::vector<double> weights)
    : weights_(std::move(weights)) {
  validate_weights(weights_);
  const std::size_t k = weights_.size();
  remaining_ = weights_;
  mean_ = std::accumulate(weights_.begin(), weights_.end(), 0.0) /
          static_cast<double>(k);
  small_.reserve(k);
  large_.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    if (weights_[i] < mean_) {
      small_.push_back(static_cast<std::uint32_t>(i));
    } else {
      large_.push_back(static_cast<std::uint32_t>(i));
    }
  }
  bins_.resize(k);
}

std::size_t AliasConstruction::advance(std::size_t budget) {
  std::size_t work = 0;
  while (work < budget && !done()) {
    // Every arm leaves the stacks as a primary exactly once, so bin i is the
    // one whose primary is arm i.
    if (!small_.empty() && !large_.empty()) {
      const std::uint32_t s = small_.back();
      small_.pop_back();
      const std::uint32_t l = large_.back();
      large_.pop_back();
      const double fill = mean_ - remaining_[s];
      bins_[s] = AliasBin{.primary = s,
                          .alias = l,
                          .primary_mass = remaining_[s],
                          .alias_mass = fill,
                          .primary_weight = weights_[s],
                          .alias_weight = weights_[l]};
      remaining_[l] -= fill;
      if (remaining_[l] < mean_) {
        small_.push_back(l);
      } else {
        large_.push_back(l);
      }
    } else {
      // Only one group left; in exact arithmetic every leftover equals the
      // mean, so each takes a bin of its own.
      auto& group = large_.empty() ? small_ : large_;
      const std::uint32_t e = group.back();
      group.pop_back();
      bins_[e] = AliasBin{.primary = e,
                          .primary_mass = mean_,
                          .primary_weight = weights_[e]};
    }
    ++next_bin_;
    ++work;
  }
  return work;
}

AliasTable AliasConstruction::take() {
  if (!done()) throw InvalidState("alias construction not finished");
  return AliasTable(mean_, std::move(bins_));
}

AliasTable alias_build(std::span<const double> weights) {
  AliasConstruction construction({weights.begin(), weights.end()});
  construction.advance(weights.size());
  return construction.take();
}

// -- SnapshotSampler ----------------------------------------------------------

SnapshotSampler::SnapshotSampler(std::vector<double> snapshot)
    : table_(alias_build(snapshot)), snapshot_(std::move(snapshot)) {
  snapshot_total_ = std::accumulate(snapshot_.begin(), snapshot_.end(), 0.0);
}

SnapshotSampler::SnapshotSampler(AliasTable table, std::vector<double> snapshot)
    : table_(std::move(table)), snapshot_(std::move(snapshot)) {
  if (table_.size() != snapshot_.size()) {
    throw std::invalid_argument("alias table and snapshot sizes differ");
  }
  snapshot_total_ = std::accumulate(snapshot_.begin(), snapshot_.end(), 0.0);
}

std::optional<ArmIndex> SnapshotSampler::try_once(std::span<const double> live,
                                                  double u1, double u2,
                                                  double u3) const {
  const auto [k, snap] = table_.propose(u1, u2);
  const double current = live[k.value];
  if (!(snap > 0.0)) {
    if (current > 0.0) {
      throw InvalidState("live weight is positive where the snapshot is 0");
    }
    return std::nullopt;
  }
  const double ratio = current / snap;
  if (ratio > 1.0 + kRatioSlack) {
    throw InvalidState("acceptance ratio " + std::to_string(ratio) +
                       " exceeds 1: live weights and snapshot disagree in "
                       "scale");
  }
  if (u3 < ratio) return k;
  return std::nullopt;
}

SnapshotDraw SnapshotSampler::sample(std::span<const double> live,
                                     UniformSource& rng) const {
  for (std::uint64_t attempt = 1; attempt <= kMaxAttempts; ++attempt) {
    const double u1 = rng.next();
    const double u2 = rng.next();
    const double u3 = rng.next();
    if (auto arm = try_once(live, u1, u2, u3)) return {*arm, attempt};
  }
  throw InvalidState("rejection sampling exceeded the attempt cap");
}

void SnapshotSampler::rescale(double factor) {
  for (double& w : snapshot_) w *= factor;
  snapshot_total_ *= factor;
  table_.rescale(factor);
}

// -- IncrementalBuilder -------------------------------------------------------

IncrementalBuilder::IncrementalBuilder(std::vector<double> snapshot,
                                       std::size_t work_budget)
    : construction_(std::move(snapshot)), budget_(work_budget) {
  if (budget_ == 0) throw std::invalid_argument("work budget must be >= 1");
}

std::optional<AliasTable> IncrementalBuilder::step() {
  if (finished_) throw InvalidState("builder already finished");
  last_step_work_ = construction_.advance(budget_);
  ++steps_;
  if (!construction_.done()) return std::nullopt;
  finished_ = true;
  return construction_.take();
}

std::vector<double> IncrementalBuilder::release_snapshot() {
  if (!finished_) throw InvalidState("builder not finished");
  return construction_.take_weights();
}

}  // namespace fastexp3
