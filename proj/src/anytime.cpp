#include "fastexp3/anytime.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fastexp3 {

// -- DoublingWrapper ----------------------------------------------------------

DoublingWrapper::DoublingWrapper(std::size_t arms, Backend backend,
                                 std::uint64_t seed, Exp3Options options)
    : arms_(arms), backend_(backend), seed_(seed), options_(options) {
  start_block(0);
}

void DoublingWrapper::start_block(std::size_t block) {
  if (inner_) retired_rebuilds_ += inner_->weights().rebuilds();
  block_ = block;
  inner_ = std::make_unique<Exp3Engine>(arms_, std::size_t{1} << block,
                                        backend_, derive_seed(seed_, block),
                                        options_);
}

std::uint64_t DoublingWrapper::rebuilds() const {
  return retired_rebuilds_ + inner_->weights().rebuilds();
}

Selection DoublingWrapper::select_arm() { return inner_->select_arm(); }

UpdateInfo DoublingWrapper::update(ArmIndex arm, Loss loss) {
  const UpdateInfo info = inner_->update(arm, loss);
  ++round_;
  if (inner_->round() > inner_->horizon()) start_block(block_ + 1);
  return info;
}

RoundRecord DoublingWrapper::step(Environment& env) {
  RoundRecord rec;
  rec.round = round_;
  const Selection s = select_arm();
  const Loss loss = env.observe(round_, s.arm);
  update(s.arm, loss);
  rec.arm = s.arm;
  rec.loss = loss.value();
  rec.probability = s.probability;
  rec.attempts = s.attempts;
  return rec;
}

// -- FtrlAnytimeEngine --------------------------------------------------------

FtrlAnytimeEngine::FtrlAnytimeEngine(std::size_t arms, std::uint64_t seed)
    : cum_est_loss_(arms, 0.0), rng_(seed), scratch_(arms) {
  if (arms < 2) throw std::invalid_argument("need K >= 2");
}

std::vector<double> FtrlAnytimeEngine::probabilities() const {
  const std::size_t k = arms();
  std::vector<double> p(k, 1.0 / static_cast<double>(k));
  if (round_ == 1) return p;
  const double eta = anytime_eta(k, round_ - 1).value();
  const double best =
      *std::min_element(cum_est_loss_.begin(), cum_est_loss_.end());
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    p[i] = std::exp(-eta * (cum_est_loss_[i] - best));
    total += p[i];
  }
  for (double& v : p) v /= total;
  return p;
}

Selection FtrlAnytimeEngine::select_arm() {
  scratch_ = probabilities();
  const ArmIndex arm = naive_sample(scratch_, 1.0, rng_.next());
  return {arm, scratch_[arm.value], 1};
}

void FtrlAnytimeEngine::update(ArmIndex arm, Loss loss, double probability) {
  force_estimate(arm, ipw_estimate(loss, probability));
}

void FtrlAnytimeEngine::force_estimate(ArmIndex arm, double estimated_loss) {
  if (arm.value >= arms()) throw std::invalid_argument("arm out of range");
  if (!(estimated_loss >= 0.0) || !std::isfinite(estimated_loss)) {
    throw std::invalid_argument("estimated loss must be finite and >= 0");
  }
  cum_est_loss_[arm.value] += estimated_loss;
  ++round_;
}

RoundRecord FtrlAnytimeEngine::step(Environment& env) {
  RoundRecord rec;
  rec.round = round_;
  const Selection s = select_arm();
  const Loss loss = env.observe(round_, s.arm);
  update(s.arm, loss, s.probability);
  rec.arm = s.arm;
  rec.loss = loss.value();
  rec.probability = s.probability;
  return rec;
}

// -- DelayedUpdateEngine ------------------------------------------------------

DelayedUpdateEngine::DelayedUpdateEngine(std::size_t arms, Backend backend,
                                         std::uint64_t seed,
                                         Exp3Options options)
    : cum_est_loss_(arms, 0.0),
      weights_(arms, backend, anytime_eta(arms, arms),
               WeightsOptions{arms, false, options.work_budget}),
      rng_(seed),
      scratch_(arms) {}

Selection DelayedUpdateEngine::select_arm() {
  const Draw d = weights_.sample(rng_);
  return {d.index, weights_.probability(d.index.value), d.attempts};
}

UpdateInfo DelayedUpdateEngine::update(ArmIndex arm, Loss loss) {
  if (arm.value >= arms()) throw std::invalid_argument("arm out of range");
  UpdateInfo info;
  info.total_before = weights_.state().total();
  info.estimated_loss = ipw_estimate(loss, weights_.probability(arm.value));
  cum_est_loss_[arm.value] += info.estimated_loss;
  weights_.apply_loss(arm.value, info.estimated_loss);
  info.total_after = weights_.state().total();
  weights_.end_round();

  const std::size_t k = arms();
  if (round_ % k == 0) {
    // Block boundary: re-exponentiate the cumulative estimates with the next
    // block's step size and rebuild the sampler.
    const LearningRate next = anytime_eta(k, round_ + k);
    for (std::size_t i = 0; i < k; ++i) {
      scratch_[i] = -next.value() * cum_est_loss_[i];
    }
    weights_.set_eta(next);
    weights_.reset_log_weights(scratch_);
  }
  ++round_;
  return info;
}

RoundRecord DelayedUpdateEngine::step(Environment& env) {
  RoundRecord rec;
  rec.round = round_;
  const Selection s = select_arm();
  const Loss loss = env.observe(round_, s.arm);
  update(s.arm, loss);
  rec.arm = s.arm;
  rec.loss = loss.value();
  rec.probability = s.probability;
  rec.attempts = s.attempts;
  return rec;
}

}  // namespace fastexp3
