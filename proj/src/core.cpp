#include "fastexp3/core.hpp"

#include <cmath>

namespace fastexp3 {

Loss::Loss(double value) : value_(value) {
  if (!(value >= 0.0 && value <= 1.0)) {
    throw std::invalid_argument("loss must lie in [0, 1], got " +
                                std::to_string(value));
  }
}

LearningRate::LearningRate(double value) : value_(value) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw std::invalid_argument("learning rate must be positive and finite");
  }
}

LearningRate fixed_eta(std::size_t arms, std::size_t horizon) {
  if (arms < 2) throw std::invalid_argument("fixed_eta: need K >= 2");
  if (horizon < 1) throw std::invalid_argument("fixed_eta: need T >= 1");
  const double k = static_cast<double>(arms);
  const double t = static_cast<double>(horizon);
  return LearningRate(std::sqrt(2.0 * std::log(k) / (k * t)));
}

LearningRate anytime_eta(std::size_t arms, std::size_t round) {
  if (arms < 2) throw std::invalid_argument("anytime_eta: need K >= 2");
  if (round < 1) throw std::invalid_argument("anytime_eta: need t >= 1");
  const double k = static_cast<double>(arms);
  const double t = static_cast<double>(round);
  return LearningRate(std::sqrt(std::log(k) / (k * t)));
}

std::size_t block_end(std::size_t round, std::size_t arms) {
  if (round < 1) throw std::invalid_argument("block_end: need t >= 1");
  if (arms < 2) throw std::invalid_argument("block_end: need K >= 2");
  return (round + arms - 1) / arms * arms;
}

double ipw_estimate(Loss loss, double probability) {
  if (!(probability > 0.0) || probability > 1.0 + 1e-12) {
    throw std::invalid_argument(
        "ipw_estimate: probability must lie in (0, 1], got " +
        std::to_string(probability));
  }
  return loss.value() / probability;
}

bool in_acceptance_regime(std::size_t arms, std::size_t horizon) {
  const double k = static_cast<double>(arms);
  return static_cast<double>(horizon) >= 2.0 * k * std::log(k);
}

}  // namespace fastexp3
