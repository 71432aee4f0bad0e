#include "fastexp3/environments.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <istream>
#include <sstream>

namespace fastexp3 {

Loss Environment::observe(std::size_t round, ArmIndex arm) {
  if (round < 1) throw std::invalid_argument("rounds are 1-based");
  if (arm.value >= arms()) throw std::invalid_argument("arm out of range");
  ++calls_;
  return do_observe(round, arm);
}

std::vector<double> Environment::full_loss_vector(std::size_t round) {
  if (round < 1) throw std::invalid_argument("rounds are 1-based");
  ++calls_;
  return do_full_loss_vector(round);
}

// -- StochasticEnvironment ----------------------------------------------------

StochasticEnvironment::StochasticEnvironment(std::vector<double> means,
                                             std::uint64_t seed)
    : means_(std::move(means)), seed_(seed) {
  if (means_.size() < 2) throw std::invalid_argument("need K >= 2 means");
  for (double m : means_) {
    if (!(m >= 0.0 && m <= 1.0)) {
      throw std::invalid_argument("Bernoulli mean outside [0, 1]");
    }
  }
}

double StochasticEnvironment::cell(std::size_t round, std::size_t arm) const {
  const double mean = means_[arm];
  if (mean <= 0.0) return 0.0;
  if (mean >= 1.0) return 1.0;
  const std::uint64_t key =
      static_cast<std::uint64_t>(round) * means_.size() + arm;
  const double u =
      static_cast<double>(derive_seed(seed_, key) >> 11) * 0x1.0p-53;
  return u < mean ? 1.0 : 0.0;
}

Loss StochasticEnvironment::do_observe(std::size_t round, ArmIndex arm) {
  return Loss(cell(round, arm.value));
}

std::vector<double> StochasticEnvironment::do_full_loss_vector(
    std::size_t round) {
  std::vector<double> out(means_.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = cell(round, i);
  return out;
}

std::unique_ptr<StochasticEnvironment> stochastic_env(std::vector<double> means,
                                                      std::uint64_t seed) {
  return std::make_unique<StochasticEnvironment>(std::move(means), seed);
}

std::vector<double> gap_means(std::size_t arms, double other_mean, double gap) {
  std::vector<double> means(arms, other_mean);
  means.at(0) = other_mean - gap;
  return means;
}

// -- AdaptiveEnvironment ------------------------------------------------------

AdaptiveEnvironment::AdaptiveEnvironment(std::size_t arms,
                                         AdaptiveStrategy strategy)
    : strategy_(strategy), pulls_(arms, 0), losses_(arms, 0.0) {
  if (arms < 2) throw std::invalid_argument("need K >= 2");
}

void AdaptiveEnvironment::enter_round(std::size_t round) {
  if (round == round_) return;
  if (round != round_ + 1) {
    throw std::invalid_argument("adaptive environment rounds must be visited "
                                "in order");
  }
  round_ = round;
  observed_ = false;
  std::fill(losses_.begin(), losses_.end(), 0.0);
  switch (strategy_) {
    case AdaptiveStrategy::kTargetMostPulled: {
      const auto top = std::max_element(pulls_.begin(), pulls_.end());
      if (*top > 0) losses_[top - pulls_.begin()] = 1.0;
      break;
    }
  }
}

Loss AdaptiveEnvironment::do_observe(std::size_t round, ArmIndex arm) {
  enter_round(round);
  if (observed_) {
    throw std::invalid_argument("adaptive environment: one pull per round");
  }
  observed_ = true;
  ++pulls_[arm.value];
  return Loss(losses_[arm.value]);
}

std::vector<double> AdaptiveEnvironment::do_full_loss_vector(
    std::size_t round) {
  enter_round(round);
  return losses_;
}

std::unique_ptr<AdaptiveEnvironment> adaptive_env(std::size_t arms,
                                                  AdaptiveStrategy strategy) {
  return std::make_unique<AdaptiveEnvironment>(arms, strategy);
}

// -- ReplayEnvironment --------------------------------------------------------

ReplayEnvironment::ReplayEnvironment(std::size_t arms,
                                     std::vector<double> table)
    : arms_(arms), table_(std::move(table)) {
  if (arms_ < 2) throw std::invalid_argument("replay table needs K >= 2");
  if (table_.empty() || table_.size() % arms_ != 0) {
    throw std::invalid_argument("replay table is empty or ragged");
  }
}

std::size_t ReplayEnvironment::row_offset(std::size_t round) const {
  if (round > rounds()) {
    throw std::out_of_range("replay table has " + std::to_string(rounds()) +
                            " rounds, asked for round " +
                            std::to_string(round));
  }
  return (round - 1) * arms_;
}

Loss ReplayEnvironment::do_observe(std::size_t round, ArmIndex arm) {
  return Loss(table_[row_offset(round) + arm.value]);
}

std::vector<double> ReplayEnvironment::do_full_loss_vector(std::size_t round) {
  const std::size_t off = row_offset(round);
  return {table_.begin() + static_cast<std::ptrdiff_t>(off),
          table_.begin() + static_cast<std::ptrdiff_t>(off + arms_)};
}

namespace {

double parse_cell(std::string_view text, std::size_t row) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) {
    text.remove_prefix(1);
  }
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' ||
                           text.back() == '\r')) {
    text.remove_suffix(1);
  }
  double value = 0.0;
  const auto [end, ec] =
      std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || end != text.data() + text.size() || text.empty()) {
    throw LoadError(row, "cannot parse '" + std::string(text) + "'");
  }
  if (!(value >= 0.0 && value <= 1.0)) {
    throw LoadError(row, "loss " + std::string(text) + " outside [0, 1]");
  }
  return value;
}

}  // namespace

std::unique_ptr<ReplayEnvironment> parse_loss_table(std::istream& in) {
  std::vector<double> table;
  std::size_t arms = 0;
  std::size_t row = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") {
      throw LoadError(row, "empty row");
    }
    std::size_t cells = 0;
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      table.push_back(parse_cell(rest.substr(0, comma), row));
      ++cells;
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (arms == 0) {
      arms = cells;
      if (arms < 2) throw LoadError(row, "need at least two columns");
    } else if (cells != arms) {
      throw LoadError(row, "expected " + std::to_string(arms) +
                               " columns, found " + std::to_string(cells));
    }
  }
  if (row == 0) throw LoadError(0, "loss table is empty");
  return std::make_unique<ReplayEnvironment>(arms, std::move(table));
}

std::unique_ptr<ReplayEnvironment> replay_env(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError(0, "cannot open " + path.string());
  return parse_loss_table(in);
}

void write_loss_table(Environment& env, std::size_t rounds,
                      std::ostream& out) {
  const auto old_precision = out.precision(17);
  for (std::size_t t = 1; t <= rounds; ++t) {
    const std::vector<double> row = env.full_loss_vector(t);
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      out << row[i];
    }
    out << '\n';
  }
  out.precision(old_precision);
}

// -- RegretLedger -------------------------------------------------------------

void RegretLedger::record(std::span<const double> loss_vector,
                          ArmIndex played) {
  if (loss_vector.size() != cum_arm_loss_.size()) {
    throw std::invalid_argument("loss vector has the wrong length");
  }
  cum_player_loss_ += loss_vector[played.value];
  for (std::size_t i = 0; i < loss_vector.size(); ++i) {
    cum_arm_loss_[i] += loss_vector[i];
  }
}

double RegretLedger::pseudo_regret() const {
  return cum_player_loss_ -
         *std::min_element(cum_arm_loss_.begin(), cum_arm_loss_.end());
}

}  // namespace fastexp3
