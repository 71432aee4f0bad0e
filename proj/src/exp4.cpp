#include "fastexp3/exp4.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace fastexp3 {

// -- IdentityOracle -----------------------------------------------------------

IdentityOracle::IdentityOracle(std::size_t arms) : ids_(arms) {
  if (arms < 2) throw std::invalid_argument("need K >= 2");
  for (std::size_t i = 0; i < arms; ++i) ids_[i] = i;
}

ArmIndex IdentityOracle::recommendation(std::size_t, std::size_t expert) {
  return ArmIndex(ids_.at(expert));
}

std::span<const std::size_t> IdentityOracle::group(std::size_t,
                                                   std::size_t expert) {
  return std::span<const std::size_t>(ids_).subspan(expert, 1);
}

// -- PartitionOracle ----------------------------------------------------------

PartitionOracle::PartitionOracle(
    std::size_t arms, std::vector<std::vector<std::size_t>> assignments)
    : arms_(arms) {
  if (arms_ < 2) throw std::invalid_argument("need K >= 2");
  if (assignments.empty()) throw std::invalid_argument("no partition blocks");
  experts_ = assignments.front().size();
  if (experts_ < 2) throw std::invalid_argument("need N >= 2 experts");
  for (auto& arm_of : assignments) {
    if (arm_of.size() != experts_) {
      throw std::invalid_argument("partition blocks disagree on N");
    }
    Block block;
    block.members.resize(arms_);
    for (std::size_t j = 0; j < experts_; ++j) {
      if (arm_of[j] >= arms_) {
        throw std::invalid_argument("expert recommends an arm >= K");
      }
      block.members[arm_of[j]].push_back(j);
    }
    block.arm_of = std::move(arm_of);
    blocks_.push_back(std::move(block));
  }
}

const PartitionOracle::Block& PartitionOracle::block_for(
    std::size_t round) const {
  if (round < 1) throw std::invalid_argument("rounds are 1-based");
  return blocks_[(round - 1) % blocks_.size()];
}

ArmIndex PartitionOracle::recommendation(std::size_t round,
                                         std::size_t expert) {
  return ArmIndex(block_for(round).arm_of.at(expert));
}

std::span<const std::size_t> PartitionOracle::group(std::size_t round,
                                                    std::size_t expert) {
  const Block& b = block_for(round);
  return b.members[b.arm_of.at(expert)];
}

std::unique_ptr<PartitionOracle> parse_partition(std::istream& in,
                                                 std::size_t arms) {
  std::vector<std::vector<std::size_t>> blocks;
  std::vector<std::pair<std::size_t, std::size_t>> current;
  std::size_t current_start = 0;
  std::size_t line_no = 0;

  auto close_block = [&](std::size_t at_line) {
    if (current.empty()) return;
    std::vector<std::size_t> arm_of(current.size(), SIZE_MAX);
    for (const auto& [expert, arm] : current) {
      if (expert >= current.size()) {
        throw LoadError(at_line, "expert ids must be 0.." +
                                     std::to_string(current.size() - 1));
      }
      if (arm_of[expert] != SIZE_MAX) {
        throw LoadError(at_line,
                        "expert " + std::to_string(expert) + " listed twice");
      }
      arm_of[expert] = arm;
    }
    if (!blocks.empty() && arm_of.size() != blocks.front().size()) {
      throw LoadError(current_start, "block lists a different number of "
                                     "experts than the first block");
    }
    blocks.push_back(std::move(arm_of));
    current.clear();
  };

  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      close_block(line_no);
      continue;
    }
    std::istringstream fields(line);
    long long expert = -1;
    long long arm = -1;
    std::string extra;
    if (!(fields >> expert >> arm) || (fields >> extra) || expert < 0 ||
        arm < 0) {
      throw LoadError(line_no, "expected 'expert_id arm_id'");
    }
    if (static_cast<std::size_t>(arm) >= arms) {
      throw LoadError(line_no, "arm " + std::to_string(arm) + " >= K");
    }
    if (current.empty()) current_start = line_no;
    current.emplace_back(static_cast<std::size_t>(expert),
                         static_cast<std::size_t>(arm));
  }
  close_block(line_no);
  if (blocks.empty()) throw LoadError(0, "partition file has no entries");
  return std::make_unique<PartitionOracle>(arms, std::move(blocks));
}

std::unique_ptr<PartitionOracle> load_partition(
    const std::filesystem::path& path, std::size_t arms) {
  std::ifstream in(path);
  if (!in) throw LoadError(0, "cannot open " + path.string());
  return parse_partition(in, arms);
}

// -- Exp4Engine ---------------------------------------------------------------

Exp4Engine::Exp4Engine(std::size_t experts, std::size_t horizon,
                       Backend backend, std::uint64_t seed,
                       Exp3Options options)
    : horizon_(horizon),
      weights_(experts, backend, fixed_eta(experts, horizon),
               WeightsOptions{options.rebuild_period, true,
                              options.work_budget}),
      rng_(seed) {}

ExpertSelection Exp4Engine::select(ExpertOracle& oracle) {
  if (oracle.experts() != experts()) {
    throw std::invalid_argument("oracle and engine disagree on N");
  }
  if (round_ > horizon_) throw InvalidState("horizon exhausted");
  const Draw d = weights_.sample(rng_);
  const std::size_t j = d.index.value;
  ExpertSelection out;
  out.expert = j;
  out.arm = oracle.recommendation(round_, j);
  out.attempts = d.attempts;
  const auto group = oracle.group(round_, j);
  if (std::find(group.begin(), group.end(), j) == group.end()) {
    throw std::invalid_argument("oracle group E_t(j) does not contain j");
  }
  out.group.assign(group.begin(), group.end());
  for (std::size_t member : group) {
    if (oracle.recommendation(round_, member) != out.arm) {
      throw std::invalid_argument("oracle group mixes recommended arms");
    }
    out.group_probability += weights_.probability(member);
  }
  return out;
}

void Exp4Engine::update(std::size_t expert, std::span<const std::size_t> group,
                        Loss loss, double group_probability) {
  if (std::find(group.begin(), group.end(), expert) == group.end()) {
    throw std::invalid_argument("update group does not contain the expert");
  }
  const double estimate = ipw_estimate(loss, group_probability);
  last_touched_ = 0;
  for (std::size_t member : group) {
    weights_.apply_loss(member, estimate);
    ++last_touched_;
  }
  weights_.end_round();
  ++round_;
}

RoundRecord Exp4Engine::step(ExpertOracle& oracle, Environment& env) {
  RoundRecord rec;
  rec.round = round_;
  const ExpertSelection s = select(oracle);
  const Loss loss = env.observe(round_, s.arm);
  update(s.expert, s.group, loss, s.group_probability);
  rec.arm = s.arm;
  rec.loss = loss.value();
  rec.probability = s.group_probability;
  rec.attempts = s.attempts;
  return rec;
}

}  // namespace fastexp3
