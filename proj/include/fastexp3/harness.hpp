#pragma once

// Experiment driver behind the fastexp3 CLI.
//
// Configs are flat "key = value" files ('#' comments); CLI flags are applied
// on top as overrides. Every CSV row carries a hash of the canonical config.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <istream>
#include <memory>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fastexp3/core.hpp"
#include "fastexp3/environments.hpp"
#include "fastexp3/exp3.hpp"

namespace fastexp3 {

// Bad config values or arguments; the CLI maps this to exit code 2.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Algorithm { kExp3Fixed, kDoubling, kFtrl, kDelayed, kExp4 };

std::string_view algorithm_name(Algorithm algorithm);
Algorithm parse_algorithm(std::string_view name);

enum class EnvKind { kStochastic, kZero, kWorst, kAdaptive, kReplay };

std::string_view env_name(EnvKind kind);
EnvKind parse_env(std::string_view name);

struct ExperimentConfig {
  Algorithm algorithm = Algorithm::kExp3Fixed;
  Backend backend = Backend::kSegTree;
  std::size_t arms = 10;
  std::size_t horizon = 50000;
  EnvKind env = EnvKind::kStochastic;
  double env_mean = 0.5;  // mean loss of every arm but arm 0
  double env_gap = 0.1;   // arm 0's mean is env_mean - env_gap
  std::string env_path;   // replay CSV
  std::string partition;  // EXP4 partition file; empty means identity
  std::vector<std::uint64_t> seeds = default_seeds();
  std::size_t rebuild_period = 0;  // 0: K
  std::size_t work_budget = IncrementalBuilder::kDefaultBudget;
  std::size_t checkpoints = 10;
  bool timing = false;
  std::size_t threads = 0;  // 0: hardware concurrency
  std::string out;          // empty: stdout

  std::vector<std::size_t> bench_arms = {256,  512,   1024,  2048, 4096,
                                         8192, 16384, 32768, 65536};
  std::size_t bench_rounds = 100000;
  std::vector<Backend> bench_backends = {Backend::kNaive, Backend::kSegTree,
                                         Backend::kAliasSnapshot,
                                         Backend::kAliasDoubleBuffered};

  static std::vector<std::uint64_t> default_seeds();
};

// Sets one key. Throws ConfigError for unknown keys or bad values.
void apply_setting(ExperimentConfig& config, std::string_view key,
                   std::string_view value);
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::filesystem::path& path);
// Throws ConfigError if the config is inconsistent or a file is missing.
void validate(const ExperimentConfig& config);

// Canonical "key=value" listing of every setting that affects results.
std::string canonical_config(const ExperimentConfig& config);
// 16 hex digits of FNV-1a over canonical_config().
std::string config_hash(const ExperimentConfig& config);

std::unique_ptr<Environment> make_environment(const ExperimentConfig& config,
                                              std::uint64_t seed);
// Seed of the environment stream for a run seed; distinct from the player's.
std::uint64_t environment_seed(std::uint64_t seed);

// Worst-case regret guarantee for the algorithm, or NaN when none applies.
double regret_bound(Algorithm algorithm, std::size_t arms, std::size_t horizon);
// sqrt(K T ln K).
double regret_scale(std::size_t arms, std::size_t horizon);

// Uniform driving interface over every engine.
class Player {
 public:
  virtual ~Player() = default;
  virtual std::size_t arms() const = 0;
  virtual Selection select() = 0;
  virtual void update(const Selection& selection, Loss loss) = 0;
  virtual std::uint64_t rebuilds() const = 0;
};

std::unique_ptr<Player> make_player(const ExperimentConfig& config,
                                    std::size_t arms, std::size_t horizon,
                                    std::uint64_t seed);

struct ResultRow {
  std::uint64_t seed = 0;
  std::size_t round = 0;
  double cum_pseudo_regret = 0.0;
  double mean_round_ns = 0.0;  // NaN when timing is off
  double mean_attempts = 0.0;
  std::uint64_t rebuild_count = 0;
};

struct RegretSummary {
  std::size_t seeds = 0;
  double mean = 0.0;
  double std_error = 0.0;
  double coefficient = 0.0;  // mean / sqrt(K T ln K)
  double coefficient_std_error = 0.0;
  double bound = 0.0;        // NaN when no bound applies
  double mean_attempts = 0.0;
  bool within_bound() const { return !(mean > bound); }
};

struct RegretReport {
  std::vector<ResultRow> rows;
  std::vector<double> final_regret;  // one per seed, config order
  RegretSummary summary;
};

// One seed: plays the protocol for T rounds and records checkpoint rows.
std::vector<ResultRow> run_regret_seed(const ExperimentConfig& config,
                                       std::uint64_t seed);
RegretReport run_regret(const ExperimentConfig& config);
void write_regret_csv(const ExperimentConfig& config,
                      const RegretReport& report, std::ostream& out);

struct BenchRow {
  Backend backend = Backend::kNaive;
  std::size_t arms = 0;
  std::size_t rounds = 0;
  double median_ns = 0.0;
  double p99_ns = 0.0;
  double mean_attempts = 0.0;
  // Environment calls made inside the timed loop; always expected to be 0.
  std::uint64_t env_calls_timed = 0;
};

// Times select + update per round on precomputed losses, after a warm-up.
BenchRow bench_player(Player& player, Environment& env, std::size_t rounds);
std::vector<BenchRow> run_bench(const ExperimentConfig& config);
void write_bench_csv(const ExperimentConfig& config,
                     const std::vector<BenchRow>& rows, std::ostream& out);

struct AcceptBlockRow {
  std::uint64_t seed = 0;
  std::size_t block = 0;
  std::size_t rounds = 0;
  double mean_attempts = 0.0;
  std::uint64_t max_attempts = 0;
};

struct AcceptReport {
  std::vector<AcceptBlockRow> rows;
  double global_mean = 0.0;
  double worst_block_mean = 0.0;
  bool in_regime = true;
};

AcceptReport run_accept_rate(const ExperimentConfig& config);
void write_accept_csv(const ExperimentConfig& config,
                      const AcceptReport& report, std::ostream& out);

struct Table1Row {
  Algorithm algorithm;
  Backend backend;
  double median_ns = 0.0;  // at table1_timing_arms
  double coefficient = 0.0;
  double coefficient_std_error = 0.0;
  double bound_coefficient = 0.0;
};

struct Table1Options {
  std::size_t timing_arms = 4096;
  std::size_t timing_rounds = 100000;
  std::size_t regret_arms = 10;
  std::size_t regret_horizon = 50000;
  std::vector<std::uint64_t> seeds = ExperimentConfig::default_seeds();
  std::size_t threads = 0;
};

std::vector<Table1Row> run_table1(const Table1Options& options);
void write_table1(const std::vector<Table1Row>& rows,
                  const Table1Options& options, std::ostream& out);

// Compiler, hardware threads and build type, for soft-check reports.
std::string machine_info();

}  // namespace fastexp3
