#include "fastexp3/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <limits>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "fastexp3/anytime.hpp"
#include "fastexp3/exp4.hpp"

namespace fastexp3 {

namespace {

constexpr std::uint64_t kEnvironmentStream = 0x656e76;  // "env"
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
  text = trim(text);
  T value{};
  const auto [end, ec] =
      std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || end != text.data() + text.size() || text.empty()) {
    throw ConfigError("bad value '" + std::string(text) + "' for " +
                      std::string(key));
  }
  return value;
}

bool parse_bool(std::string_view key, std::string_view text) {
  text = trim(text);
  if (text == "1" || text == "true" || text == "yes" || text == "on") {
    return true;
  }
  if (text == "0" || text == "false" || text == "no" || text == "off") {
    return false;
  }
  throw ConfigError("bad boolean '" + std::string(text) + "' for " +
                    std::string(key));
}

template <typename T, typename F>
std::vector<T> parse_list(std::string_view text, F&& parse_item) {
  std::vector<T> out;
  while (!text.empty()) {
    const auto comma = text.find(',');
    const std::string_view item = trim(text.substr(0, comma));
    if (!item.empty()) parse_item(item, out);
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  return out;
}

// "1-20", "3,5,9" or a mix of both.
std::vector<std::uint64_t> parse_seeds(std::string_view text) {
  auto seeds = parse_list<std::uint64_t>(
      text, [](std::string_view item, std::vector<std::uint64_t>& out) {
        const auto dash = item.find('-');
        if (dash == std::string_view::npos) {
          out.push_back(parse_number<std::uint64_t>("seeds", item));
          return;
        }
        const auto lo = parse_number<std::uint64_t>("seeds", item.substr(0, dash));
        const auto hi =
            parse_number<std::uint64_t>("seeds", item.substr(dash + 1));
        if (hi < lo || hi - lo > 1'000'000) {
          throw ConfigError("bad seed range '" + std::string(item) + "'");
        }
        for (std::uint64_t s = lo; s <= hi; ++s) out.push_back(s);
      });
  if (seeds.empty()) throw ConfigError("seeds must not be empty");
  return seeds;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "NA";
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

template <typename Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn&& fn) {
  if (threads == 0) {
    threads = std::max(1u, std::thread::hardware_concurrency());
  }
  threads = std::min(threads, count);
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  pool.clear();
  if (error) std::rethrow_exception(error);
}

// -- Players ------------------------------------------------------------------

class Exp3Player : public Player {
 public:
  Exp3Player(std::size_t arms, std::size_t horizon, Backend backend,
             std::uint64_t seed, Exp3Options options)
      : engine_(arms, horizon, backend, seed, options) {}

  std::size_t arms() const override { return engine_.arms(); }
  Selection select() override { return engine_.select_arm(); }
  void update(const Selection& s, Loss loss) override {
    engine_.update(s.arm, loss);
  }
  std::uint64_t rebuilds() const override {
    return engine_.weights().rebuilds();
  }

 private:
  Exp3Engine engine_;
};

class DoublingPlayer : public Player {
 public:
  DoublingPlayer(std::size_t arms, Backend backend, std::uint64_t seed,
                 Exp3Options options)
      : engine_(arms, backend, seed, options) {}

  std::size_t arms() const override { return engine_.arms(); }
  Selection select() override { return engine_.select_arm(); }
  void update(const Selection& s, Loss loss) override {
    engine_.update(s.arm, loss);
  }
  std::uint64_t rebuilds() const override { return engine_.rebuilds(); }

 private:
  DoublingWrapper engine_;
};

class FtrlPlayer : public Player {
 public:
  FtrlPlayer(std::size_t arms, std::uint64_t seed) : engine_(arms, seed) {}

  std::size_t arms() const override { return engine_.arms(); }
  Selection select() override { return engine_.select_arm(); }
  void update(const Selection& s, Loss loss) override {
    engine_.update(s.arm, loss, s.probability);
  }
  std::uint64_t rebuilds() const override { return 0; }

 private:
  FtrlAnytimeEngine engine_;
};

class DelayedPlayer : public Player {
 public:
  DelayedPlayer(std::size_t arms, Backend backend, std::uint64_t seed,
                Exp3Options options)
      : engine_(arms, backend, seed, options) {}

  std::size_t arms() const override { return engine_.arms(); }
  Selection select() override { return engine_.select_arm(); }
  void update(const Selection& s, Loss loss) override {
    engine_.update(s.arm, loss);
  }
  std::uint64_t rebuilds() const override {
    return engine_.weights().rebuilds();
  }

 private:
  DelayedUpdateEngine engine_;
};

class Exp4Player : public Player {
 public:
  Exp4Player(std::unique_ptr<ExpertOracle> oracle, std::size_t horizon,
             Backend backend, std::uint64_t seed, Exp3Options options)
      : oracle_(std::move(oracle)),
        engine_(oracle_->experts(), horizon, backend, seed, options) {}

  std::size_t arms() const override { return oracle_->arms(); }
  Selection select() override {
    last_ = engine_.select(*oracle_);
    return {last_.arm, last_.group_probability, last_.attempts};
  }
  void update(const Selection&, Loss loss) override {
    engine_.update(last_.expert, last_.group, loss, last_.group_probability);
  }
  std::uint64_t rebuilds() const override {
    return engine_.weights().rebuilds();
  }

 private:
  std::unique_ptr<ExpertOracle> oracle_;
  Exp4Engine engine_;
  ExpertSelection last_;
};

}  // namespace

// -- Names --------------------------------------------------------------------

std::string_view algorithm_name(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::kExp3Fixed:
      return "exp3-fixed";
    case Algorithm::kDoubling:
      return "doubling";
    case Algorithm::kFtrl:
      return "ftrl";
    case Algorithm::kDelayed:
      return "delayed";
    case Algorithm::kExp4:
      return "exp4";
  }
  return "?";
}

Algorithm parse_algorithm(std::string_view name) {
  for (Algorithm a : {Algorithm::kExp3Fixed, Algorithm::kDoubling,
                      Algorithm::kFtrl, Algorithm::kDelayed,
                      Algorithm::kExp4}) {
    if (algorithm_name(a) == name) return a;
  }
  if (name == "exp3") return Algorithm::kExp3Fixed;
  throw ConfigError("unknown algorithm '" + std::string(name) + "'");
}

std::string_view env_name(EnvKind kind) {
  switch (kind) {
    case EnvKind::kStochastic:
      return "stochastic";
    case EnvKind::kZero:
      return "zero";
    case EnvKind::kWorst:
      return "worst";
    case EnvKind::kAdaptive:
      return "adaptive";
    case EnvKind::kReplay:
      return "replay";
  }
  return "?";
}

EnvKind parse_env(std::string_view name) {
  for (EnvKind k : {EnvKind::kStochastic, EnvKind::kZero, EnvKind::kWorst,
                    EnvKind::kAdaptive, EnvKind::kReplay}) {
    if (env_name(k) == name) return k;
  }
  throw ConfigError("unknown environment '" + std::string(name) + "'");
}

// -- Config -------------------------------------------------------------------

std::vector<std::uint64_t> ExperimentConfig::default_seeds() {
  std::vector<std::uint64_t> seeds(20);
  std::iota(seeds.begin(), seeds.end(), 1);
  return seeds;
}

void apply_setting(ExperimentConfig& c, std::string_view key,
                   std::string_view value) {
  key = trim(key);
  value = trim(value);
  try {
    if (key == "algorithm") {
      c.algorithm = parse_algorithm(value);
    } else if (key == "backend") {
      c.backend = parse_backend(value);
    } else if (key == "k" || key == "arms") {
      c.arms = parse_number<std::size_t>(key, value);
    } else if (key == "t" || key == "horizon") {
      c.horizon = parse_number<std::size_t>(key, value);
    } else if (key == "env") {
      c.env = parse_env(value);
    } else if (key == "env_mean") {
      c.env_mean = parse_number<double>(key, value);
    } else if (key == "env_gap") {
      c.env_gap = parse_number<double>(key, value);
    } else if (key == "env_path") {
      c.env_path = std::string(value);
    } else if (key == "partition") {
      c.partition = std::string(value);
    } else if (key == "seeds") {
      c.seeds = parse_seeds(value);
    } else if (key == "seed") {
      c.seeds = {parse_number<std::uint64_t>(key, value)};
    } else if (key == "rebuild_period") {
      c.rebuild_period = parse_number<std::size_t>(key, value);
    } else if (key == "work_budget") {
      c.work_budget = parse_number<std::size_t>(key, value);
    } else if (key == "checkpoints") {
      c.checkpoints = parse_number<std::size_t>(key, value);
    } else if (key == "timing") {
      c.timing = parse_bool(key, value);
    } else if (key == "threads") {
      c.threads = parse_number<std::size_t>(key, value);
    } else if (key == "out") {
      c.out = std::string(value);
    } else if (key == "bench_k") {
      c.bench_arms = parse_list<std::size_t>(
          value, [](std::string_view item, std::vector<std::size_t>& out) {
            out.push_back(parse_number<std::size_t>("bench_k", item));
          });
    } else if (key == "bench_rounds") {
      c.bench_rounds = parse_number<std::size_t>(key, value);
    } else if (key == "bench_backends") {
      c.bench_backends = parse_list<Backend>(
          value, [](std::string_view item, std::vector<Backend>& out) {
            out.push_back(parse_backend(item));
          });
    } else {
      throw ConfigError("unknown config key '" + std::string(key) + "'");
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig config;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": expected key = value");
    }
    apply_setting(config, std::string_view(line).substr(0, eq),
                  std::string_view(line).substr(eq + 1));
  }
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  return parse_config(in);
}

void validate(const ExperimentConfig& c) {
  if (c.arms < 2) throw ConfigError("K must be >= 2");
  if (c.horizon < 1) throw ConfigError("T must be >= 1");
  if (c.seeds.empty()) throw ConfigError("seeds must not be empty");
  if (c.checkpoints < 1) throw ConfigError("checkpoints must be >= 1");
  if (c.work_budget < 1) throw ConfigError("work_budget must be >= 1");
  if (c.env == EnvKind::kStochastic) {
    const double best = c.env_mean - c.env_gap;
    if (!(c.env_mean >= 0.0 && c.env_mean <= 1.0 && best >= 0.0 &&
          best <= 1.0)) {
      throw ConfigError("env_mean and env_mean - env_gap must lie in [0, 1]");
    }
  }
  if (c.env == EnvKind::kReplay) {
    if (c.env_path.empty()) throw ConfigError("env = replay needs env_path");
    if (!std::filesystem::exists(c.env_path)) {
      throw ConfigError("replay file " + c.env_path + " does not exist");
    }
  }
  if (!c.partition.empty() && !std::filesystem::exists(c.partition)) {
    throw ConfigError("partition file " + c.partition + " does not exist");
  }
  for (std::size_t k : c.bench_arms) {
    if (k < 2) throw ConfigError("bench_k entries must be >= 2");
  }
  if (c.bench_rounds < 1) throw ConfigError("bench_rounds must be >= 1");
}

std::string canonical_config(const ExperimentConfig& c) {
  std::ostringstream os;
  os << "algorithm=" << algorithm_name(c.algorithm) << '\n'
     << "backend=" << backend_name(c.backend) << '\n'
     << "k=" << c.arms << '\n'
     << "t=" << c.horizon << '\n'
     << "env=" << env_name(c.env) << '\n'
     << "env_mean=" << format_double(c.env_mean) << '\n'
     << "env_gap=" << format_double(c.env_gap) << '\n'
     << "env_path=" << c.env_path << '\n'
     << "partition=" << c.partition << '\n'
     << "seeds=";
  for (std::size_t i = 0; i < c.seeds.size(); ++i) {
    os << (i ? "," : "") << c.seeds[i];
  }
  os << '\n'
     << "rebuild_period=" << c.rebuild_period << '\n'
     << "work_budget=" << c.work_budget << '\n'
     << "checkpoints=" << c.checkpoints << '\n'
     << "timing=" << c.timing << '\n'
     << "bench_k=";
  for (std::size_t i = 0; i < c.bench_arms.size(); ++i) {
    os << (i ? "," : "") << c.bench_arms[i];
  }
  os << '\n' << "bench_rounds=" << c.bench_rounds << '\n' << "bench_backends=";
  for (std::size_t i = 0; i < c.bench_backends.size(); ++i) {
    os << (i ? "," : "") << backend_name(c.bench_backends[i]);
  }
  os << '\n';
  return os.str();
}

std::string config_hash(const ExperimentConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical_config(config)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

// -- Environments and players -------------------------------------------------

std::uint64_t environment_seed(std::uint64_t seed) {
  return derive_seed(seed, kEnvironmentStream);
}

std::unique_ptr<Environment> make_environment(const ExperimentConfig& c,
                                              std::uint64_t seed) {
  switch (c.env) {
    case EnvKind::kStochastic:
      return stochastic_env(gap_means(c.arms, c.env_mean, c.env_gap),
                            environment_seed(seed));
    case EnvKind::kZero:
      return stochastic_env(std::vector<double>(c.arms, 0.0),
                            environment_seed(seed));
    case EnvKind::kWorst:
      return stochastic_env(std::vector<double>(c.arms, 1.0),
                            environment_seed(seed));
    case EnvKind::kAdaptive:
      return adaptive_env(c.arms, AdaptiveStrategy::kTargetMostPulled);
    case EnvKind::kReplay: {
      auto env = replay_env(c.env_path);
      if (env->arms() != c.arms) {
        throw ConfigError("replay table has " + std::to_string(env->arms()) +
                          " columns but K = " + std::to_string(c.arms));
      }
      return env;
    }
  }
  throw ConfigError("unknown environment");
}

std::unique_ptr<Player> make_player(const ExperimentConfig& c,
                                    std::size_t arms, std::size_t horizon,
                                    std::uint64_t seed) {
  const Exp3Options options{c.rebuild_period, c.work_budget};
  switch (c.algorithm) {
    case Algorithm::kExp3Fixed:
      return std::make_unique<Exp3Player>(arms, horizon, c.backend, seed,
                                          options);
    case Algorithm::kDoubling:
      return std::make_unique<DoublingPlayer>(arms, c.backend, seed, options);
    case Algorithm::kFtrl:
      return std::make_unique<FtrlPlayer>(arms, seed);
    case Algorithm::kDelayed:
      return std::make_unique<DelayedPlayer>(arms, c.backend, seed, options);
    case Algorithm::kExp4: {
      std::unique_ptr<ExpertOracle> oracle;
      if (c.partition.empty()) {
        oracle = std::make_unique<IdentityOracle>(arms);
      } else {
        oracle = load_partition(c.partition, arms);
      }
      return std::make_unique<Exp4Player>(std::move(oracle), horizon,
                                          c.backend, seed, options);
    }
  }
  throw ConfigError("unknown algorithm");
}

double regret_scale(std::size_t arms, std::size_t horizon) {
  const double k = static_cast<double>(arms);
  return std::sqrt(k * static_cast<double>(horizon) * std::log(k));
}

double regret_bound(Algorithm algorithm, std::size_t arms,
                    std::size_t horizon) {
  const double scale = regret_scale(arms, horizon);
  const double k = static_cast<double>(arms);
  switch (algorithm) {
    case Algorithm::kExp3Fixed:
      return std::sqrt(2.0) * scale;
    case Algorithm::kDoubling:
      return 4.83 * scale;
    case Algorithm::kFtrl:
      return 2.0 * scale;
    case Algorithm::kDelayed:
      return 2.0 * scale + k * std::sqrt(std::log(k));
    case Algorithm::kExp4:
      return kNaN;
  }
  return kNaN;
}

// -- regret -------------------------------------------------------------------

std::vector<ResultRow> run_regret_seed(const ExperimentConfig& c,
                                       std::uint64_t seed) {
  using Clock = std::chrono::steady_clock;
  auto env = make_environment(c, seed);
  auto player = make_player(c, c.arms, c.horizon, seed);
  if (player->arms() != env->arms()) {
    throw ConfigError("player and environment disagree on K");
  }
  RegretLedger ledger(env->arms());
  const std::size_t every = std::max<std::size_t>(1, c.horizon / c.checkpoints);
  std::vector<ResultRow> rows;
  std::uint64_t attempts = 0;
  std::int64_t elapsed_ns = 0;
  for (std::size_t t = 1; t <= c.horizon; ++t) {
    const auto start = c.timing ? Clock::now() : Clock::time_point{};
    const Selection s = player->select();
    const Loss loss = env->observe(t, s.arm);
    player->update(s, loss);
    if (c.timing) {
      elapsed_ns += std::chrono::duration_cast<std::chrono::nanoseconds>(
                        Clock::now() - start)
                        .count();
    }
    ledger.record(env->full_loss_vector(t), s.arm);
    attempts += s.attempts;
    if (t % every == 0 || t == c.horizon) {
      ResultRow row;
      row.seed = seed;
      row.round = t;
      row.cum_pseudo_regret = ledger.pseudo_regret();
      row.mean_round_ns =
          c.timing ? static_cast<double>(elapsed_ns) / static_cast<double>(t)
                   : kNaN;
      row.mean_attempts =
          static_cast<double>(attempts) / static_cast<double>(t);
      row.rebuild_count = player->rebuilds();
      rows.push_back(row);
    }
  }
  return rows;
}

RegretReport run_regret(const ExperimentConfig& c) {
  validate(c);
  std::vector<std::vector<ResultRow>> per_seed(c.seeds.size());
  parallel_for(c.seeds.size(), c.threads, [&](std::size_t i) {
    per_seed[i] = run_regret_seed(c, c.seeds[i]);
  });

  RegretReport report;
  double attempts = 0.0;
  for (auto& rows : per_seed) {
    report.final_regret.push_back(rows.back().cum_pseudo_regret);
    attempts += rows.back().mean_attempts;
    report.rows.insert(report.rows.end(), rows.begin(), rows.end());
  }
  const auto n = static_cast<double>(report.final_regret.size());
  RegretSummary& s = report.summary;
  s.seeds = report.final_regret.size();
  s.mean = std::accumulate(report.final_regret.begin(),
                           report.final_regret.end(), 0.0) /
           n;
  double ss = 0.0;
  for (double r : report.final_regret) ss += (r - s.mean) * (r - s.mean);
  s.std_error = s.seeds > 1 ? std::sqrt(ss / (n - 1.0)) / std::sqrt(n) : 0.0;
  const double scale = regret_scale(c.arms, c.horizon);
  s.coefficient = s.mean / scale;
  s.coefficient_std_error = s.std_error / scale;
  s.bound = regret_bound(c.algorithm, c.arms, c.horizon);
  s.mean_attempts = attempts / n;
  return report;
}

void write_regret_csv(const ExperimentConfig& c, const RegretReport& report,
                      std::ostream& out) {
  const std::string hash = config_hash(c);
  const std::string prefix = hash + "," + std::string(algorithm_name(c.algorithm)) +
                             "," + std::string(backend_name(c.backend)) + "," +
                             std::to_string(c.arms) + "," +
                             std::to_string(c.horizon) + ",";
  out << "config_hash,algorithm,backend,K,T,seed,t,cum_pseudo_regret,"
         "coefficient,mean_round_ns,mean_attempts,rebuild_count\n";
  for (const ResultRow& r : report.rows) {
    out << prefix << r.seed << ',' << r.round << ','
        << format_double(r.cum_pseudo_regret) << ','
        << format_double(r.cum_pseudo_regret / regret_scale(c.arms, r.round))
        << ',' << format_double(r.mean_round_ns) << ','
        << format_double(r.mean_attempts) << ',' << r.rebuild_count << '\n';
  }
  const RegretSummary& s = report.summary;
  const double scale = regret_scale(c.arms, c.horizon);
  out << prefix << "mean," << c.horizon << ',' << format_double(s.mean) << ','
      << format_double(s.coefficient) << ",NA,"
      << format_double(s.mean_attempts) << ",NA\n";
  out << prefix << "stderr," << c.horizon << ',' << format_double(s.std_error)
      << ',' << format_double(s.coefficient_std_error) << ",NA,NA,NA\n";
  out << prefix << "bound," << c.horizon << ',' << format_double(s.bound)
      << ',' << format_double(s.bound / scale) << ",NA,NA,NA\n";
}

// -- bench --------------------------------------------------------------------

BenchRow bench_player(Player& player, Environment& env, std::size_t rounds) {
  using Clock = std::chrono::steady_clock;
  const std::size_t k = env.arms();
  const std::size_t table_rows =
      std::clamp<std::size_t>((std::size_t{1} << 18) / k, 4, 4096);
  std::vector<double> table(table_rows * k);
  for (std::size_t r = 0; r < table_rows; ++r) {
    const std::vector<double> row = env.full_loss_vector(r + 1);
    std::copy(row.begin(), row.end(),
              table.begin() + static_cast<std::ptrdiff_t>(r * k));
  }

  const std::size_t warmup = std::min<std::size_t>(rounds / 10, 10000);
  std::vector<std::int64_t> samples;
  samples.reserve(rounds);
  std::uint64_t attempts = 0;
  const std::uint64_t calls_before = env.calls();
  // One timestamp per round; a round's latency is the gap to the next one,
  // which keeps clock overhead to a single read.
  auto previous = Clock::now();
  for (std::size_t t = 0; t < warmup + rounds; ++t) {
    const Selection s = player.select();
    player.update(s, Loss(table[(t % table_rows) * k + s.arm.value]));
    const auto now = Clock::now();
    if (t >= warmup) {
      samples.push_back(
          std::chrono::duration_cast<std::chrono::nanoseconds>(now - previous)
              .count());
      attempts += s.attempts;
    }
    previous = now;
  }
  BenchRow row;
  row.arms = k;
  row.rounds = rounds;
  row.env_calls_timed = env.calls() - calls_before;
  row.mean_attempts =
      static_cast<double>(attempts) / static_cast<double>(rounds);
  auto quantile = [&](double q) {
    const auto idx = static_cast<std::size_t>(
        q * static_cast<double>(samples.size() - 1));
    std::nth_element(samples.begin(),
                     samples.begin() + static_cast<std::ptrdiff_t>(idx),
                     samples.end());
    return static_cast<double>(samples[idx]);
  };
  row.median_ns = quantile(0.5);
  row.p99_ns = quantile(0.99);
  return row;
}

std::vector<BenchRow> run_bench(const ExperimentConfig& config) {
  validate(config);
  std::vector<BenchRow> rows;
  const std::uint64_t seed = config.seeds.front();
  for (std::size_t k : config.bench_arms) {
    for (Backend backend : config.bench_backends) {
      ExperimentConfig c = config;
      c.arms = k;
      c.backend = backend;
      c.algorithm = Algorithm::kExp3Fixed;
      c.env = EnvKind::kStochastic;
      const std::size_t warmup = std::min<std::size_t>(c.bench_rounds / 10, 10000);
      auto env = make_environment(c, seed);
      auto player = make_player(c, k, c.bench_rounds + warmup, seed);
      BenchRow row = bench_player(*player, *env, c.bench_rounds);
      row.backend = backend;
      rows.push_back(row);
    }
  }
  return rows;
}

void write_bench_csv(const ExperimentConfig& config,
                     const std::vector<BenchRow>& rows, std::ostream& out) {
  const std::string hash = config_hash(config);
  out << "config_hash,backend,K,rounds,median_ns,p99_ns,mean_attempts,"
         "env_calls_timed\n";
  for (const BenchRow& r : rows) {
    out << hash << ',' << backend_name(r.backend) << ',' << r.arms << ','
        << r.rounds << ',' << format_double(r.median_ns) << ','
        << format_double(r.p99_ns) << ',' << format_double(r.mean_attempts)
        << ',' << r.env_calls_timed << '\n';
  }
}

// -- accept-rate --------------------------------------------------------------

AcceptReport run_accept_rate(const ExperimentConfig& c) {
  validate(c);
  if (c.backend != Backend::kAliasSnapshot) {
    throw ConfigError("accept-rate needs backend = alias_snapshot");
  }
  if (c.algorithm != Algorithm::kExp3Fixed) {
    throw ConfigError("accept-rate runs fixed-horizon EXP3 only");
  }
  AcceptReport report;
  report.in_regime = in_acceptance_regime(c.arms, c.horizon);
  const std::size_t period = c.rebuild_period ? c.rebuild_period : c.arms;

  std::vector<std::vector<AcceptBlockRow>> per_seed(c.seeds.size());
  parallel_for(c.seeds.size(), c.threads, [&](std::size_t i) {
    const std::uint64_t seed = c.seeds[i];
    auto env = make_environment(c, seed);
    Exp3Engine engine(c.arms, c.horizon, c.backend, seed,
                      {c.rebuild_period, c.work_budget});
    AcceptBlockRow block{seed, 0, 0, 0.0, 0};
    std::uint64_t block_attempts = 0;
    auto flush = [&] {
      if (block.rounds == 0) return;
      block.mean_attempts = static_cast<double>(block_attempts) /
                            static_cast<double>(block.rounds);
      per_seed[i].push_back(block);
      block = AcceptBlockRow{seed, block.block + 1, 0, 0.0, 0};
      block_attempts = 0;
    };
    for (std::size_t t = 1; t <= c.horizon; ++t) {
      const Selection s = engine.select_arm();
      engine.update(s.arm, env->observe(t, s.arm));
      block_attempts += s.attempts;
      block.max_attempts = std::max(block.max_attempts, s.attempts);
      ++block.rounds;
      if (t % period == 0) flush();
    }
    flush();
  });

  double attempts = 0.0;
  double rounds = 0.0;
  for (auto& rows : per_seed) {
    for (const AcceptBlockRow& r : rows) {
      attempts += r.mean_attempts * static_cast<double>(r.rounds);
      rounds += static_cast<double>(r.rounds);
      report.worst_block_mean = std::max(report.worst_block_mean,
                                         r.mean_attempts);
    }
    report.rows.insert(report.rows.end(), rows.begin(), rows.end());
  }
  report.global_mean = attempts / rounds;
  return report;
}

void write_accept_csv(const ExperimentConfig& c, const AcceptReport& report,
                      std::ostream& out) {
  const std::string hash = config_hash(c);
  const std::string regime = report.in_regime ? "ok" : "below_2KlnK";
  out << "config_hash,K,T,seed,block,rounds,mean_attempts,max_attempts,"
         "regime\n";
  for (const AcceptBlockRow& r : report.rows) {
    out << hash << ',' << c.arms << ',' << c.horizon << ',' << r.seed << ','
        << r.block << ',' << r.rounds << ',' << format_double(r.mean_attempts)
        << ',' << r.max_attempts << ',' << regime << '\n';
  }
  out << hash << ',' << c.arms << ',' << c.horizon << ",all,all,NA,"
      << format_double(report.global_mean) << ",NA," << regime << '\n';
}

// -- table1 -------------------------------------------------------------------

std::vector<Table1Row> run_table1(const Table1Options& o) {
  struct Entry {
    Algorithm algorithm;
    Backend backend;
  };
  const Entry entries[] = {
      {Algorithm::kExp3Fixed, Backend::kNaive},
      {Algorithm::kExp3Fixed, Backend::kSegTree},
      {Algorithm::kExp3Fixed, Backend::kAliasSnapshot},
      {Algorithm::kExp3Fixed, Backend::kAliasDoubleBuffered},
      {Algorithm::kDoubling, Backend::kAliasSnapshot},
      {Algorithm::kFtrl, Backend::kNaive},
      {Algorithm::kDelayed, Backend::kSegTree},
      {Algorithm::kDelayed, Backend::kAliasSnapshot},
  };
  std::vector<Table1Row> rows;
  for (const Entry& e : entries) {
    ExperimentConfig c;
    c.algorithm = e.algorithm;
    c.backend = e.backend;
    c.seeds = o.seeds;
    c.threads = o.threads;

    c.arms = o.timing_arms;
    const std::size_t warmup = std::min<std::size_t>(o.timing_rounds / 10, 10000);
    auto env = make_environment(c, o.seeds.front());
    auto player =
        make_player(c, c.arms, o.timing_rounds + warmup, o.seeds.front());
    const BenchRow timing = bench_player(*player, *env, o.timing_rounds);

    c.arms = o.regret_arms;
    c.horizon = o.regret_horizon;
    c.checkpoints = 1;
    const RegretReport regret = run_regret(c);

    Table1Row row{e.algorithm, e.backend};
    row.median_ns = timing.median_ns;
    row.coefficient = regret.summary.coefficient;
    row.coefficient_std_error = regret.summary.coefficient_std_error;
    row.bound_coefficient = regret.summary.bound /
                            regret_scale(o.regret_arms, o.regret_horizon);
    rows.push_back(row);
  }
  return rows;
}

void write_table1(const std::vector<Table1Row>& rows, const Table1Options& o,
                  std::ostream& out) {
  out << "algorithm    backend                 ns/round@K=" << std::left
      << std::setw(8) << o.timing_arms << " regret coef (K=" << o.regret_arms
      << ", T=" << o.regret_horizon << ")   bound coef\n";
  out << std::string(96, '-') << '\n';
  for (const Table1Row& r : rows) {
    std::ostringstream coef;
    coef << std::fixed << std::setprecision(3) << r.coefficient << " +- "
         << r.coefficient_std_error;
    std::ostringstream bound;
    bound << std::fixed << std::setprecision(3) << r.bound_coefficient;
    std::ostringstream ns;
    ns << std::fixed << std::setprecision(0) << r.median_ns;
    out << std::left << std::setw(13) << algorithm_name(r.algorithm)
        << std::setw(24) << backend_name(r.backend) << std::setw(20)
        << ns.str() << std::setw(28) << coef.str() << bound.str() << '\n';
  }
}

std::string machine_info() {
  std::ostringstream os;
#if defined(__clang__)
  os << "clang " << __clang_major__ << '.' << __clang_minor__;
#elif defined(__GNUC__)
  os << "gcc " << __GNUC__ << '.' << __GNUC_MINOR__;
#else
  os << "unknown compiler";
#endif
  os << ", " << std::thread::hardware_concurrency() << " hardware threads";
#ifdef NDEBUG
  os << ", optimized build";
#else
  os << ", debug build";
#endif
  return os.str();
}

}  // namespace fastexp3
