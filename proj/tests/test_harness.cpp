#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

#include "fastexp3/harness.hpp"

using namespace fastexp3;

namespace {

std::filesystem::path scratch_dir() {
  const auto dir = std::filesystem::temp_directory_path() /
                   ("fastexp3_harness_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  return dir;
}

ExperimentConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

std::string regret_csv(const ExperimentConfig& c) {
  std::ostringstream out;
  write_regret_csv(c, run_regret(c), out);
  return out.str();
}

int run_cli(const std::string& args) {
  const std::string cmd =
      std::string(FASTEXP3_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

// -- config -------------------------------------------------------------------

TEST_CASE("config files set every field they mention") {
  const auto c = parse(
      "# comment\n"
      "algorithm = delayed\n"
      "backend = alias_double_buffered\n"
      "k = 16   # trailing comment\n"
      "t = 1000\n"
      "env = worst\n"
      "seeds = 1-3,7\n"
      "rebuild_period = 8\n"
      "work_budget = 2\n"
      "timing = true\n"
      "bench_k = 256,1024\n");
  CHECK(c.algorithm == Algorithm::kDelayed);
  CHECK(c.backend == Backend::kAliasDoubleBuffered);
  CHECK(c.arms == 16);
  CHECK(c.horizon == 1000);
  CHECK(c.env == EnvKind::kWorst);
  CHECK(c.seeds == std::vector<std::uint64_t>{1, 2, 3, 7});
  CHECK(c.rebuild_period == 8);
  CHECK(c.work_budget == 2);
  CHECK(c.timing);
  CHECK(c.bench_arms == std::vector<std::size_t>{256, 1024});
  CHECK_NOTHROW(validate(c));
}

TEST_CASE("config errors are ConfigError") {
  CHECK_THROWS_AS(parse("colour = blue\n"), ConfigError);
  CHECK_THROWS_AS(parse("k = ten\n"), ConfigError);
  CHECK_THROWS_AS(parse("k 10\n"), ConfigError);
  CHECK_THROWS_AS(parse("timing = maybe\n"), ConfigError);
  CHECK_THROWS_AS(parse("backend = fenwick\n"), ConfigError);
  ExperimentConfig c;
  c.arms = 1;
  CHECK_THROWS_AS(validate(c), ConfigError);
  c = ExperimentConfig{};
  c.seeds.clear();
  CHECK_THROWS_AS(validate(c), ConfigError);
  c = ExperimentConfig{};
  c.env = EnvKind::kReplay;
  c.env_path = "/nonexistent/losses.csv";
  CHECK_THROWS_AS(validate(c), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/run.cfg"), std::runtime_error);
}

TEST_CASE("config hash depends on content, not formatting") {
  const auto a = parse("k = 10\nt = 500\n");
  const auto b = parse("t=500\n\n  k   =   10 # same\n");
  const auto c = parse("k = 11\nt = 500\n");
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a) != config_hash(c));
  CHECK(config_hash(a).size() == 16);
  // Output destination does not affect results.
  auto d = a;
  d.out = "elsewhere.csv";
  CHECK(config_hash(a) == config_hash(d));
}

TEST_CASE("algorithm and environment names round-trip") {
  for (Algorithm a : {Algorithm::kExp3Fixed, Algorithm::kDoubling,
                      Algorithm::kFtrl, Algorithm::kDelayed, Algorithm::kExp4}) {
    CHECK(parse_algorithm(algorithm_name(a)) == a);
  }
  for (EnvKind e : {EnvKind::kStochastic, EnvKind::kZero, EnvKind::kWorst,
                    EnvKind::kAdaptive, EnvKind::kReplay}) {
    CHECK(parse_env(env_name(e)) == e);
  }
}

// -- regret -------------------------------------------------------------------

TEST_CASE("regret CSV is byte-identical across runs and thread counts") {
  auto c = parse("k = 6\nt = 3000\nseeds = 1-6\ncheckpoints = 5\n");
  c.threads = 1;
  const std::string one = regret_csv(c);
  c.threads = 4;
  const std::string four = regret_csv(c);
  CHECK(one == four);
  CHECK(one == regret_csv(c));
  CHECK(one.rfind("config_hash,algorithm,backend,K,T,seed,t,cum_pseudo_regret,"
                  "coefficient,mean_round_ns,mean_attempts,rebuild_count\n",
                  0) == 0);
  CHECK(one.find(",mean,") != std::string::npos);
  CHECK(one.find(",stderr,") != std::string::npos);
  CHECK(one.find(",bound,") != std::string::npos);
}

TEST_CASE("checkpoint rows are strictly increasing and end at T") {
  auto c = parse("k = 4\nt = 1001\nseeds = 3\ncheckpoints = 7\n");
  const auto rows = run_regret_seed(c, 3);
  REQUIRE(!rows.empty());
  for (std::size_t i = 1; i < rows.size(); ++i) {
    CHECK(rows[i].round > rows[i - 1].round);
  }
  CHECK(rows.back().round == 1001);
  CHECK(std::isnan(rows.back().mean_round_ns));
  c.timing = true;
  CHECK(run_regret_seed(c, 3).back().mean_round_ns > 0.0);
}

TEST_CASE("zero-loss environment gives zero regret for every algorithm") {
  for (const char* algo : {"exp3-fixed", "doubling", "ftrl", "delayed", "exp4"}) {
    auto c = parse(std::string("algorithm = ") + algo +
                   "\nenv = zero\nk = 5\nt = 2000\nseeds = 1-3\n");
    const auto report = run_regret(c);
    CHECK(report.summary.mean == 0.0);
    for (double r : report.final_regret) CHECK(r == 0.0);
  }
}

TEST_CASE("regret bounds and scale") {
  CHECK(regret_scale(10, 50000) == doctest::Approx(std::sqrt(50000 * 10 * std::log(10.0))));
  CHECK(regret_bound(Algorithm::kExp3Fixed, 10, 50000) ==
        doctest::Approx(1517.3).epsilon(1e-4));
  CHECK(regret_bound(Algorithm::kFtrl, 10, 50000) ==
        doctest::Approx(2145.9).epsilon(1e-4));
  CHECK(regret_bound(Algorithm::kDelayed, 10, 50000) ==
        doctest::Approx(2161.1).epsilon(1e-4));
  CHECK(regret_bound(Algorithm::kDoubling, 10, 50000) ==
        doctest::Approx(5182.5).epsilon(1e-4));
  CHECK(std::isnan(regret_bound(Algorithm::kExp4, 10, 50000)));
}

TEST_CASE("environment and player streams are separate") {
  CHECK(environment_seed(1) != 1);
  CHECK(environment_seed(1) != environment_seed(2));
  ExperimentConfig c;
  c.arms = 4;
  auto a = make_environment(c, 5);
  auto b = make_environment(c, 5);
  CHECK(a->full_loss_vector(10) == b->full_loss_vector(10));
}

// -- bench and accept-rate ----------------------------------------------------

TEST_CASE("bench makes no environment calls inside the timed loop") {
  auto c = parse("bench_k = 64,256\nbench_rounds = 3000\n");
  const auto rows = run_bench(c);
  CHECK(rows.size() == 2 * 4);
  for (const auto& r : rows) {
    CHECK(r.env_calls_timed == 0);
    CHECK(r.rounds == 3000);
    CHECK(r.median_ns > 0.0);
    CHECK(r.p99_ns >= r.median_ns);
    if (!is_alias(r.backend)) CHECK(r.mean_attempts == 1.0);
  }
  std::ostringstream out;
  write_bench_csv(c, rows, out);
  CHECK(out.str().rfind("config_hash,backend,K,rounds,median_ns,p99_ns,"
                        "mean_attempts,env_calls_timed\n",
                        0) == 0);
}

TEST_CASE("accept-rate needs the snapshot backend and EXP3") {
  auto c = parse("backend = segtree\nk = 10\nt = 470\n");
  CHECK_THROWS_AS(run_accept_rate(c), ConfigError);
  c = parse("backend = alias_snapshot\nalgorithm = ftrl\nk = 10\nt = 470\n");
  CHECK_THROWS_AS(run_accept_rate(c), ConfigError);
}

TEST_CASE("accept-rate reports per-block means") {
  auto c = parse("backend = alias_snapshot\nk = 10\nt = 470\nseeds = 1-4\nenv = worst\n");
  const auto report = run_accept_rate(c);
  CHECK(report.in_regime);
  CHECK(report.rows.size() == 4 * 47);
  CHECK(report.global_mean >= 1.0);
  CHECK(report.worst_block_mean >= report.global_mean);
  CHECK(report.worst_block_mean <= std::exp(2.0));
  std::ostringstream out;
  write_accept_csv(c, report, out);
  CHECK(out.str().rfind("config_hash,K,T,seed,block,rounds,mean_attempts,"
                        "max_attempts,regime\n",
                        0) == 0);
  CHECK(out.str().find(",all,all,") != std::string::npos);

  c.horizon = 20;
  CHECK_FALSE(run_accept_rate(c).in_regime);
}

// -- CLI ----------------------------------------------------------------------

TEST_CASE("CLI exit codes") {
  const auto dir = scratch_dir();
  const auto out = dir / "regret.csv";
  CHECK(run_cli("regret --k 4 --t 500 --seed 2 --out " + out.string()) == 0);
  CHECK(std::filesystem::file_size(out) > 0);
  CHECK(run_cli("regret --k 1") == 2);
  CHECK(run_cli("regret --backend fenwick") == 2);
  CHECK(run_cli("regret --set nonsense=1") == 2);
  CHECK(run_cli("regret --no-such-flag") == 2);
  CHECK(run_cli("regret --config /nonexistent/run.cfg") == 1);
  CHECK(run_cli("regret --k 4 --t 100 --seed 1 --out /nonexistent/dir/x.csv") == 1);
  CHECK(run_cli("accept-rate --backend segtree --k 10 --t 470") == 2);
  CHECK(run_cli("regret --env replay --set env_path=/nonexistent.csv") == 2);
  std::filesystem::remove_all(dir);
}

TEST_CASE("CLI: config file, overrides and export-env round trip") {
  const auto dir = scratch_dir();
  const auto cfg = dir / "run.cfg";
  {
    std::ofstream f(cfg);
    f << "k = 5\nt = 400\nseeds = 1-2\nbackend = naive\n";
  }
  const auto a = dir / "a.csv";
  const auto b = dir / "b.csv";
  CHECK(run_cli("regret --config " + cfg.string() + " --out " + a.string()) == 0);
  CHECK(run_cli("regret --config " + cfg.string() + " --out " + b.string()) == 0);
  CHECK(read_file(a) == read_file(b));
  CHECK(read_file(a).find(",naive,5,400,") != std::string::npos);
  // Explicit flags win over the config file.
  CHECK(run_cli("regret --config " + cfg.string() + " --backend segtree --out " +
                b.string()) == 0);
  CHECK(read_file(b).find(",segtree,5,400,") != std::string::npos);

  const auto losses = dir / "losses.csv";
  CHECK(run_cli("export-env --k 5 --t 400 --seed 1 --out " + losses.string()) == 0);
  const auto replayed = dir / "replayed.csv";
  CHECK(run_cli("regret --k 5 --t 400 --seed 1 --env replay --set env_path=" +
                losses.string() + " --out " + replayed.string()) == 0);
  const auto direct = dir / "direct.csv";
  CHECK(run_cli("regret --k 5 --t 400 --seed 1 --out " + direct.string()) == 0);
  // Same rows apart from the config hash in the first column.
  auto strip_hash = [](const std::string& csv) {
    std::istringstream in(csv);
    std::string line;
    std::string out;
    while (std::getline(in, line)) out += line.substr(line.find(',')) + "\n";
    return out;
  };
  CHECK(strip_hash(read_file(replayed)) == strip_hash(read_file(direct)));
  std::filesystem::remove_all(dir);
}
