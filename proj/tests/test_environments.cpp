#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>

#include <unistd.h>

#include "fastexp3/environments.hpp"
#include "fastexp3/exp3.hpp"

using namespace fastexp3;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() /
         ("fastexp3_env_" + name + "_" +
          std::to_string(std::hash<std::string>{}(name) ^ ::getpid()));
}

std::size_t load_error_row(const std::string& text) {
  std::istringstream in(text);
  try {
    parse_loss_table(in);
  } catch (const LoadError& e) {
    return e.row();
  }
  return static_cast<std::size_t>(-1);
}

}  // namespace

// -- stochastic ---------------------------------------------------------------

TEST_CASE("stochastic environment with zero means never charges a loss") {
  auto env = stochastic_env(std::vector<double>(5, 0.0), 1);
  for (std::size_t t = 1; t <= 1000; ++t) {
    for (std::size_t i = 0; i < 5; ++i) {
      CHECK(env->observe(t, ArmIndex(i)).value() == 0.0);
    }
  }
}

TEST_CASE("gap_means puts the best arm first") {
  const auto m = gap_means(10, 0.5, 0.1);
  CHECK(m.size() == 10);
  CHECK(m[0] == doctest::Approx(0.4));
  CHECK(std::all_of(m.begin() + 1, m.end(), [](double x) { return x == 0.5; }));
  CHECK(std::min_element(m.begin(), m.end()) == m.begin());
}

TEST_CASE("stochastic environment is reproducible and random-access") {
  auto a = stochastic_env(gap_means(6, 0.5, 0.1), 77);
  auto b = stochastic_env(gap_means(6, 0.5, 0.1), 77);
  auto c = stochastic_env(gap_means(6, 0.5, 0.1), 78);
  int differ = 0;
  for (std::size_t t = 500; t >= 1; --t) {
    const auto va = a->full_loss_vector(t);
    CHECK(va == b->full_loss_vector(t));
    differ += va != c->full_loss_vector(t);
    for (std::size_t i = 0; i < 6; ++i) {
      CHECK(a->observe(t, ArmIndex(i)).value() == va[i]);
    }
  }
  CHECK(differ > 0);
}

TEST_CASE("stochastic environment frequencies match the means") {
  auto env = stochastic_env({0.1, 0.5, 0.9}, 3);
  const int n = 100000;
  std::vector<double> sum(3, 0.0);
  for (int t = 1; t <= n; ++t) {
    const auto v = env->full_loss_vector(static_cast<std::size_t>(t));
    for (int i = 0; i < 3; ++i) sum[i] += v[i];
  }
  const double means[] = {0.1, 0.5, 0.9};
  for (int i = 0; i < 3; ++i) {
    const double sd = std::sqrt(means[i] * (1 - means[i]) / n);
    CHECK(std::abs(sum[i] / n - means[i]) <= 5 * sd);
  }
}

TEST_CASE("stochastic environment rejects bad means and arguments") {
  CHECK_THROWS_AS(stochastic_env({0.5, 1.5}, 1), std::invalid_argument);
  CHECK_THROWS_AS(stochastic_env({-0.1, 0.5}, 1), std::invalid_argument);
  CHECK_THROWS_AS(stochastic_env({0.5}, 1), std::invalid_argument);
  auto env = stochastic_env({0.5, 0.5}, 1);
  CHECK_THROWS_AS(env->observe(0, ArmIndex(0)), std::invalid_argument);
  CHECK_THROWS_AS(env->observe(1, ArmIndex(2)), std::invalid_argument);
}

// -- adaptive -----------------------------------------------------------------

TEST_CASE("adaptive environment: round 1 is all zeros") {
  auto env = adaptive_env(4, AdaptiveStrategy::kTargetMostPulled);
  CHECK(env->full_loss_vector(1) == std::vector<double>(4, 0.0));
}

TEST_CASE("adaptive environment targets the most pulled arm") {
  auto env = adaptive_env(3, AdaptiveStrategy::kTargetMostPulled);
  std::size_t t = 1;
  for (int i = 0; i < 10; ++i) env->observe(t++, ArmIndex(0));
  for (int i = 0; i < 2; ++i) env->observe(t++, ArmIndex(1));
  CHECK(env->full_loss_vector(t) == std::vector<double>{1, 0, 0});
}

TEST_CASE("adaptive environment breaks ties toward the lowest index") {
  auto env = adaptive_env(3, AdaptiveStrategy::kTargetMostPulled);
  env->observe(1, ArmIndex(2));
  env->observe(2, ArmIndex(1));
  CHECK(env->full_loss_vector(3) == std::vector<double>{0, 1, 0});
  env->observe(3, ArmIndex(2));
  CHECK(env->full_loss_vector(4) == std::vector<double>{0, 0, 1});
}

TEST_CASE("adaptive environment is oblivious within a round") {
  auto env = adaptive_env(5, AdaptiveStrategy::kTargetMostPulled);
  UniformSource rng(17);
  for (std::size_t t = 1; t <= 2000; ++t) {
    const auto before = env->full_loss_vector(t);
    const ArmIndex arm(static_cast<std::size_t>(rng.next() * 5));
    const Loss seen = env->observe(t, arm);
    CHECK(seen.value() == before[arm.value]);
    CHECK(env->full_loss_vector(t) == before);
  }
}

TEST_CASE("adaptive environment enforces sequential single pulls") {
  auto env = adaptive_env(2, AdaptiveStrategy::kTargetMostPulled);
  env->observe(1, ArmIndex(0));
  CHECK_THROWS_AS(env->observe(1, ArmIndex(1)), std::invalid_argument);
  CHECK_THROWS_AS(env->full_loss_vector(3), std::invalid_argument);
}

// -- replay -------------------------------------------------------------------

TEST_CASE("replay reads cells directly") {
  std::istringstream in("0,1\n1,0\n");
  auto env = parse_loss_table(in);
  CHECK(env->arms() == 2);
  CHECK(env->rounds() == 2);
  CHECK(env->observe(1, ArmIndex(0)).value() == 0.0);
  CHECK(env->observe(2, ArmIndex(1)).value() == 0.0);
  CHECK(env->observe(1, ArmIndex(1)).value() == 1.0);
  CHECK(env->full_loss_vector(2) == std::vector<double>{1, 0});
  CHECK_THROWS_AS(env->observe(3, ArmIndex(0)), std::out_of_range);
}

TEST_CASE("replay accepts fractional values and CRLF line ends") {
  std::istringstream in("0.25, 0.5 ,1e-3\r\n1,0,0.125\r\n");
  auto env = parse_loss_table(in);
  CHECK(env->arms() == 3);
  CHECK(env->full_loss_vector(1) == std::vector<double>{0.25, 0.5, 1e-3});
}

TEST_CASE("replay load errors carry the offending row") {
  CHECK(load_error_row("0,1\n1.5,0\n") == 2);
  CHECK(load_error_row("0,1\n1,0\n0,0,0\n") == 3);
  CHECK(load_error_row("0,abc\n") == 1);
  CHECK(load_error_row("0,1\n\n1,0\n") == 2);
  CHECK(load_error_row("0,-0.5\n") == 1);
  CHECK(load_error_row("0,nan\n") == 1);
  CHECK(load_error_row("0.5\n") == 1);
  CHECK(load_error_row("") == 0);
  CHECK_THROWS_AS(replay_env("/nonexistent/losses.csv"), LoadError);
}

TEST_CASE("export then replay reproduces the run exactly") {
  const std::size_t k = 4;
  const std::size_t t_max = 300;
  auto source = stochastic_env({0.2, 0.4, 0.6, 0.35}, 9);
  const auto path = temp_file("roundtrip");
  {
    std::ofstream out(path);
    write_loss_table(*source, t_max, out);
  }
  auto replay = replay_env(path);
  std::filesystem::remove(path);
  REQUIRE(replay->rounds() == t_max);
  for (std::size_t t = 1; t <= t_max; ++t) {
    CHECK(replay->full_loss_vector(t) == source->full_loss_vector(t));
  }

  for (Backend backend : kAllBackends) {
    Exp3Engine a(k, t_max, backend, 5);
    Exp3Engine b(k, t_max, backend, 5);
    const auto ra = run_episode(a, *source, t_max);
    const auto rb = run_episode(b, *replay, t_max);
    REQUIRE(ra.size() == rb.size());
    for (std::size_t i = 0; i < ra.size(); ++i) {
      CHECK(ra[i].round == rb[i].round);
      CHECK(ra[i].arm == rb[i].arm);
      CHECK(ra[i].loss == rb[i].loss);
      CHECK(ra[i].probability == rb[i].probability);
      CHECK(ra[i].attempts == rb[i].attempts);
    }
  }
}

// -- regret ledger ------------------------------------------------------------

TEST_CASE("RegretLedger accumulates exactly and subtracts the best arm") {
  RegretLedger ledger(3);
  ledger.record(std::vector<double>{1, 0, 0.5}, ArmIndex(0));
  ledger.record(std::vector<double>{0, 1, 0.5}, ArmIndex(1));
  ledger.record(std::vector<double>{0, 0, 0.5}, ArmIndex(2));
  CHECK(ledger.player_loss() == 2.5);
  CHECK(ledger.arm_losses()[0] == 1.0);
  CHECK(ledger.arm_losses()[2] == 1.5);
  CHECK(ledger.pseudo_regret() == 1.5);
}

TEST_CASE("RegretLedger equals the sum of its per-round increments") {
  UniformSource rng(21);
  const std::size_t k = 7;
  RegretLedger ledger(k);
  double player = 0.0;
  std::vector<double> arms(k, 0.0);
  for (int t = 0; t < 20000; ++t) {
    std::vector<double> v(k);
    for (double& x : v) x = rng.next();
    const ArmIndex a(static_cast<std::size_t>(rng.next() * k));
    ledger.record(v, a);
    player += v[a.value];
    for (std::size_t i = 0; i < k; ++i) arms[i] += v[i];
  }
  CHECK(ledger.player_loss() == player);
  CHECK(std::equal(arms.begin(), arms.end(), ledger.arm_losses().begin()));
  CHECK(ledger.pseudo_regret() ==
        player - *std::min_element(arms.begin(), arms.end()));
  CHECK_THROWS_AS(ledger.record(std::vector<double>(3, 0.0), ArmIndex(0)),
                  std::invalid_argument);
}

TEST_CASE("EXP3 regret on the gap environment stays below T / 10") {
  const std::size_t k = 10;
  const std::size_t t_max = 50000;
  auto env = stochastic_env(gap_means(k, 0.5, 0.1), 1234);
  Exp3Engine engine(k, t_max, Backend::kSegTree, 1);
  RegretLedger ledger(k);
  for (std::size_t t = 1; t <= t_max; ++t) {
    const Selection s = engine.select_arm();
    engine.update(s.arm, env->observe(t, s.arm));
    ledger.record(env->full_loss_vector(t), s.arm);
  }
  CHECK(ledger.pseudo_regret() <= 0.1 * static_cast<double>(t_max));
}
