#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "fastexp3/core.hpp"

using namespace fastexp3;

// Expected values were evaluated with 50-digit arithmetic by
// tests/oracles/derive_values.py and frozen here.

TEST_CASE("fixed_eta matches the high-precision oracle") {
  CHECK(fixed_eta(10, 20000).value() ==
        doctest::Approx(0.0047985259121880812076).epsilon(1e-14));
  CHECK(fixed_eta(2, 6).value() ==
        doctest::Approx(0.33988899672293632259).epsilon(1e-14));
  CHECK(fixed_eta(8, 100).value() ==
        doctest::Approx(0.072101344330044150853).epsilon(1e-14));
  // Ten times the horizon shrinks eta by exactly sqrt(10).
  CHECK(fixed_eta(10, 200000).value() ==
        doctest::Approx(0.0015174271293851463509).epsilon(1e-14));
  CHECK(fixed_eta(10, 20000).value() / fixed_eta(10, 200000).value() ==
        doctest::Approx(std::sqrt(10.0)).epsilon(1e-14));
}

TEST_CASE("anytime_eta matches the oracle and halves when t quadruples") {
  CHECK(anytime_eta(2, 1).value() ==
        doctest::Approx(0.58870501125773734551).epsilon(1e-14));
  CHECK(anytime_eta(10, 100).value() ==
        doctest::Approx(0.047985259121880812076).epsilon(1e-14));
  CHECK(anytime_eta(10, 10).value() ==
        doctest::Approx(0.15174271293851463509).epsilon(1e-14));
  for (std::size_t k : {2u, 3u, 10u, 1000u}) {
    for (std::size_t s : {1u, 7u, 250u}) {
      CHECK(anytime_eta(k, 4 * s).value() ==
            doctest::Approx(anytime_eta(k, s).value() / 2).epsilon(1e-15));
    }
  }
}

TEST_CASE("anytime_eta is strictly decreasing in t, and in K from K = 3") {
  for (std::size_t k = 2; k < 40; ++k) {
    for (std::size_t t = 1; t < 300; ++t) {
      CHECK(anytime_eta(k, t + 1).value() < anytime_eta(k, t).value());
      // ln K / K peaks at K = e, so K = 2 -> 3 goes up.
      if (k >= 3) {
        CHECK(anytime_eta(k + 1, t).value() < anytime_eta(k, t).value());
      }
    }
  }
  CHECK(anytime_eta(3, 10).value() > anytime_eta(2, 10).value());
}

TEST_CASE("learning-rate schedules reject bad arguments") {
  CHECK_THROWS_AS(fixed_eta(1, 10), std::invalid_argument);
  CHECK_THROWS_AS(fixed_eta(0, 10), std::invalid_argument);
  CHECK_THROWS_AS(fixed_eta(2, 0), std::invalid_argument);
  CHECK_THROWS_AS(anytime_eta(2, 0), std::invalid_argument);
  CHECK_THROWS_AS(anytime_eta(1, 5), std::invalid_argument);
  CHECK_THROWS_AS((void)LearningRate(0.0), std::invalid_argument);
  CHECK_THROWS_AS((void)LearningRate(-1.0), std::invalid_argument);
  CHECK_THROWS_AS((void)LearningRate(INFINITY), std::invalid_argument);
  CHECK_THROWS_AS((void)LearningRate(NAN), std::invalid_argument);
}

TEST_CASE("block_end examples") {
  CHECK(block_end(1, 10) == 10);
  CHECK(block_end(10, 10) == 10);
  CHECK(block_end(11, 10) == 20);
}

TEST_CASE("block_end stays within the block and is constant on it") {
  for (std::size_t k = 2; k <= 17; ++k) {
    for (std::size_t t = 1; t <= 20 * k; ++t) {
      const std::size_t end = block_end(t, k);
      CHECK(end % k == 0);
      CHECK(end >= t);
      CHECK(end - t <= k - 1);
      const std::size_t b = (t - 1) / k + 1;
      CHECK(end == block_end((b - 1) * k + 1, k));
      CHECK(end == block_end(b * k, k));
    }
  }
}

TEST_CASE("ipw_estimate examples and errors") {
  CHECK(ipw_estimate(Loss(0.0), 0.3) == 0.0);
  CHECK(ipw_estimate(Loss(1.0), 0.25) == 4.0);
  CHECK(ipw_estimate(Loss(0.5), 0.1) == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(ipw_estimate(Loss(1.0), 1.0) == 1.0);
  CHECK_THROWS_AS(ipw_estimate(Loss(1.0), 0.0), std::invalid_argument);
  CHECK_THROWS_AS(ipw_estimate(Loss(1.0), -0.1), std::invalid_argument);
  CHECK_THROWS_AS(ipw_estimate(Loss(1.0), 1.5), std::invalid_argument);
  CHECK_THROWS_AS(ipw_estimate(Loss(1.0), NAN), std::invalid_argument);
}

TEST_CASE("ipw_estimate stays within [0, 1/p]") {
  UniformSource rng(99);
  for (int i = 0; i < 10000; ++i) {
    const double loss = rng.next();
    const double p = 1.0 - rng.next();  // (0, 1]
    const double est = ipw_estimate(Loss(loss), p);
    CHECK(est >= 0.0);
    CHECK(est <= 1.0 / p);
  }
}

TEST_CASE("Loss rejects values outside [0, 1] instead of clamping") {
  CHECK(Loss(0.0).value() == 0.0);
  CHECK(Loss(1.0).value() == 1.0);
  CHECK_THROWS_AS(Loss(-1e-300), std::invalid_argument);
  CHECK_THROWS_AS(Loss(1.0000001), std::invalid_argument);
  CHECK_THROWS_AS(Loss(NAN), std::invalid_argument);
}

TEST_CASE("UniformSource: equal seeds give equal first million draws") {
  UniformSource a(12345);
  UniformSource b(12345);
  bool equal = true;
  bool in_range = true;
  for (int i = 0; i < 1'000'000; ++i) {
    const double x = a.next();
    const double y = b.next();
    equal = equal && x == y;
    in_range = in_range && x >= 0.0 && x < 1.0;
  }
  CHECK(equal);
  CHECK(in_range);
  CHECK(a.draws() == 1'000'000);
  CHECK(a.seed() == 12345);
}

TEST_CASE("UniformSource: distinct seeds diverge; mean is near 1/2") {
  UniformSource a(1);
  UniformSource b(2);
  int same = 0;
  double sum = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = a.next();
    same += x == b.next();
    sum += x;
  }
  CHECK(same == 0);
  // 5 sigma for the mean of n uniforms.
  CHECK(std::abs(sum / n - 0.5) < 5.0 * std::sqrt(1.0 / 12.0 / n));
}

TEST_CASE("derive_seed separates streams") {
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));
  CHECK(derive_seed(7, 3) == derive_seed(7, 3));
  CHECK(mix_seed(0) != 0);
}

TEST_CASE("acceptance regime: eta * K <= 1 whenever T >= ceil(2 K ln K)") {
  UniformSource rng(2024);
  for (int i = 0; i < 5000; ++i) {
    const auto k = static_cast<std::size_t>(2 + rng.next() * 5000);
    const auto min_t = static_cast<std::size_t>(
        std::ceil(2.0 * static_cast<double>(k) * std::log(static_cast<double>(k))));
    const std::size_t t = min_t + static_cast<std::size_t>(rng.next() * 1e6);
    CHECK(in_acceptance_regime(k, t));
    CHECK(fixed_eta(k, t).value() * static_cast<double>(k) <= 1.0 + 1e-15);
  }
  // The oracle's smallest in-regime horizons.
  CHECK(in_acceptance_regime(10, 47));
  CHECK_FALSE(in_acceptance_regime(10, 46));
  CHECK_FALSE(in_acceptance_regime(10, 10));
}
