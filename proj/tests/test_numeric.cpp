#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "mertenslab/numeric.hpp"
#include "oracles.hpp"

using namespace mertenslab;

TEST_CASE("comp_sum of a single value") {
  const std::vector<double> v{1.0};
  CHECK(comp_sum(v) == 1.0);
}

TEST_CASE("comp_sum of ten million copies of 0.1") {
  const std::vector<double> v(10'000'000, 0.1);
  CHECK(std::abs(comp_sum(v) - 1e6) <= 1e-6);
}

TEST_CASE("accumulator recovers cancelled low-order terms") {
  CompensatedAccumulator acc;
  acc.add(1e16);
  acc.add(1.0);
  acc.add(-1e16);
  CHECK(acc.total() == 1.0);
  CHECK(acc.principal() + acc.compensation() == acc.total());

  CompensatedAccumulator a, b;
  for (int i = 0; i < 1000; ++i) (i < 500 ? a : b) += 0.1;
  a.merge(b);
  CHECK(std::abs(a.total() - 100.0) < 1e-13);
}

TEST_CASE("reciprocal prime sum is order independent") {
  auto primes = oracle::plain_sieve(1'000'000);
  std::vector<double> v;
  for (auto p : primes) v.push_back(1.0 / static_cast<double>(p));
  const double up = comp_sum(v);
  std::reverse(v.begin(), v.end());
  const double down = comp_sum(v);
  CHECK(std::abs(up - down) <= 1e-13 * std::abs(up));
}

TEST_CASE("comp_sum forward and reverse agree on a moderately conditioned stream") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(1'000'000);
  for (auto& x : v) x = std::pow(10.0, 6.0 * u(rng));
  const double up = comp_sum(v);
  std::reverse(v.begin(), v.end());
  CHECK(std::abs(up - comp_sum(v)) <= 1e-13 * up);
}

TEST_CASE("adaptive_integral closed forms") {
  const double tol = 1e-10;
  auto r1 = adaptive_integral([](double t) { return t * t; }, 0.0, 1.0, tol);
  CHECK(std::abs(r1.value - 1.0 / 3.0) <= tol);
  auto r2 = adaptive_integral([](double t) { return 1.0 / t; }, 1.0, std::numbers::e, tol);
  CHECK(std::abs(r2.value - 1.0) <= tol);
  auto r3 = adaptive_integral([](double t) { return 1.0 / (t * std::log(t)); }, 2.0, 10.0, tol);
  CHECK(std::abs(r3.value - 1.2005454) < 1e-7);
  CHECK(std::abs(r3.value - (std::log(std::log(10.0)) - std::log(std::log(2.0)))) <= tol);
}

TEST_CASE("adaptive_integral error bound dominates the true error") {
  struct Case {
    std::function<double(double)> f;
    double a, b, exact;
  };
  const double pi = std::numbers::pi;
  const std::vector<Case> cases = {
      {[](double t) { return t * t * t; }, 0, 2, 4.0},
      {[](double t) { return std::exp(t); }, 0, 1, std::numbers::e - 1},
      {[](double t) { return std::sin(t); }, 0, pi, 2.0},
      {[](double t) { return std::cos(t); }, 0, pi / 2, 1.0},
      {[](double t) { return 1.0 / (1 + t * t); }, 0, 1, pi / 4},
      {[](double t) { return std::sqrt(t); }, 0, 1, 2.0 / 3.0},
      {[](double t) { return std::log(t); }, 1, std::numbers::e, 1.0},
      {[](double t) { return 1.0 / (t * t); }, 1, 1000, 1.0 - 1e-3},
      {[](double t) { return std::exp(-t * t); }, 0, 5, std::sqrt(pi) / 2 * std::erf(5.0)},
      {[](double t) { return std::abs(t - 0.3); }, 0, 1, 0.045 + 0.245},
  };
  for (const auto& c : cases) {
    for (double tol : {1e-4, 1e-8, 1e-12}) {
      const auto r = adaptive_integral(c.f, c.a, c.b, tol);
      CHECK(std::abs(r.value - c.exact) <= r.error_bound);
    }
  }
}

TEST_CASE("adaptive_integral edge cases and errors") {
  auto one = [](double) { return 1.0; };
  const auto z = adaptive_integral(one, 3.0, 3.0, 1e-9);
  CHECK(z.value == 0.0);
  CHECK(z.error_bound == 0.0);
  CHECK_THROWS_AS(adaptive_integral(one, 2.0, 1.0, 1e-9), InputError);
  CHECK_THROWS_AS(adaptive_integral(one, 0.0, 1.0, 0.0), InputError);
  CHECK_THROWS_AS(adaptive_integral([](double t) { return 1.0 / (t - 0.5); }, 0.0, 1.0, 1e-9), DomainError);

  QuadratureOptions small;
  small.max_intervals = 4;
  try {
    adaptive_integral([](double t) { return std::sin(1.0 / (t + 1e-3)); }, 0.0, 1.0, 1e-12, small);
    FAIL("expected BudgetError");
  } catch (const BudgetError& e) {
    CHECK(e.achieved_bound() > 1e-12);
  }
}

TEST_CASE("log_log") {
  CHECK(std::abs(log_log(std::numbers::e)) < 1e-15);
  CHECK(std::abs(log_log(std::exp(std::numbers::e)) - 1.0) < 1e-15);
  CHECK(std::abs(log_log(10.0) - 0.8340324) < 1e-7);
  CHECK_THROWS_AS(log_log(1.0), DomainError);
  CHECK_THROWS_AS(log_log(0.5), DomainError);
}

TEST_CASE("ValueWithError arithmetic") {
  const ValueWithError a{1.0, 0.1}, b{2.0, 0.2};
  CHECK((a + b).value == 3.0);
  CHECK((a - b).error_bound == doctest::Approx(0.3));
  CHECK((-2.0 * a).error_bound == doctest::Approx(0.2));
  CHECK(a.contains(1.05));
  CHECK_FALSE(a.contains(1.2));
}

TEST_CASE("parallel_chunks covers every index once and rethrows") {
  std::vector<std::atomic<int>> hits(1000);
  parallel_chunks(hits.size(), 37, 4, [&](std::size_t, std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) hits[i]++;
  });
  CHECK(std::all_of(hits.begin(), hits.end(), [](const auto& h) { return h == 1; }));

  CHECK_THROWS_AS(parallel_chunks(100, 10, 3,
                                  [](std::size_t c, std::size_t, std::size_t) {
                                    if (c == 7) throw DomainError("boom");
                                  }),
                  DomainError);
}
