#pragma once

// Error-controlled real arithmetic: compensated summation, adaptive
// Gauss-Kronrod quadrature with an error bound, and shared constants.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <exception>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "mertenslab/error.hpp"

namespace mertenslab {

struct Constants {
  // Euler-Mascheroni constant, correctly rounded to double.
  static constexpr double gamma = 0.57721566490153286060651209008240243;
  static constexpr double pi = std::numbers::pi;
};

/// Second-order Kahan-Babuska (Klein) accumulator.
///
/// Keeps a principal sum and two levels of compensation; the first level
/// captures the rounding error of each addition, the second the rounding
/// error of accumulating the first. The result of a fixed sequence of
/// add() calls is fully deterministic.
class CompensatedAccumulator {
 public:
  CompensatedAccumulator() = default;
  explicit CompensatedAccumulator(double initial) : sum_(initial) {}

  void add(double value) noexcept {
    double t = sum_ + value;
    double c = std::abs(sum_) >= std::abs(value) ? (sum_ - t) + value : (value - t) + sum_;
    sum_ = t;
    t = first_ + c;
    double cc = std::abs(first_) >= std::abs(c) ? (first_ - t) + c : (c - t) + first_;
    first_ = t;
    second_ += cc;
  }

  CompensatedAccumulator& operator+=(double value) noexcept {
    add(value);
    return *this;
  }

  // Folds another accumulator in; merging in a fixed order is deterministic.
  void merge(const CompensatedAccumulator& other) noexcept {
    add(other.sum_);
    add(other.first_);
    add(other.second_);
  }

  double principal() const noexcept { return sum_; }
  double compensation() const noexcept { return first_ + second_; }
  double total() const noexcept { return sum_ + (first_ + second_); }

 private:
  double sum_ = 0.0;
  double first_ = 0.0;
  double second_ = 0.0;
};

double comp_sum(std::span<const double> values) noexcept;

/// A computed value together with a bound on its truncation/quadrature error.
struct ValueWithError {
  double value = 0.0;
  double error_bound = 0.0;

  bool contains(double exact) const noexcept { return std::abs(exact - value) <= error_bound; }
  double lower() const noexcept { return value - error_bound; }
  double upper() const noexcept { return value + error_bound; }
};

inline ValueWithError operator+(ValueWithError a, ValueWithError b) noexcept {
  return {a.value + b.value, a.error_bound + b.error_bound};
}
inline ValueWithError operator-(ValueWithError a, ValueWithError b) noexcept {
  return {a.value - b.value, a.error_bound + b.error_bound};
}
inline ValueWithError operator-(ValueWithError a) noexcept { return {-a.value, a.error_bound}; }
inline ValueWithError operator*(double k, ValueWithError a) noexcept {
  return {k * a.value, std::abs(k) * a.error_bound};
}

/// log(log x). Throws DomainError for x <= 1.
double log_log(double x);

struct QuadratureOptions {
  // Maximum number of subintervals examined before giving up.
  std::size_t max_intervals = 1u << 16;
};

namespace detail {

struct KronrodResult {
  double kronrod;
  double gauss;
  double abs_kronrod;
};

inline constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
// Weights of the embedded 7-point Gauss rule on the odd Kronrod nodes (1, 3, 5, 7).
inline constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <class F>
double checked_eval(F& f, double t) {
  const double v = f(t);
  if (!std::isfinite(v)) {
    throw DomainError("integrand is not finite at t = " + std::to_string(t));
  }
  return v;
}

template <class F>
KronrodResult gauss_kronrod15(F& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = checked_eval(f, center);
  double kronrod = fc * kKronrodWeights[7];
  double gauss = fc * kGaussWeights[3];
  double abs_kronrod = std::abs(kronrod);
  for (std::size_t i = 0; i < 7; ++i) {
    const double dx = half * kKronrodNodes[i];
    const double f1 = checked_eval(f, center - dx);
    const double f2 = checked_eval(f, center + dx);
    kronrod += kKronrodWeights[i] * (f1 + f2);
    abs_kronrod += kKronrodWeights[i] * (std::abs(f1) + std::abs(f2));
    if (i % 2 == 1) gauss += kGaussWeights[i / 2] * (f1 + f2);
  }
  return {kronrod * half, gauss * half, abs_kronrod * std::abs(half)};
}

}  // namespace detail

/// Integral of f over [a, b] by adaptive bisection with the 7/15-point
/// Gauss-Kronrod pair. Each subinterval must meet a tolerance proportional
/// to its length; the per-interval error estimate is |K15 - G7| plus a
/// rounding floor of 50 eps times the integral of |f|. The returned
/// error_bound is the sum of those estimates, so it can exceed a tol that
/// lies below the rounding floor.
///
/// a == b yields {0, 0}. Throws InputError if a > b or tol <= 0,
/// DomainError on a non-finite integrand value, and BudgetError (carrying
/// the bound reached so far) once opts.max_intervals is exhausted.
template <class F>
ValueWithError adaptive_integral(F&& f, double a, double b, double tol,
                                 const QuadratureOptions& opts = {}) {
  if (!(a <= b)) throw InputError("adaptive_integral: need a <= b");
  if (!(tol > 0.0)) throw InputError("adaptive_integral: need tol > 0");
  if (a == b) return {0.0, 0.0};

  constexpr double kRoundingFloor = 50.0 * std::numeric_limits<double>::epsilon();
  const double length = b - a;

  CompensatedAccumulator value;
  double error = 0.0;
  // Depth-first, left interval first: accepted pieces arrive in ascending order.
  std::vector<std::pair<double, double>> pending{{a, b}};
  std::size_t examined = 0;
  while (!pending.empty()) {
    auto [lo, hi] = pending.back();
    pending.pop_back();
    const auto r = detail::gauss_kronrod15(f, lo, hi);
    const double nested = std::abs(r.kronrod - r.gauss);
    // The rounding floor is additive over subintervals, so splitting cannot
    // shrink it; only the nested-rule difference drives refinement.
    const double estimate = nested + kRoundingFloor * r.abs_kronrod;
    const double mid = 0.5 * (lo + hi);
    const bool unsplittable = !(lo < mid && mid < hi);
    if (nested <= tol * (hi - lo) / length || unsplittable) {
      value.add(r.kronrod);
      error += estimate;
    } else {
      if (++examined >= opts.max_intervals) {
        double achieved = error + estimate;
        for (const auto& [plo, phi] : pending) {
          const auto pr = detail::gauss_kronrod15(f, plo, phi);
          achieved += std::abs(pr.kronrod - pr.gauss);
        }
        throw BudgetError("adaptive_integral: subdivision budget exhausted before reaching tolerance",
                          achieved);
      }
      pending.emplace_back(mid, hi);
      pending.emplace_back(lo, mid);
    }
  }
  return {value.total(), error};
}

/// Runs fn(chunk, begin, end) over contiguous chunks of [0, n) on up to
/// `workers` threads. Chunk boundaries depend only on n and the chunk count,
/// so per-chunk results merged in chunk order are independent of scheduling.
/// An exception from any chunk is rethrown (lowest chunk first) after all
/// threads have joined.
template <class Fn>
void parallel_chunks(std::size_t n, std::size_t chunks, unsigned workers, Fn&& fn) {
  chunks = std::max<std::size_t>(1, std::min(chunks, n));
  auto bounds = [&](std::size_t c) { return std::pair{n * c / chunks, n * (c + 1) / chunks}; };
  if (workers <= 1 || chunks == 1) {
    for (std::size_t c = 0; c < chunks; ++c) {
      auto [b, e] = bounds(c);
      fn(c, b, e);
    }
    return;
  }
  std::vector<std::exception_ptr> failures(chunks);
  std::vector<std::thread> pool;
  const unsigned used = static_cast<unsigned>(std::min<std::size_t>(workers, chunks));
  for (unsigned w = 0; w < used; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t c = w; c < chunks; c += used) {
        try {
          auto [b, e] = bounds(c);
          fn(c, b, e);
        } catch (...) {
          failures[c] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
}

}  // namespace mertenslab
