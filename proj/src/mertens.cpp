#include "mertenslab/mertens.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mertenslab/error.hpp"
#include "mertenslab/numeric.hpp"

namespace mertenslab {

namespace {

void check_point_domain(double x, const PrimeCache& cache) {
  if (!(x >= 3.0)) {
    throw DomainError("Mertens remainders need x >= 3 (log log theta(x) is undefined below), got " +
                      std::to_string(x));
  }
  if (x > static_cast<double>(cache.limit())) {
    throw InsufficientCacheError("x = " + std::to_string(x) + " exceeds the prime cache limit " +
                                     std::to_string(cache.limit()),
                                 x);
  }
}

struct Sums {
  CompensatedAccumulator S;
  CompensatedAccumulator P;
  CompensatedAccumulator theta;

  void add(double p) {
    S.add(mertens_term(p));
    P.add(1.0 / p);
    theta.add(std::log(p));
  }
};

}  // namespace

double mertens_term(double p) noexcept { return std::log1p(1.0 / (p - 1.0)); }

double mertens_excess_term(double p) noexcept {
  const double u = 1.0 / p;
  if (p < 64.0) return -std::log1p(-u) - u;
  double power = u * u;
  double sum = 0.0;
  for (int k = 2; k < 40; ++k) {
    const double term = power / k;
    sum += term;
    if (term < 1e-18 * sum) break;
    power *= u;
  }
  return sum;
}

double log_log_shift(double x, double delta) noexcept {
  return std::log1p(std::log1p(delta / x) / std::log(x));
}

MertensPoint make_mertens_point(double x, double S, double P, double theta) {
  if (!(x >= 3.0)) throw DomainError("Mertens remainders need x >= 3");
  MertensPoint m;
  m.x = x;
  m.theta = theta;
  m.S = S;
  m.P = P;
  const double log_x = std::log(x);
  m.R = S - std::log(log_x) - Constants::gamma;
  m.Q = S - std::log(std::log(theta)) - Constants::gamma;
  m.A = m.Q * std::sqrt(x) * log_x;
  return m;
}

MertensPoint mertens_point(double x, const PrimeCache& cache) {
  check_point_domain(x, cache);
  Sums sums;
  const std::size_t n = cache.count_upto(x);
  for (std::size_t j = 0; j < n; ++j) sums.add(static_cast<double>(cache[j]));
  return make_mertens_point(x, sums.S.total(), sums.P.total(), sums.theta.total());
}

std::vector<MertensPoint> scan_mertens(std::span<const double> grid, const PrimeCache& cache) {
  if (!std::is_sorted(grid.begin(), grid.end())) throw InputError("scan_mertens: grid must be ascending");
  std::vector<MertensPoint> out;
  if (grid.empty()) return out;
  check_point_domain(grid.front(), cache);
  check_point_domain(grid.back(), cache);
  out.reserve(grid.size());
  Sums sums;
  std::size_t j = 0;
  for (double x : grid) {
    const std::size_t n = cache.count_upto(x);
    for (; j < n; ++j) sums.add(static_cast<double>(cache[j]));
    out.push_back(make_mertens_point(x, sums.S.total(), sums.P.total(), sums.theta.total()));
  }
  return out;
}

EpsStats b_eps_stats(double eps, std::span<const double> grid, const PrimeCache& cache) {
  if (!(eps > 0.0 && eps < 0.5)) throw InputError("b_eps_stats: need 0 < eps < 0.5");
  if (grid.empty()) throw InputError("b_eps_stats: empty grid");
  const auto points = scan_mertens(grid, cache);
  EpsStats st;
  bool first = true;
  for (const auto& m : points) {
    const double v = m.Q * std::pow(m.x, 0.5 - eps);
    if (first || v > st.sup) {
      st.sup = v;
      st.sup_x = m.x;
    }
    if (first || v < st.inf) {
      st.inf = v;
      st.inf_x = m.x;
    }
    first = false;
  }
  return st;
}

MertensTable::MertensTable(const ChebyshevTable& chebyshev) : cheb_(&chebyshev) {
  const std::size_t n = chebyshev.prime_count();
  S_.resize(n);
  P_.resize(n);
  CompensatedAccumulator s;
  CompensatedAccumulator p;
  for (std::size_t j = 0; j < n; ++j) {
    const double q = chebyshev.prime(j);
    s.add(mertens_term(q));
    p.add(1.0 / q);
    S_[j] = s.total();
    P_[j] = p.total();
  }
  excess_suffix_.assign(n + 1, 0.0);
  CompensatedAccumulator e;
  for (std::size_t j = n; j-- > 0;) {
    e.add(mertens_excess_term(chebyshev.prime(j)));
    excess_suffix_[j] = e.total();
  }
}

double MertensTable::S(double x) const {
  const std::size_t n = cheb_->cache().count_upto(x);
  return n == 0 ? 0.0 : S_[n - 1];
}

double MertensTable::P(double x) const {
  const std::size_t n = cheb_->cache().count_upto(x);
  return n == 0 ? 0.0 : P_[n - 1];
}

MertensPoint MertensTable::point(double x) const {
  check_point_domain(x, cheb_->cache());
  const std::size_t n = cheb_->cache().count_upto(x);
  return make_mertens_point(x, S_[n - 1], P_[n - 1], cheb_->theta_at(n - 1));
}

double MertensTable::excess_sum(double x, double cutoff) const {
  const auto& cache = cheb_->cache();
  if (cutoff > static_cast<double>(cache.limit())) {
    throw InsufficientCacheError("cutoff exceeds the prime cache limit", cutoff);
  }
  if (cutoff <= x) return 0.0;
  return excess_suffix_[cache.count_upto(x)] - excess_suffix_[cache.count_upto(cutoff)];
}

}  // namespace mertenslab
