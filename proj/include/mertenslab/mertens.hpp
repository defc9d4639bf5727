#pragma once

// Mertens sums S(x) = sum log(p/(p-1)), P(x) = sum 1/p, the classical
// remainder R(x) = S - log log x - gamma, the modified remainder
// Q(x) = S - log log theta(x) - gamma and A(x) = Q sqrt(x) log x.

#include <cstddef>
#include <span>
#include <vector>

#include "mertenslab/chebyshev.hpp"
#include "mertenslab/primes.hpp"

namespace mertenslab {

struct MertensPoint {
  double x = 0.0;
  double theta = 0.0;
  double S = 0.0;
  double P = 0.0;
  double R = 0.0;
  double Q = 0.0;
  double A = 0.0;
};

// log(p / (p - 1)) without cancellation.
double mertens_term(double p) noexcept;
// log(p / (p - 1)) - 1/p = sum_{k>=2} 1/(k p^k), evaluated without cancellation.
double mertens_excess_term(double p) noexcept;

/// log log theta - log log x, written as log1p(log1p(Delta/x) / log x).
double log_log_shift(double x, double delta) noexcept;

/// Assembles R, Q and A from the prefix sums at x. Throws DomainError for x < 3.
MertensPoint make_mertens_point(double x, double S, double P, double theta);

/// Direct compensated evaluation at one x (3 <= x <= cache.limit()).
MertensPoint mertens_point(double x, const PrimeCache& cache);

/// One ascending pass over the cache producing a point per grid value. The
/// accumulation order matches mertens_point, so results are bit-identical to
/// pointwise evaluation. Throws InputError for an unsorted grid.
std::vector<MertensPoint> scan_mertens(std::span<const double> grid, const PrimeCache& cache);

struct EpsStats {
  double sup = 0.0;
  double sup_x = 0.0;
  double inf = 0.0;
  double inf_x = 0.0;
};

/// Running extrema of Q(x) x^{1/2 - eps} over the grid, 0 < eps < 1/2.
EpsStats b_eps_stats(double eps, std::span<const double> grid, const PrimeCache& cache);

/// Prefix tables for S and P and the suffix table of the excess terms
/// log(p/(p-1)) - 1/p. Holds a reference to the Chebyshev table.
class MertensTable {
 public:
  explicit MertensTable(const ChebyshevTable& chebyshev);

  const ChebyshevTable& chebyshev() const noexcept { return *cheb_; }
  double S(double x) const;
  double P(double x) const;
  MertensPoint point(double x) const;
  // sum_{x < p <= cutoff} (log(p/(p-1)) - 1/p).
  double excess_sum(double x, double cutoff) const;

  double S_at(std::size_t j) const noexcept { return S_[j]; }
  double P_at(std::size_t j) const noexcept { return P_[j]; }

 private:
  const ChebyshevTable* cheb_;
  std::vector<double> S_;
  std::vector<double> P_;
  std::vector<double> excess_suffix_;  // [i] = sum over primes with index >= i
};

}  // namespace mertenslab
