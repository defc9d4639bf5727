#pragma once

// Chebyshev functions theta and psi, the deviation Delta(x) = theta(x) - x,
// its primitive Phi, the psi-primitive and the Cramer integral.
//
// theta and psi are right-continuous step functions (an event at x = p^k is
// included at x), so every primitive is a finite sum of closed-form pieces
// over the events. Nothing here integrates numerically.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "mertenslab/primes.hpp"

namespace mertenslab {

struct ChebyshevPoint {
  double x = 0.0;
  double theta = 0.0;
  double psi = 0.0;
  double delta = 0.0;  // theta - x
  double phi = 0.0;    // integral of Delta over [0, x]
  double b = 0.0;      // phi * x^{-3/2} + 2/3
};

// Direct evaluations: one compensated pass over the cache per call.
// All throw DomainError for x < 0 and InsufficientCacheError for x > cache.limit().
double theta(double x, const PrimeCache& cache);
double psi(double x, const PrimeCache& cache);
double phi(double x, const PrimeCache& cache);
double psi_primitive(double x, const PrimeCache& cache);
double cramer_integral(double x, const PrimeCache& cache);

// b(x) = Phi(x) x^{-3/2} + 2/3, for x > 0.
double b_of_phi(double x, double phi_value);

/// Number of sign changes of Delta on [lo, hi]. Delta decreases linearly
/// between primes and jumps up by log p at each prime, so the sign pattern
/// is determined by the values at the two ends of every piece.
std::size_t delta_sign_changes(double lo, double hi, const PrimeCache& cache);

/// Evaluation points for bound checks on [lo, hi]: lo, then for every prime
/// p in (lo, hi] the point just below p (largest double < p) and p itself,
/// then hi. Delta, R, Q and friends are monotone between consecutive primes,
/// so their extrema over [lo, hi] are attained on this grid.
std::vector<double> gap_endpoints(double lo, double hi, const PrimeCache& cache);

/// Prefix tables over a cache for O(log n) evaluation of every quantity
/// above. Holds a reference to the cache, which must outlive the table.
class ChebyshevTable {
 public:
  explicit ChebyshevTable(const PrimeCache& cache);

  const PrimeCache& cache() const noexcept { return *cache_; }
  double limit() const noexcept { return static_cast<double>(cache_->limit()); }

  double theta(double x) const;
  double delta(double x) const;
  double phi(double x) const;
  double b(double x) const;
  double psi(double x) const;
  double psi_primitive(double x) const;
  double cramer_integral(double x) const;
  ChebyshevPoint point(double x) const;

  // Indexed access, j = 0 for p = 2.
  std::size_t prime_count() const noexcept { return delta_.size(); }
  double prime(std::size_t j) const noexcept { return static_cast<double>((*cache_)[j]); }
  double theta_at(std::size_t j) const noexcept { return prime(j) + delta_[j]; }
  double delta_at(std::size_t j) const noexcept { return delta_[j]; }
  double phi_at(std::size_t j) const noexcept { return phi_[j]; }
  // Phi(t) for t in [p_j, p_{j+1}): Phi is quadratic on each gap.
  double phi_in_gap(std::size_t j, double t) const noexcept {
    const double h = t - prime(j);
    return phi_[j] + h * delta_[j] - 0.5 * h * h;
  }
  // Delta(t) for t in [p_j, p_{j+1}).
  double delta_in_gap(std::size_t j, double t) const noexcept { return delta_[j] + (prime(j) - t); }

 private:
  void check(double x) const;
  // Index of the last event <= x in events_, or npos when x < 2.
  std::size_t event_index(double x) const;

  const PrimeCache* cache_;
  std::vector<double> delta_;  // theta(p_j) - p_j
  std::vector<double> phi_;    // Phi(p_j)

  std::vector<std::uint64_t> events_;  // prime powers, ascending
  std::vector<double> psi_dev_;        // psi(v_e) - v_e
  std::vector<double> psi_prim_;       // psi-primitive at v_e
  std::vector<double> cramer_;         // Cramer integral at v_e
};

}  // namespace mertenslab
