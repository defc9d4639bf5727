#pragma once

// H(x), its exact decomposition H = D + E + F, the tail sequences U_k and
// V_k, and range checks of the RH-conditional bounds on all of them.
//
// H is evaluated through the unconditional tail identity H = -Q - T with
// T(x) = sum_{p > x} (log(p/(p-1)) - 1/p), so only the tail of T beyond the
// cache limit is uncertain. F is kept in the exact form
//   F(x) = log log theta(x) - log log x - Delta(x) / (x log x),
// which makes H = D + E + F an identity; the residual therefore measures
// only the truncation of E.

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mertenslab/chebyshev.hpp"
#include "mertenslab/mertens.hpp"
#include "mertenslab/numeric.hpp"
#include "mertenslab/primes.hpp"

namespace mertenslab {

struct NarrowDecomposition {
  double x = 0.0;
  ValueWithError H;
  ValueWithError T;
  double D = 0.0;
  ValueWithError E;
  double F = 0.0;
  ValueWithError residual;  // H - (D + E + F)
  // E's tail beyond t_max uses the Phi ~ -(2/3) t^{3/2} model, which is RH-conditional.
  bool tail_conditional = true;
};

struct UkPoint {
  std::uint64_t k = 0;    // 1-based: p_1 = 2
  std::uint64_t p_k = 0;
  ValueWithError U;
  ValueWithError V;
};

enum class CheckId {
  robin_13,
  koch_22iii,
  narrow_A_18,
  narrow_H_25,
  window_D_E_210,
  unconditional_211,
  cramer_31iii,
  ingham_prop4,
  b_window,
  uk_35,
  vk_35,
};

std::string_view to_string(CheckId id) noexcept;
/// Throws InputError naming the valid ids.
CheckId parse_check_id(std::string_view name);
std::span<const CheckId> all_check_ids() noexcept;
// True for the checks whose range is a span of prime indices k rather than x.
bool indexes_by_k(CheckId id) noexcept;

struct Violation {
  double at = 0.0;  // x, or k for the U/V checks
  double lhs = 0.0;
  double rhs = 0.0;
  std::string condition;
};

struct Statistic {
  std::string name;
  double min = 0.0;
  double argmin = 0.0;
  double max = 0.0;
  double argmax = 0.0;
};

struct CriteriaReport {
  CheckId check = CheckId::robin_13;
  double lo = 0.0;
  double hi = 0.0;
  std::size_t points_evaluated = 0;
  std::size_t violation_count = 0;
  std::vector<Violation> violations;  // the first max_listed, ascending
  std::vector<Statistic> statistics;  // statistics[0] is the check's main statistic
  // Smallest sampled point from which no violation occurs; empty when the
  // last sampled point is itself a violation.
  std::optional<double> onset;
  bool conditional = false;
  std::string note;

  bool violations_persist() const noexcept { return !onset.has_value(); }
};

struct CheckParams {
  double eps = 0.1;            // epsilon of the U/V criteria
  double delta0 = 0.1;         // |b| bound; narrow_H window is -2 +- 5 delta0
  double t_max = 0.0;          // E truncation point; 0 -> cache limit
  double cutoff = 0.0;         // T and U/V truncation point; 0 -> cache limit
  double a_lo = 1.5;           // narrow_A window
  double a_hi = 2.5;
  double d_margin = 0.0;       // widening of the D window [17/30, 23/30]
  double e_margin = 0.0;       // widening of the E window [-92/30, -68/30]
  double cramer_bound = 0.05;  // sup of cramer_integral(x) / x^2
  unsigned workers = 1;
  std::size_t max_listed = 1000;
};

/// Owns the prefix tables built over one prime cache and exposes every
/// quantity and check. Tables for E are built lazily per t_max and memoized;
/// all methods are safe to call concurrently.
class Lab {
 public:
  explicit Lab(std::shared_ptr<const PrimeCache> cache, double quadrature_tol = 1e-12);
  ~Lab();
  Lab(const Lab&) = delete;
  Lab& operator=(const Lab&) = delete;

  const PrimeCache& cache() const noexcept { return *cache_; }
  const ChebyshevTable& chebyshev() const noexcept { return *cheb_; }
  const MertensTable& mertens() const noexcept { return *mert_; }
  double limit() const noexcept { return static_cast<double>(cache_->limit()); }

  /// T(x) summed over x < p <= cutoff with error_bound 1/(2 cutoff).
  /// cutoff = 0 selects the cache limit. Throws BudgetError (with the required
  /// limit) when the bound exceeds tol.
  ValueWithError tail_T(double x, double cutoff = 0.0, double tol = 0.0) const;
  /// H(x) = -Q(x) - T(x). x >= 3.
  ValueWithError H_of(double x, double cutoff = 0.0) const;
  /// sum_{x < p <= y} 1/p - log log theta(y) + log log theta(x), 3 <= x <= y.
  double H_partial(double x, double y) const;
  /// -Phi(x)(log x + 1) / (x^2 log^2 x).
  double D_of(double x) const;
  /// Integral of Phi(t) (2 + 3/log t + 2/log^2 t) / (t^3 log t) over [x, inf):
  /// quadrature over [x, t_max] plus the modeled tail beyond t_max. With
  /// rel_tol > 0, throws BudgetError naming the required t_max when the tail
  /// band exceeds rel_tol |E|.
  ValueWithError E_of(double x, double t_max, double rel_tol = 0.0) const;
  /// log log theta(x) - log log x - Delta(x) / (x log x); always <= 0.
  double F_of(double x) const;
  NarrowDecomposition decompose(double x, double t_max) const;

  std::vector<UkPoint> u_v_points(std::span<const std::uint64_t> k_list, double cutoff = 0.0) const;

  CriteriaReport run_check(CheckId id, double lo, double hi, const CheckParams& params = {}) const;

  // Modeled E tail beyond t: -(2/3) * integral_t^inf s^{3/2} w(s) ds, in closed form.
  static double e_tail_model(double t);
  // Bound on sum_{p > L} |1/p - 1/theta(p)| under |Delta| <= sqrt(p) log^2 p / (8 pi).
  static double uv_tail_bound(double cutoff);
  // 0.15 = 0.1 / (2/3): relative width of the E tail band.
  static constexpr double kTailBand = 0.15;

  class ETable;

 private:
  const ETable& e_table(double t_max) const;
  double resolve_cutoff(double cutoff) const;

  std::shared_ptr<const PrimeCache> cache_;
  std::unique_ptr<ChebyshevTable> cheb_;
  std::unique_ptr<MertensTable> mert_;
  double quad_tol_;
  mutable std::mutex e_mutex_;
  mutable std::map<double, std::unique_ptr<ETable>> e_tables_;
};

}  // namespace mertenslab
