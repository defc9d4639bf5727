#include "mertenslab/rh_criteria.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "mertenslab/error.hpp"

namespace mertenslab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

constexpr std::array<CheckId, 11> kAllChecks = {
    CheckId::robin_13,       CheckId::koch_22iii,        CheckId::narrow_A_18,
    CheckId::narrow_H_25,    CheckId::window_D_E_210,    CheckId::unconditional_211,
    CheckId::cramer_31iii,   CheckId::ingham_prop4,      CheckId::b_window,
    CheckId::uk_35,          CheckId::vk_35,
};

// Second derivative of 1/(t log t).
double e_weight(double t) {
  const double l = std::log(t);
  return (2.0 + 3.0 / l + 2.0 / (l * l)) / (t * t * t * l);
}

double exp_integral_e1(double z) { return -std::expint(-z); }

void require_x3(double x, const char* what) {
  if (!(x >= 3.0)) throw DomainError(std::string(what) + " needs x >= 3, got " + std::to_string(x));
}

std::string fmt(double v) { return std::to_string(v); }

}  // namespace

std::string_view to_string(CheckId id) noexcept {
  switch (id) {
    case CheckId::robin_13: return "robin_13";
    case CheckId::koch_22iii: return "koch_22iii";
    case CheckId::narrow_A_18: return "narrow_A_18";
    case CheckId::narrow_H_25: return "narrow_H_25";
    case CheckId::window_D_E_210: return "window_D_E_210";
    case CheckId::unconditional_211: return "unconditional_211";
    case CheckId::cramer_31iii: return "cramer_31iii";
    case CheckId::ingham_prop4: return "ingham_prop4";
    case CheckId::b_window: return "b_window";
    case CheckId::uk_35: return "uk_35";
    case CheckId::vk_35: return "vk_35";
  }
  return "unknown";
}

CheckId parse_check_id(std::string_view name) {
  for (CheckId id : kAllChecks) {
    if (to_string(id) == name) return id;
  }
  std::string valid;
  for (CheckId id : kAllChecks) {
    if (!valid.empty()) valid += ", ";
    valid += to_string(id);
  }
  throw InputError("unknown check id '" + std::string(name) + "'; valid ids: " + valid);
}

std::span<const CheckId> all_check_ids() noexcept { return kAllChecks; }

bool indexes_by_k(CheckId id) noexcept { return id == CheckId::uk_35 || id == CheckId::vk_35; }

// Quadrature of Phi(t) w(t) over every prime gap in [3, t_max], with suffix
// sums so that E at any point costs one partial-gap integral.
class Lab::ETable {
 public:
  ETable(const ChebyshevTable& cheb, double t_max, double quad_tol)
      : cheb_(cheb), t_max_(t_max), density_(quad_tol / (t_max - 3.0)), tail_(e_tail_model(t_max)) {
    const std::size_t n = cheb.prime_count();
    std::vector<double> value;
    std::vector<double> error;
    for (std::size_t j = 1; j < n && cheb.prime(j) < t_max; ++j) {
      const auto piece = integrate_gap(j, cheb.prime(j), gap_end(j));
      value.push_back(piece.value);
      error.push_back(piece.error_bound);
    }
    const std::size_t gaps = value.size();
    suffix_value_.assign(gaps + 1, 0.0);
    suffix_error_.assign(gaps + 1, 0.0);
    CompensatedAccumulator v;
    double e = 0.0;
    for (std::size_t g = gaps; g-- > 0;) {
      v.add(value[g]);
      e += error[g];
      suffix_value_[g] = v.total();
      suffix_error_[g] = e;
    }
  }

  double t_max() const noexcept { return t_max_; }
  double tail() const noexcept { return tail_; }

  ValueWithError value(double x) const {
    require_x3(x, "E(x)");
    if (x > t_max_) throw InputError("E(x) needs x <= t_max");
    const ValueWithError band{tail_, kTailBand * std::abs(tail_)};
    if (x == t_max_) return band;
    const std::size_t j = cheb_.cache().count_upto(x) - 1;  // x in [p_j, p_{j+1})
    const std::size_t g = j - 1;                             // gap index (first gap starts at 3)
    const auto partial = integrate_gap(j, x, gap_end(j));
    const ValueWithError rest{suffix_value_[g + 1], suffix_error_[g + 1]};
    return partial + rest + band;
  }

 private:
  double gap_end(std::size_t j) const {
    return j + 1 < cheb_.prime_count() ? std::min(cheb_.prime(j + 1), t_max_) : t_max_;
  }

  ValueWithError integrate_gap(std::size_t j, double a, double b) const {
    auto f = [this, j](double t) { return cheb_.phi_in_gap(j, t) * e_weight(t); };
    return adaptive_integral(f, a, b, density_ * (b - a) + std::numeric_limits<double>::min());
  }

  const ChebyshevTable& cheb_;
  double t_max_;
  double density_;
  double tail_;
  std::vector<double> suffix_value_;
  std::vector<double> suffix_error_;
};

Lab::Lab(std::shared_ptr<const PrimeCache> cache, double quadrature_tol)
    : cache_(std::move(cache)), quad_tol_(quadrature_tol) {
  if (!cache_) throw InputError("Lab needs a prime cache");
  if (!(quad_tol_ > 0.0)) throw InputError("Lab: quadrature tolerance must be positive");
  cheb_ = std::make_unique<ChebyshevTable>(*cache_);
  mert_ = std::make_unique<MertensTable>(*cheb_);
}

Lab::~Lab() = default;

double Lab::resolve_cutoff(double cutoff) const {
  if (cutoff == 0.0) return limit();
  if (cutoff > limit()) {
    throw InsufficientCacheError("cutoff " + fmt(cutoff) + " exceeds the prime cache limit " + fmt(limit()),
                                 cutoff);
  }
  if (!(cutoff >= 3.0)) throw InputError("cutoff must be >= 3");
  return cutoff;
}

double Lab::e_tail_model(double t) {
  const double l = std::log(t);
  const double s = std::sqrt(t);
  const double integral = (l + 1.0) / (s * l * l) + 1.5 / (s * l) + 0.75 * exp_integral_e1(0.5 * l);
  return -2.0 / 3.0 * integral;
}

double Lab::uv_tail_bound(double cutoff) {
  const double l = std::log(cutoff);
  const double s = std::sqrt(cutoff);
  // 1/theta <= 1/(p (1 - log^2 p / (8 pi sqrt p))) beyond the cutoff.
  const double shrink = 1.0 - l * l / (8.0 * Constants::pi * s);
  if (!(shrink > 0.0)) return kInf;
  return (l * l + 4.0 * l + 8.0) / (4.0 * Constants::pi * s) / shrink;
}

ValueWithError Lab::tail_T(double x, double cutoff, double tol) const {
  if (!(x >= 1.0)) throw DomainError("T(x) needs x >= 1");
  const double c = resolve_cutoff(cutoff);
  const ValueWithError t{mert_->excess_sum(x, c), 0.5 / c};
  if (tol > 0.0 && t.error_bound > tol) {
    const double required = std::ceil(0.5 / tol);
    throw BudgetError("T(x) tail bound " + fmt(t.error_bound) + " exceeds tolerance " + fmt(tol) +
                          "; a prime cache limit of at least " + fmt(required) + " is required",
                      t.error_bound, required);
  }
  return t;
}

ValueWithError Lab::H_of(double x, double cutoff) const {
  require_x3(x, "H(x)");
  const auto t = tail_T(x, cutoff);
  const double q = mert_->point(x).Q;
  return {-q - t.value, t.error_bound};
}

double Lab::H_partial(double x, double y) const {
  require_x3(x, "H(x, y)");
  if (x > y) throw InputError("H(x, y) needs x <= y");
  if (y > limit()) throw InsufficientCacheError("H(x, y): y exceeds the prime cache limit", y);
  const double reciprocal = mert_->P(y) - mert_->P(x);
  return reciprocal - std::log(std::log(cheb_->theta(y))) + std::log(std::log(cheb_->theta(x)));
}

double Lab::D_of(double x) const {
  require_x3(x, "D(x)");
  const double l = std::log(x);
  return -cheb_->phi(x) * (l + 1.0) / (x * x * l * l);
}

double Lab::F_of(double x) const {
  require_x3(x, "F(x)");
  const double u = cheb_->delta(x) / x;
  const double l = std::log(x);
  return std::log1p(std::log1p(u) / l) - u / l;
}

const Lab::ETable& Lab::e_table(double t_max) const {
  if (t_max > limit()) {
    throw InsufficientCacheError("t_max " + fmt(t_max) + " exceeds the prime cache limit " + fmt(limit()),
                                 t_max);
  }
  require_x3(t_max, "t_max");
  std::lock_guard lock(e_mutex_);
  auto& slot = e_tables_[t_max];
  if (!slot) slot = std::make_unique<ETable>(*cheb_, t_max, quad_tol_);
  return *slot;
}

ValueWithError Lab::E_of(double x, double t_max, double rel_tol) const {
  require_x3(x, "E(x)");
  if (x > t_max) throw InputError("E(x) needs x <= t_max");
  const auto e = e_table(t_max).value(x);
  const double band = kTailBand * std::abs(e_tail_model(t_max));
  if (rel_tol > 0.0 && band > rel_tol * std::abs(e.value)) {
    double required = t_max;
    while (kTailBand * std::abs(e_tail_model(required)) > rel_tol * std::abs(e.value)) required *= 2.0;
    throw BudgetError("E(x) tail band " + fmt(band) + " exceeds the requested relative error; t_max >= " +
                          fmt(required) + " is required",
                      e.error_bound, required);
  }
  return e;
}

NarrowDecomposition Lab::decompose(double x, double t_max) const {
  NarrowDecomposition d;
  d.x = x;
  d.T = tail_T(x);
  d.H = H_of(x);
  d.D = D_of(x);
  d.E = E_of(x, t_max);
  d.F = F_of(x);
  CompensatedAccumulator r(d.H.value);
  r.add(-d.D);
  r.add(-d.E.value);
  r.add(-d.F);
  d.residual = {r.total(), d.H.error_bound + d.E.error_bound};
  return d;
}

std::vector<UkPoint> Lab::u_v_points(std::span<const std::uint64_t> k_list, double cutoff) const {
  const double c = resolve_cutoff(cutoff);
  if (!std::is_sorted(k_list.begin(), k_list.end())) throw InputError("u_v_points: k_list must be ascending");
  const std::size_t terms = cache_->count_upto(c);  // p_1 .. p_terms <= cutoff
  for (std::uint64_t k : k_list) {
    if (k < 1) throw InputError("u_v_points: k must be >= 1");
    if (k > terms) {
      throw InsufficientCacheError("u_v_points: p_k for k = " + std::to_string(k) + " lies beyond the cutoff " +
                                       fmt(c),
                                   c);
    }
  }
  const double bound = uv_tail_bound(c);
  std::vector<UkPoint> out(k_list.size());
  CompensatedAccumulator u;
  CompensatedAccumulator v;
  std::size_t next = terms;  // 1-based index of the next term to add
  for (std::size_t i = k_list.size(); i-- > 0;) {
    const std::uint64_t k = k_list[i];
    for (; next > k; --next) {
      const std::size_t j = next - 1;
      const double term = cheb_->delta_at(j) / (cheb_->prime(j) * cheb_->theta_at(j));
      u.add(term);
      v.add(std::abs(term));
    }
    out[i] = UkPoint{k, (*cache_)[k - 1], {u.total(), bound}, {v.total(), bound}};
  }
  return out;
}

namespace {

struct ChunkResult {
  std::vector<Statistic> stats;
  std::vector<bool> seen;
  std::size_t count = 0;
  std::vector<Violation> listed;
  std::optional<std::size_t> last;
};

void fold_stat(Statistic& s, bool& seen, double v, double at) {
  if (std::isnan(v)) return;
  if (!seen || v < s.min) {
    s.min = v;
    s.argmin = at;
  }
  if (!seen || v > s.max) {
    s.max = v;
    s.argmax = at;
  }
  seen = true;
}

// Evaluates eval(i, stats, sink) at every point, in deterministic chunks,
// and merges the per-chunk extrema and violations in ascending order.
template <class Eval>
void drive(CriteriaReport& report, std::span<const double> points, const std::vector<std::string>& names,
           const CheckParams& params, Eval&& eval) {
  const std::size_t n = points.size();
  const std::size_t chunks = std::max<std::size_t>(1, std::min<std::size_t>(256, n));
  std::vector<ChunkResult> results(chunks);
  parallel_chunks(n, chunks, params.workers, [&](std::size_t c, std::size_t b, std::size_t e) {
    auto& r = results[c];
    r.stats.resize(names.size());
    r.seen.assign(names.size(), false);
    std::vector<double> values(names.size());
    for (std::size_t i = b; i < e; ++i) {
      bool violated = false;
      std::fill(values.begin(), values.end(), std::numeric_limits<double>::quiet_NaN());
      eval(i, std::span<double>(values), [&](Violation v) {
        violated = true;
        ++r.count;
        if (r.listed.size() < params.max_listed) r.listed.push_back(std::move(v));
      });
      for (std::size_t s = 0; s < names.size(); ++s) {
        bool seen = r.seen[s];
        fold_stat(r.stats[s], seen, values[s], points[i]);
        r.seen[s] = seen;
      }
      if (violated) r.last = i;
    }
  });

  report.points_evaluated = n;
  report.statistics.resize(names.size());
  std::vector<bool> seen(names.size(), false);
  std::optional<std::size_t> last;
  for (auto& r : results) {
    for (std::size_t s = 0; s < names.size() && s < r.stats.size(); ++s) {
      if (!r.seen[s]) continue;
      auto& into = report.statistics[s];
      bool sn = seen[s];
      fold_stat(into, sn, r.stats[s].min, r.stats[s].argmin);
      fold_stat(into, sn, r.stats[s].max, r.stats[s].argmax);
      seen[s] = sn;
    }
    report.violation_count += r.count;
    for (auto& v : r.listed) {
      if (report.violations.size() < params.max_listed) report.violations.push_back(std::move(v));
    }
    if (r.last) last = r.last;
  }
  for (std::size_t s = 0; s < names.size(); ++s) report.statistics[s].name = names[s];
  if (n == 0) return;
  if (!last) {
    report.onset = points.front();
  } else if (*last + 1 < n) {
    report.onset = points[*last + 1];
  }
}

}  // namespace

CriteriaReport Lab::run_check(CheckId id, double lo, double hi, const CheckParams& params) const {
  if (!(lo <= hi)) throw InputError("run_check: need lo <= hi");
  CriteriaReport report;
  report.check = id;
  report.lo = lo;
  report.hi = hi;
  const double pi8 = 8.0 * Constants::pi;

  if (indexes_by_k(id)) {
    const double cutoff = resolve_cutoff(params.cutoff);
    const auto k_lo = static_cast<std::uint64_t>(std::max(1.0, std::ceil(lo)));
    const auto k_hi = static_cast<std::uint64_t>(std::floor(hi));
    if (k_hi < k_lo) throw InputError("run_check: empty k range");
    std::vector<std::uint64_t> ks(k_hi - k_lo + 1);
    for (std::size_t i = 0; i < ks.size(); ++i) ks[i] = k_lo + i;
    const auto uv = u_v_points(ks, cutoff);
    std::vector<double> points(ks.begin(), ks.end());
    const double eps = params.eps;
    report.conditional = true;
    report.note = "U/V tail beyond the cutoff bounded assuming |Delta(p)| <= sqrt(p) log^2 p / (8 pi) (RH-conditional); "
                  "conditions tested on the computed partial sums";
    if (id == CheckId::uk_35) {
      drive(report, points, {"U_normalized", "U_scaled"}, params, [&](std::size_t i, std::span<double> s, auto&& sink) {
        const auto& pt = uv[i];
        const double k = static_cast<double>(pt.k);
        const double p = static_cast<double>(pt.p_k);
        const double thr = std::pow(k, -0.5 + eps);
        const double un = pt.U.value * std::sqrt(p) * std::log(p);
        s[0] = un;
        s[1] = pt.U.value / thr;
        if (!(pt.U.value < thr)) sink(Violation{k, pt.U.value, thr, "(i) U_k < k^(-1/2+eps)"});
        if (!(pt.U.value > -thr)) sink(Violation{k, pt.U.value, -thr, "(ii) U_k > -k^(-1/2+eps)"});
        if (!(un < -1.5 + eps)) sink(Violation{k, un, -1.5 + eps, "(iii) U_k sqrt(p_k) log p_k < -1.5 + eps"});
        if (!(un > -2.5 - eps)) sink(Violation{k, un, -2.5 - eps, "(iv) U_k sqrt(p_k) log p_k > -2.5 - eps"});
      });
    } else {
      const double vbound = (1.0 + eps) / (4.0 * Constants::pi);
      drive(report, points, {"V_normalized", "V_scaled"}, params, [&](std::size_t i, std::span<double> s, auto&& sink) {
        const auto& pt = uv[i];
        const double k = static_cast<double>(pt.k);
        const double p = static_cast<double>(pt.p_k);
        const double thr = std::pow(k, -0.5 + eps);
        const double vn = pt.V.value * std::sqrt(p) / std::log(p);
        s[0] = vn;
        s[1] = pt.V.value / thr;
        if (!(pt.V.value < thr)) sink(Violation{k, pt.V.value, thr, "(v) V_k < k^(-1/2+eps)"});
        if (!(vn < vbound)) sink(Violation{k, vn, vbound, "(vi) V_k sqrt(p_k) / log p_k < (1+eps)/(4 pi)"});
      });
    }
    return report;
  }

  double min_x = 3.0;
  if (id == CheckId::koch_22iii) min_x = 2.0;
  if (id == CheckId::cramer_31iii || id == CheckId::ingham_prop4 || id == CheckId::b_window) min_x = 1.0;
  if (hi < min_x) throw InputError("run_check: range lies below the domain x >= " + fmt(min_x));
  if (hi > limit()) throw InsufficientCacheError("run_check: range exceeds the prime cache limit", hi);
  const double from = std::max(lo, min_x);
  if (from > lo) report.note = "range clipped to x >= " + fmt(min_x) + "; ";
  const auto points = gap_endpoints(from, hi, *cache_);
  const auto& cheb = *cheb_;
  const auto& mert = *mert_;

  switch (id) {
    case CheckId::robin_13:
      drive(report, points, {"R_over_bound"}, params, [&](std::size_t i, std::span<double> s, auto&& sink) {
        const double x = points[i];
        const double r = mert.point(x).R;
        const double bound = std::log(x) / (pi8 * std::sqrt(x));
        s[0] = r / bound;
        if (std::abs(r) > bound) sink(Violation{x, std::abs(r), bound, "|R(x)| <= log x / (8 pi sqrt x)"});
      });
      break;
    case CheckId::koch_22iii:
      drive(report, points, {"Delta_over_bound"}, params, [&](std::size_t i, std::span<double> s, auto&& sink) {
        const double x = points[i];
        const double d = cheb.delta(x);
        const double l = std::log(x);
        const double bound = std::sqrt(x) * l * l / pi8;
        s[0] = d / bound;
        if (std::abs(d) > bound) sink(Violation{x, std::abs(d), bound, "|Delta(x)| <= sqrt x log^2 x / (8 pi)"});
      });
      break;
    case CheckId::narrow_A_18:
      drive(report, points, {"A"}, params, [&](std::size_t i, std::span<double> s, auto&& sink) {
        const double x = points[i];
        const double a = mert.point(x).A;
        s[0] = a;
        if (a < params.a_lo) sink(Violation{x, a, params.a_lo, "A(x) >= lower band"});
        if (a > params.a_hi) sink(Violation{x, a, params.a_hi, "A(x) <= upper band"});
      });
      break;
    case CheckId::narrow_H_25: {
      const double cutoff = resolve_cutoff(params.cutoff);
      const double w_lo = -2.0 - 5.0 * params.delta0;
      const double w_hi = -2.0 + 5.0 * params.delta0;
      drive(report, points, {"H_normalized"}, params, [&](std::size_t i, std::span<double> s, auto&& sink) {
        const double x = points[i];
        const auto h = H_of(x, cutoff);
        const double scale = std::sqrt(x) * std::log(x);
        const double v = h.value * scale;
        const double err = h.error_bound * scale;
        s[0] = v;
        if (v - err > w_hi) sink(Violation{x, v, w_hi, "H sqrt x log x <= -2 + 5 delta0"});
        if (v + err < w_lo) sink(Violation{x, v, w_lo, "H sqrt x log x >= -2 - 5 delta0"});
      });
      break;
    }
    case CheckId::window_D_E_210: {
      const auto& et = e_table(params.t_max == 0.0 ? limit() : params.t_max);
      if (hi > et.t_max()) throw InputError("window_D_E_210: range must end at or below t_max");
      const double d_lo = 17.0 / 30.0 - params.d_margin;
      const double d_hi = 23.0 / 30.0 + params.d_margin;
      const double e_lo = -92.0 / 30.0 - params.e_margin;
      const double e_hi = -68.0 / 30.0 + params.e_margin;
      report.conditional = true;
      report.note += "E tail beyond t_max modeled by Phi ~ -(2/3) t^{3/2} with a 15% band (RH-conditional)";
      drive(report, points, {"D_normalized", "E_normalized"}, params,
            [&](std::size_t i, std::span<double> s, auto&& sink) {
              const double x = points[i];
              const double scale = std::sqrt(x) * std::log(x);
              const double dn = D_of(x) * scale;
              const auto e = et.value(x);
              const double en = e.value * scale;
              const double en_err = e.error_bound * scale;
              s[0] = dn;
              s[1] = en;
              if (dn < d_lo) sink(Violation{x, dn, d_lo, "D window lower"});
              if (dn > d_hi) sink(Violation{x, dn, d_hi, "D window upper"});
              if (en + en_err < e_lo) sink(Violation{x, en, e_lo, "E window lower"});
              if (en - en_err > e_hi) sink(Violation{x, en, e_hi, "E window upper"});
            });
      break;
    }
    case CheckId::unconditional_211: {
      const double cutoff = resolve_cutoff(params.cutoff);
      const auto& et = e_table(params.t_max == 0.0 ? limit() : params.t_max);
      if (hi > et.t_max()) throw InputError("unconditional_211: range must end at or below t_max");
      report.conditional = true;
      report.note += "tolerance includes the modeled E tail band beyond t_max";
      drive(report, points, {"H_minus_D_minus_E", "F"}, params, [&](std::size_t i, std::span<double> s, auto&& sink) {
        const double x = points[i];
        const auto h = H_of(x, cutoff);
        const auto e = et.value(x);
        const double gap = h.value - D_of(x) - e.value;
        const double f = F_of(x);
        s[0] = gap;
        s[1] = f;
        if (gap > h.error_bound + e.error_bound) {
          sink(Violation{x, gap, h.error_bound + e.error_bound, "H - (D + E) <= error bounds"});
        }
        if (f > 0.0) sink(Violation{x, f, 0.0, "F(x) <= 0"});
      });
      break;
    }
    case CheckId::cramer_31iii:
      drive(report, points, {"cramer_over_x2"}, params, [&](std::size_t i, std::span<double> s, auto&& sink) {
        const double x = points[i];
        const double r = cheb.cramer_integral(x) / (x * x);
        s[0] = r;
        if (r > params.cramer_bound) sink(Violation{x, r, params.cramer_bound, "cramer(x) / x^2 <= bound"});
      });
      break;
    case CheckId::ingham_prop4:
      drive(report, points, {"psi_primitive_over_x32"}, params, [&](std::size_t i, std::span<double> s, auto&& sink) {
        const double x = points[i];
        const double m = std::abs(cheb.psi_primitive(x));
        const double bound = 0.1 * x * std::sqrt(x);
        s[0] = m / (x * std::sqrt(x));
        if (!(m < bound)) sink(Violation{x, m, bound, "|psi-primitive(x)| < 0.1 x^{3/2}"});
      });
      break;
    case CheckId::b_window:
      drive(report, points, {"b"}, params, [&](std::size_t i, std::span<double> s, auto&& sink) {
        const double x = points[i];
        const double b = cheb.b(x);
        s[0] = b;
        if (!(std::abs(b) < params.delta0)) sink(Violation{x, std::abs(b), params.delta0, "|b(x)| < delta0"});
      });
      break;
    case CheckId::uk_35:
    case CheckId::vk_35:
      break;
  }
  return report;
}

}  // namespace mertenslab
