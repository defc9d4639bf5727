#include "mertenslab/chebyshev.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mertenslab/error.hpp"
#include "mertenslab/numeric.hpp"

namespace mertenslab {

namespace {

constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

void check_argument(double x, const PrimeCache& cache) {
  if (!(x >= 0.0)) throw DomainError("Chebyshev functions need x >= 0, got " + std::to_string(x));
  if (x > static_cast<double>(cache.limit())) {
    throw InsufficientCacheError("x = " + std::to_string(x) + " exceeds the prime cache limit " +
                                     std::to_string(cache.limit()),
                                 x);
  }
}

std::uint64_t floor_u64(double x) { return x < 1.0 ? 0 : static_cast<std::uint64_t>(std::floor(x)); }

}  // namespace

double theta(double x, const PrimeCache& cache) {
  check_argument(x, cache);
  CompensatedAccumulator acc;
  const std::size_t n = cache.count_upto(x);
  for (std::size_t j = 0; j < n; ++j) acc.add(std::log(static_cast<double>(cache[j])));
  return acc.total();
}

double psi(double x, const PrimeCache& cache) {
  check_argument(x, cache);
  CompensatedAccumulator acc;
  PrimePowerStream stream(cache, floor_u64(x));
  while (auto e = stream.next()) acc.add(e->base_log);
  return acc.total();
}

double phi(double x, const PrimeCache& cache) {
  check_argument(x, cache);
  CompensatedAccumulator acc;
  const std::size_t n = cache.count_upto(x);
  for (std::size_t j = 0; j < n; ++j) {
    const double p = static_cast<double>(cache[j]);
    acc.add(std::log(p) * (x - p));
  }
  acc.add(-0.5 * x * x);
  return acc.total();
}

double psi_primitive(double x, const PrimeCache& cache) {
  check_argument(x, cache);
  CompensatedAccumulator acc;
  PrimePowerStream stream(cache, floor_u64(x));
  while (auto e = stream.next()) acc.add(e->base_log * (x - static_cast<double>(e->value)));
  acc.add(-0.5 * x * x);
  return acc.total();
}

double cramer_integral(double x, const PrimeCache& cache) {
  check_argument(x, cache);
  // On [a, b) psi equals c, contributing ((b - c)^3 - (a - c)^3) / 3.
  auto piece = [](double a, double b, double c) {
    const double hi = b - c;
    const double lo = a - c;
    return (hi * hi * hi - lo * lo * lo) / 3.0;
  };
  CompensatedAccumulator acc;
  CompensatedAccumulator level;
  double start = 0.0;
  PrimePowerStream stream(cache, floor_u64(x));
  while (auto e = stream.next()) {
    const double v = static_cast<double>(e->value);
    acc.add(piece(start, v, level.total()));
    level.add(e->base_log);
    start = v;
  }
  acc.add(piece(start, x, level.total()));
  return acc.total();
}

double b_of_phi(double x, double phi_value) { return phi_value / (x * std::sqrt(x)) + 2.0 / 3.0; }

std::size_t delta_sign_changes(double lo, double hi, const PrimeCache& cache) {
  if (lo > hi) throw InputError("delta_sign_changes: need lo <= hi");
  check_argument(hi, cache);
  if (lo == hi) return 0;
  check_argument(lo, cache);

  std::size_t changes = 0;
  int last = 0;
  auto push = [&](double d) {
    const int s = (d > 0.0) - (d < 0.0);
    if (s == 0) return;
    if (last != 0 && s != last) ++changes;
    last = s;
  };

  CompensatedAccumulator th;
  std::size_t j = 0;
  const std::size_t first = cache.count_upto(lo);
  for (; j < first; ++j) th.add(std::log(static_cast<double>(cache[j])));
  const std::size_t end = cache.count_upto(hi);
  double start = lo;
  for (; j < end; ++j) {
    const double p = static_cast<double>(cache[j]);
    push(th.total() - start);
    push(th.total() - p);  // left limit at p
    th.add(std::log(p));
    start = p;
  }
  push(th.total() - start);
  push(th.total() - hi);
  return changes;
}

std::vector<double> gap_endpoints(double lo, double hi, const PrimeCache& cache) {
  if (lo > hi) throw InputError("gap_endpoints: need lo <= hi");
  check_argument(lo, cache);
  check_argument(hi, cache);
  std::vector<double> out{lo};
  const std::size_t first = cache.count_upto(lo);
  const std::size_t end = cache.count_upto(hi);
  if (end > first) out.reserve(2 * (end - first) + 2);
  for (std::size_t j = first; j < end; ++j) {
    const double p = static_cast<double>(cache[j]);
    const double below = std::nextafter(p, 0.0);
    if (below > out.back()) out.push_back(below);
    out.push_back(p);
  }
  if (hi > out.back()) out.push_back(hi);
  return out;
}

ChebyshevTable::ChebyshevTable(const PrimeCache& cache) : cache_(&cache) {
  const std::size_t n = cache.count();
  delta_.resize(n);
  phi_.resize(n);
  CompensatedAccumulator th;
  CompensatedAccumulator ph(-2.0);  // Phi(2) = -int_0^2 t dt
  for (std::size_t j = 0; j < n; ++j) {
    const double p = prime(j);
    if (j > 0) {
      const double g = p - prime(j - 1);
      ph.add(g * delta_[j - 1]);
      ph.add(-0.5 * g * g);
    }
    th.add(std::log(p));
    delta_[j] = (th.principal() - p) + th.compensation();
    phi_[j] = ph.total();
  }

  PrimePowerStream stream(cache, cache.limit());
  CompensatedAccumulator ps;
  CompensatedAccumulator pp(-2.0);       // psi-primitive(2)
  CompensatedAccumulator cr(8.0 / 3.0);  // int_0^2 t^2 dt
  while (auto e = stream.next()) {
    const double v = static_cast<double>(e->value);
    if (!events_.empty()) {
      const double prev = static_cast<double>(events_.back());
      const double g = v - prev;
      const double d = psi_dev_.back();
      pp.add(g * d);
      pp.add(-0.5 * g * g);
      // int_prev^v (t - psi)^2 dt with u = v - psi, w = prev - psi.
      const double u = g - d;
      const double w = -d;
      cr.add(g * (u * u + u * w + w * w) / 3.0);
    }
    ps.add(e->base_log);
    events_.push_back(e->value);
    psi_dev_.push_back((ps.principal() - v) + ps.compensation());
    psi_prim_.push_back(pp.total());
    cramer_.push_back(cr.total());
  }
}

void ChebyshevTable::check(double x) const { check_argument(x, *cache_); }

std::size_t ChebyshevTable::event_index(double x) const {
  if (x < 2.0) return npos;
  const std::uint64_t n = floor_u64(x);
  const auto it = std::upper_bound(events_.begin(), events_.end(), n);
  return static_cast<std::size_t>(it - events_.begin()) - 1;
}

double ChebyshevTable::theta(double x) const {
  check(x);
  const std::size_t n = cache_->count_upto(x);
  return n == 0 ? 0.0 : theta_at(n - 1);
}

double ChebyshevTable::delta(double x) const {
  check(x);
  const std::size_t n = cache_->count_upto(x);
  return n == 0 ? -x : delta_in_gap(n - 1, x);
}

double ChebyshevTable::phi(double x) const {
  check(x);
  const std::size_t n = cache_->count_upto(x);
  return n == 0 ? -0.5 * x * x : phi_in_gap(n - 1, x);
}

double ChebyshevTable::b(double x) const {
  if (!(x > 0.0)) throw DomainError("b(x) needs x > 0");
  return b_of_phi(x, phi(x));
}

double ChebyshevTable::psi(double x) const {
  check(x);
  const std::size_t e = event_index(x);
  return e == npos ? 0.0 : static_cast<double>(events_[e]) + psi_dev_[e];
}

double ChebyshevTable::psi_primitive(double x) const {
  check(x);
  const std::size_t e = event_index(x);
  if (e == npos) return -0.5 * x * x;
  const double h = x - static_cast<double>(events_[e]);
  return psi_prim_[e] + h * psi_dev_[e] - 0.5 * h * h;
}

double ChebyshevTable::cramer_integral(double x) const {
  check(x);
  const std::size_t e = event_index(x);
  if (e == npos) return x * x * x / 3.0;
  const double h = x - static_cast<double>(events_[e]);
  const double d = psi_dev_[e];
  const double u = h - d;
  const double w = -d;
  return cramer_[e] + h * (u * u + u * w + w * w) / 3.0;
}

ChebyshevPoint ChebyshevTable::point(double x) const {
  ChebyshevPoint pt;
  pt.x = x;
  pt.theta = theta(x);
  pt.psi = psi(x);
  pt.delta = delta(x);
  pt.phi = phi(x);
  pt.b = x > 0.0 ? b_of_phi(x, pt.phi) : 0.0;
  return pt;
}

}  // namespace mertenslab
