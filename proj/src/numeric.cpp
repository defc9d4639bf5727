#include "mertenslab/numeric.hpp"

namespace mertenslab {

double comp_sum(std::span<const double> values) noexcept {
  CompensatedAccumulator acc;
  for (double v : values) acc.add(v);
  return acc.total();
}

double log_log(double x) {
  if (!(x > 1.0)) {
    throw DomainError("log_log: need x > 1, got " + std::to_string(x));
  }
  return std::log(std::log(x));
}

}  // namespace mertenslab
