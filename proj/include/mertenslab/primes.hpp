#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace mertenslab {

/// Sorted primes up to a sieving limit. Immutable once built, so a single
/// instance can be shared across threads.
class PrimeCache {
 public:
  /// Validates the invariants (ascending, first element 2, all <= limit);
  /// throws InputError on violation. Primality is not re-checked here.
  PrimeCache(std::uint64_t limit, std::vector<std::uint64_t> primes);

  std::uint64_t limit() const noexcept { return limit_; }
  std::span<const std::uint64_t> primes() const noexcept { return primes_; }
  std::size_t count() const noexcept { return primes_.size(); }
  std::uint64_t operator[](std::size_t i) const noexcept { return primes_[i]; }

  // Number of primes <= x (x may be fractional; 0 for x < 2).
  std::size_t count_upto(double x) const noexcept;

  friend bool operator==(const PrimeCache&, const PrimeCache&) = default;

 private:
  std::uint64_t limit_;
  std::vector<std::uint64_t> primes_;
};

struct SieveOptions {
  std::uint64_t segment_size = std::uint64_t{1} << 20;  // values per segment, >= 64
  unsigned workers = 1;
  std::uint64_t max_limit = std::uint64_t{1} << 34;     // memory guardrail
};

/// Segmented sieve of odd numbers over [2, limit]. Output does not depend on
/// segment_size or workers. Throws InputError for limit < 2 or a segment
/// smaller than 64 values, CapacityError when limit exceeds max_limit.
PrimeCache build_cache(std::uint64_t limit, const SieveOptions& options = {});

// Cache file: "NPLC", u32 version, u64 limit, u64 count, count x u64 primes, little-endian.
inline constexpr std::uint32_t kCacheFormatVersion = 1;

struct CacheHeader {
  std::uint32_t version;
  std::uint64_t limit;
  std::uint64_t count;
};

void save_cache(const PrimeCache& cache, const std::filesystem::path& path);
PrimeCache load_cache(const std::filesystem::path& path);
CacheHeader read_cache_header(const std::filesystem::path& path);

/// One element of the prime-power lattice behind psi: value = base^exponent.
struct PrimePowerEvent {
  std::uint64_t value;
  std::uint64_t base;
  double base_log;
  int exponent;
};

/// Streams every prime power p^k <= limit in ascending order.
class PrimePowerStream {
 public:
  /// Throws InsufficientCacheError when limit > cache.limit().
  PrimePowerStream(const PrimeCache& cache, std::uint64_t limit);

  std::optional<PrimePowerEvent> next();

 private:
  std::span<const std::uint64_t> primes_;
  std::size_t prime_index_ = 0;
  std::size_t prime_end_ = 0;
  std::vector<PrimePowerEvent> higher_;  // exponents >= 2, ascending
  std::size_t higher_index_ = 0;
};

std::vector<PrimePowerEvent> prime_powers(const PrimeCache& cache, std::uint64_t limit);

}  // namespace mertenslab
