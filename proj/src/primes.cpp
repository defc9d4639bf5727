#include "mertenslab/primes.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <string>

#include "mertenslab/error.hpp"
#include "mertenslab/numeric.hpp"

namespace mertenslab {

namespace {

constexpr std::array<char, 4> kMagic = {'N', 'P', 'L', 'C'};
constexpr std::size_t kHeaderBytes = 4 + 4 + 8 + 8;

std::uint64_t isqrt(std::uint64_t n) {
  auto r = static_cast<std::uint64_t>(std::sqrt(static_cast<long double>(n)));
  while (r > 0 && r * r > n) --r;
  while ((r + 1) * (r + 1) <= n) ++r;
  return r;
}

// Plain sieve for the base primes up to sqrt(limit).
std::vector<std::uint64_t> small_primes(std::uint64_t n) {
  std::vector<std::uint64_t> out;
  if (n < 2) return out;
  std::vector<bool> composite(n + 1, false);
  for (std::uint64_t i = 2; i <= n; ++i) {
    if (composite[i]) continue;
    out.push_back(i);
    for (std::uint64_t j = i * i; j <= n; j += i) composite[j] = true;
  }
  return out;
}

// Sieves the odd values of [lo, hi) against the odd base primes.
std::vector<std::uint64_t> sieve_segment(std::uint64_t lo, std::uint64_t hi,
                                         std::span<const std::uint64_t> base) {
  std::vector<std::uint64_t> found;
  if (lo <= 2 && 2 < hi) found.push_back(2);
  const std::uint64_t first_odd = std::max<std::uint64_t>(lo | 1u, 3);
  if (first_odd >= hi) return found;
  const std::uint64_t slots = (hi - first_odd + 1) / 2;
  std::vector<std::uint8_t> is_prime(slots, 1);
  for (std::uint64_t q : base) {
    if (q == 2) continue;
    if (q * q >= hi) break;
    std::uint64_t start = std::max(q * q, (first_odd + q - 1) / q * q);
    if (start % 2 == 0) start += q;
    for (std::uint64_t v = start; v < hi; v += 2 * q) is_prime[(v - first_odd) / 2] = 0;
  }
  for (std::uint64_t i = 0; i < slots; ++i) {
    if (is_prime[i]) found.push_back(first_odd + 2 * i);
  }
  return found;
}

void put_u32(std::vector<char>& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::vector<char>& buf, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint64_t get_le(const char* p, int bytes) {
  std::uint64_t v = 0;
  for (int i = bytes - 1; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(p[i]);
  return v;
}

struct ParsedHeader {
  CacheHeader header;
  std::uintmax_t file_size;
};

ParsedHeader parse_header(std::ifstream& in, const std::filesystem::path& path) {
  std::error_code ec;
  const auto size = std::filesystem::file_size(path, ec);
  if (ec) throw IoError("cannot stat cache file " + path.string() + ": " + ec.message());
  std::array<char, kHeaderBytes> raw{};
  in.read(raw.data(), static_cast<std::streamsize>(std::min<std::uintmax_t>(size, kHeaderBytes)));
  if (size >= kMagic.size() && !std::equal(kMagic.begin(), kMagic.end(), raw.begin())) {
    throw BadMagicError("not a prime cache file (bad magic): " + path.string());
  }
  if (size < kHeaderBytes) throw TruncatedFileError("cache file truncated inside header: " + path.string());
  CacheHeader h{};
  h.version = static_cast<std::uint32_t>(get_le(raw.data() + 4, 4));
  h.limit = get_le(raw.data() + 8, 8);
  h.count = get_le(raw.data() + 16, 8);
  if (h.version != kCacheFormatVersion) {
    throw VersionMismatchError("unsupported cache format version " + std::to_string(h.version) +
                               " (expected " + std::to_string(kCacheFormatVersion) + ")");
  }
  return {h, size};
}

}  // namespace

PrimeCache::PrimeCache(std::uint64_t limit, std::vector<std::uint64_t> primes)
    : limit_(limit), primes_(std::move(primes)) {
  if (limit_ < 2) throw InputError("PrimeCache: limit must be >= 2");
  if (primes_.empty() || primes_.front() != 2) throw InputError("PrimeCache: first prime must be 2");
  if (primes_.back() > limit_) throw InputError("PrimeCache: prime exceeds limit");
  if (std::adjacent_find(primes_.begin(), primes_.end(), std::greater_equal<>()) != primes_.end()) {
    throw InputError("PrimeCache: primes must be strictly increasing");
  }
}

std::size_t PrimeCache::count_upto(double x) const noexcept {
  if (!(x >= 2.0)) return 0;
  if (x >= static_cast<double>(primes_.back())) return primes_.size();
  const auto n = static_cast<std::uint64_t>(std::floor(x));
  return static_cast<std::size_t>(std::upper_bound(primes_.begin(), primes_.end(), n) - primes_.begin());
}

PrimeCache build_cache(std::uint64_t limit, const SieveOptions& options) {
  if (limit < 2) throw InputError("build_cache: limit must be >= 2");
  if (options.segment_size < 64) throw InputError("build_cache: segment_size must be >= 64");
  if (limit > options.max_limit) {
    throw CapacityError("build_cache: limit " + std::to_string(limit) +
                        " exceeds the configured sieve budget max_limit = " +
                        std::to_string(options.max_limit));
  }
  const std::uint64_t segment = options.segment_size & ~std::uint64_t{1};
  const auto base = small_primes(isqrt(limit));
  const std::uint64_t end = limit + 1;
  const std::size_t segments = static_cast<std::size_t>((end + segment - 1) / segment);

  std::vector<std::vector<std::uint64_t>> pieces(segments);
  parallel_chunks(segments, segments, std::max(1u, options.workers),
                  [&](std::size_t, std::size_t b, std::size_t e) {
                    for (std::size_t s = b; s < e; ++s) {
                      const std::uint64_t lo = s * segment;
                      pieces[s] = sieve_segment(lo, std::min(lo + segment, end), base);
                    }
                  });

  std::size_t total = 0;
  for (const auto& p : pieces) total += p.size();
  std::vector<std::uint64_t> primes;
  primes.reserve(total);
  for (auto& p : pieces) {
    primes.insert(primes.end(), p.begin(), p.end());
    std::vector<std::uint64_t>().swap(p);
  }
  return PrimeCache(limit, std::move(primes));
}

void save_cache(const PrimeCache& cache, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open cache file for writing: " + path.string());
  std::vector<char> buf;
  buf.insert(buf.end(), kMagic.begin(), kMagic.end());
  put_u32(buf, kCacheFormatVersion);
  put_u64(buf, cache.limit());
  put_u64(buf, cache.count());
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));

  constexpr std::size_t kBatch = 1 << 16;
  const auto primes = cache.primes();
  for (std::size_t i = 0; i < primes.size(); i += kBatch) {
    buf.clear();
    const std::size_t stop = std::min(primes.size(), i + kBatch);
    for (std::size_t j = i; j < stop; ++j) put_u64(buf, primes[j]);
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  }
  if (!out) throw IoError("write failed for cache file: " + path.string());
}

CacheHeader read_cache_header(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open cache file: " + path.string());
  return parse_header(in, path).header;
}

PrimeCache load_cache(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open cache file: " + path.string());
  const auto [h, size] = parse_header(in, path);
  const std::uintmax_t payload = size - kHeaderBytes;
  if (payload / 8 < h.count) {
    throw TruncatedFileError("cache file truncated: header announces " + std::to_string(h.count) +
                             " primes, payload holds " + std::to_string(payload / 8));
  }
  if (payload % 8 != 0 || payload / 8 != h.count) {
    throw PayloadMismatchError("cache payload length disagrees with count (" + std::to_string(h.count) +
                               " announced, " + std::to_string(payload / 8) + " present)");
  }

  std::vector<std::uint64_t> primes(h.count);
  std::vector<char> buf;
  constexpr std::size_t kBatch = 1 << 16;
  for (std::size_t i = 0; i < primes.size(); i += kBatch) {
    const std::size_t n = std::min(primes.size() - i, kBatch);
    buf.resize(n * 8);
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!in) throw TruncatedFileError("cache file truncated while reading payload");
    for (std::size_t j = 0; j < n; ++j) primes[i + j] = get_le(buf.data() + 8 * j, 8);
  }
  try {
    return PrimeCache(h.limit, std::move(primes));
  } catch (const InputError& e) {
    throw PayloadMismatchError(std::string("corrupt cache payload: ") + e.what());
  }
}

PrimePowerStream::PrimePowerStream(const PrimeCache& cache, std::uint64_t limit)
    : primes_(cache.primes()) {
  if (limit > cache.limit()) {
    throw InsufficientCacheError("prime power stream up to " + std::to_string(limit) +
                                     " needs a cache of that limit; cache limit is " +
                                     std::to_string(cache.limit()),
                                 static_cast<double>(limit));
  }
  prime_end_ = static_cast<std::size_t>(
      std::upper_bound(primes_.begin(), primes_.end(), limit) - primes_.begin());
  for (std::size_t i = 0; i < prime_end_; ++i) {
    const std::uint64_t p = primes_[i];
    if (p > limit / p) break;
    const double lp = std::log(static_cast<double>(p));
    std::uint64_t v = p * p;
    for (int k = 2;; ++k) {
      higher_.push_back({v, p, lp, k});
      if (v > limit / p) break;
      v *= p;
    }
  }
  std::sort(higher_.begin(), higher_.end(),
            [](const PrimePowerEvent& a, const PrimePowerEvent& b) { return a.value < b.value; });
}

std::optional<PrimePowerEvent> PrimePowerStream::next() {
  const bool have_prime = prime_index_ < prime_end_;
  const bool have_higher = higher_index_ < higher_.size();
  if (!have_prime && !have_higher) return std::nullopt;
  if (have_prime && (!have_higher || primes_[prime_index_] < higher_[higher_index_].value)) {
    const std::uint64_t p = primes_[prime_index_++];
    return PrimePowerEvent{p, p, std::log(static_cast<double>(p)), 1};
  }
  return higher_[higher_index_++];
}

std::vector<PrimePowerEvent> prime_powers(const PrimeCache& cache, std::uint64_t limit) {
  PrimePowerStream stream(cache, limit);
  std::vector<PrimePowerEvent> out;
  while (auto e = stream.next()) out.push_back(*e);
  return out;
}

}  // namespace mertenslab
