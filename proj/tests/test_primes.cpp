#include <fstream>
#include <vector>

#include "doctest.h"
#include "mertenslab/error.hpp"
#include "mertenslab/primes.hpp"
#include "oracles.hpp"

using namespace mertenslab;

namespace {

std::vector<std::uint64_t> as_vector(const PrimeCache& c) { return {c.primes().begin(), c.primes().end()}; }

std::vector<char> slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const std::filesystem::path& p, const std::vector<char>& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST_CASE("small sieve") {
  const auto c = build_cache(10);
  CHECK(as_vector(c) == std::vector<std::uint64_t>{2, 3, 5, 7});
  CHECK(c.count() == 4);
  CHECK(c.limit() == 10);
  CHECK(as_vector(build_cache(2)) == std::vector<std::uint64_t>{2});
  CHECK(as_vector(build_cache(3)) == std::vector<std::uint64_t>{2, 3});
}

TEST_CASE("sieve matches trial division up to 1e5") {
  for (std::uint64_t limit : {4ull, 97ull, 100ull, 1024ull, 10'000ull, 65'537ull, 100'000ull}) {
    for (std::uint64_t seg : {64ull, 1000ull, 1ull << 20}) {
      SieveOptions opts;
      opts.segment_size = seg;
      CHECK(as_vector(build_cache(limit, opts)) == oracle::trial_division_primes(limit));
    }
  }
  CHECK(build_cache(10'000).count() == 1229);
}

TEST_CASE("prime count at 1e6 matches a plain sieve") {
  const auto c = build_cache(1'000'000);
  CHECK(c.count() == 78498);
  CHECK(as_vector(c) == oracle::plain_sieve(1'000'000));
  CHECK(c.count_upto(1e6) == 78498);
  CHECK(c.count_upto(10.5) == 4);
  CHECK(c.count_upto(1.0) == 0);
}

TEST_CASE("sieve output is independent of segment size and worker count") {
  const auto reference = build_cache(3'000'017);
  for (std::uint64_t seg : {64ull, 4096ull, 99'999ull, 1ull << 20}) {
    for (unsigned workers : {1u, 3u, 8u}) {
      SieveOptions opts;
      opts.segment_size = seg;
      opts.workers = workers;
      CHECK(build_cache(3'000'017, opts) == reference);
    }
  }
}

TEST_CASE("sieve argument errors") {
  CHECK_THROWS_AS(build_cache(1), InputError);
  SieveOptions tiny;
  tiny.segment_size = 63;
  CHECK_THROWS_AS(build_cache(100, tiny), InputError);
  SieveOptions capped;
  capped.max_limit = 1000;
  try {
    build_cache(1001, capped);
    FAIL("expected CapacityError");
  } catch (const CapacityError& e) {
    CHECK(std::string(e.what()).find("1000") != std::string::npos);
  }
}

TEST_CASE("PrimeCache rejects invalid contents") {
  CHECK_THROWS_AS(PrimeCache(10, {3, 5}), InputError);
  CHECK_THROWS_AS(PrimeCache(10, {2, 3, 11}), InputError);
  CHECK_THROWS_AS(PrimeCache(10, {2, 5, 3}), InputError);
}

TEST_CASE("cache file round trip and corruption") {
  const auto dir = oracle::scratch_dir("primes");
  const auto path = dir / "p.nplc";
  const auto c = build_cache(100);
  save_cache(c, path);
  const auto back = load_cache(path);
  CHECK(back == c);
  CHECK(back.count() == 25);
  const auto h = read_cache_header(path);
  CHECK(h.version == kCacheFormatVersion);
  CHECK(h.limit == 100);
  CHECK(h.count == 25);
  const auto bytes = slurp(path);
  CHECK(bytes.size() == 24 + 25 * 8);

  SUBCASE("bad magic") {
    auto b = bytes;
    b[0] = 'X';
    spit(path, b);
    CHECK_THROWS_AS(load_cache(path), BadMagicError);
  }
  SUBCASE("version mismatch") {
    auto b = bytes;
    b[4] = 9;
    spit(path, b);
    CHECK_THROWS_AS(load_cache(path), VersionMismatchError);
  }
  SUBCASE("truncated mid payload") {
    auto b = bytes;
    b.resize(b.size() - 12);
    spit(path, b);
    CHECK_THROWS_AS(load_cache(path), TruncatedFileError);
  }
  SUBCASE("truncated header") {
    auto b = bytes;
    b.resize(10);
    spit(path, b);
    CHECK_THROWS_AS(load_cache(path), TruncatedFileError);
  }
  SUBCASE("trailing bytes") {
    auto b = bytes;
    b.insert(b.end(), 8, '\0');
    spit(path, b);
    CHECK_THROWS_AS(load_cache(path), PayloadMismatchError);
  }
  SUBCASE("corrupt payload") {
    auto b = bytes;
    b[24 + 8] = 1;  // second prime 3 -> 1
    spit(path, b);
    CHECK_THROWS_AS(load_cache(path), FormatError);
  }
  SUBCASE("missing file") { CHECK_THROWS_AS(load_cache(dir / "absent.nplc"), IoError); }
  std::filesystem::remove_all(dir);
}

TEST_CASE("prime power stream") {
  const auto c = build_cache(1000);
  std::vector<std::uint64_t> values;
  for (const auto& e : prime_powers(c, 10)) values.push_back(e.value);
  CHECK(values == std::vector<std::uint64_t>{2, 3, 4, 5, 7, 8, 9});
  CHECK(prime_powers(c, 1).empty());

  bool found = false;
  for (const auto& e : prime_powers(c, 32)) {
    if (e.value == 32) {
      found = true;
      CHECK(e.exponent == 5);
      CHECK(e.base == 2);
      CHECK(e.base_log == std::log(2.0));
    }
  }
  CHECK(found);

  const auto all = prime_powers(c, 1000);
  std::vector<std::uint64_t> firsts;
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (i) CHECK(all[i].value > all[i - 1].value);
    if (all[i].exponent == 1) firsts.push_back(all[i].value);
  }
  CHECK(firsts == oracle::trial_division_primes(1000));

  PrimePowerStream stream(c, 4);
  CHECK(stream.next()->value == 2);
  CHECK(stream.next()->value == 3);
  CHECK(stream.next()->value == 4);
  CHECK_FALSE(stream.next().has_value());

  CHECK_THROWS_AS(prime_powers(c, 1001), InsufficientCacheError);
}
