#include <cstdlib>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "mertenslab/cli.hpp"
#include "mertenslab/error.hpp"
#include "oracles.hpp"

using namespace mertenslab;

namespace {

struct Workspace {
  std::filesystem::path dir = oracle::scratch_dir("cli");
  std::filesystem::path cache6 = dir / "p6.nplc";
  std::filesystem::path cache7 = dir / "p7.nplc";
  Workspace() {
    save_cache(*fixtures::cache(1'000'000), cache6);
    save_cache(*fixtures::cache(10'000'000), cache7);
  }
  ~Workspace() { std::filesystem::remove_all(dir); }
};

Workspace& ws() {
  static Workspace w;
  return w;
}

int run(std::vector<std::string> args) {
  args.insert(args.begin(), "mertenslab");
  std::vector<const char*> argv;
  for (auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("number formatting round-trips bit for bit") {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<std::uint64_t> bits;
  for (int i = 0; i < 100'000; ++i) {
    double v;
    const std::uint64_t b = bits(rng);
    std::memcpy(&v, &b, sizeof v);
    if (!std::isfinite(v)) continue;
    const double back = parse_double(format_double(v));
    CHECK(std::memcmp(&back, &v, sizeof v) == 0);
  }
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(10.0) == "10");
  CHECK(format_double(0.1).find(',') == std::string::npos);
  CHECK(parse_double("1e8") == 1e8);
  CHECK_THROWS_AS(parse_double("1,5"), InputError);
  CHECK_THROWS_AS(parse_double(""), InputError);
  CHECK_THROWS_AS(parse_double("12abc"), InputError);
  CHECK(parse_range("1e3:1e6") == std::pair{1e3, 1e6});
  CHECK_THROWS_AS(parse_range("1e3"), InputError);
}

TEST_CASE("config validation") {
  RunConfig c;
  CHECK_NOTHROW(c.validate());
  c.x_lo = 100;
  c.x_hi = 10;
  CHECK_THROWS_AS(c.validate(), InputError);
  RunConfig w;
  w.workers = 0;
  CHECK_THROWS_AS(w.validate(), InputError);
}

TEST_CASE("cache build and info") {
  const auto path = ws().dir / "built.nplc";
  CHECK(run({"cache", "build", "--limit", "1000000", "--out", path.string()}) == kExitOk);
  CHECK(load_cache(path).count() == 78498);
  std::ostringstream out, err;
  CHECK(cmd_cache_info(path, out, err) == kExitOk);
  CHECK(out.str().find("limit: 1000000") != std::string::npos);
  CHECK(out.str().find("count: 78498") != std::string::npos);
  CHECK(cmd_cache_info(ws().dir / "absent.nplc", out, err) == kExitError);
  CHECK(run({"cache", "info", (ws().dir / "absent.nplc").string()}) == kExitError);

  std::ofstream(ws().dir / "junk.nplc") << "not a cache file at all, certainly not";
  std::ostringstream e2;
  CHECK(cmd_cache_info(ws().dir / "junk.nplc", out, e2) == kExitError);
  CHECK(e2.str().find("magic") != std::string::npos);
}

TEST_CASE("scan row at x = 10 matches the modules") {
  RunConfig c;
  c.cache_path = ws().cache6;
  c.x_lo = c.x_hi = 10.0;
  c.grid_mode = GridMode::log_spaced;
  c.grid_n = 1;
  std::ostringstream out, err;
  REQUIRE(cmd_scan(c, out, err) == kExitOk);
  std::istringstream in(out.str());
  const auto rows = read_csv(in);
  REQUIRE(rows.size() == 1);
  const auto& r = rows[0];
  CHECK(r.x == 10.0);
  CHECK(std::abs(r.theta - 5.3471075) < 1e-6);
  CHECK(std::abs(r.phi - (-22.8796165)) < 1e-6);
  CHECK(std::abs(r.b - (-0.0568504)) < 1e-7);
  CHECK(std::abs(r.S - 1.4759066) < 1e-7);
  CHECK(std::abs(r.P - 1.1761905) < 1e-7);
  CHECK(std::abs(r.R - 0.0646585) < 1e-7);
  CHECK(std::abs(r.T - 0.0160024) < 1e-6);
  CHECK(std::abs(r.residual) <= r.residual_err);
  CHECK(r.F <= 0.0);
  const Lab lab(fixtures::cache(1'000'000));
  const auto expect = make_scan_row(lab, 10.0, 1e6);
  CHECK(r.H == expect.H);
  CHECK(r.E == expect.E);
  CHECK(r.D == expect.D);
}

TEST_CASE("log grid has the requested size") {
  RunConfig c;
  c.cache_path = ws().cache7;
  c.x_lo = 1e3;
  c.x_hi = 1e7;
  c.grid_mode = GridMode::log_spaced;
  c.grid_n = 5;
  const auto grid = make_grid(c, *fixtures::cache(10'000'000));
  REQUIRE(grid.size() == 5);
  CHECK(grid.front() == 1e3);
  CHECK(grid.back() == 1e7);
  for (std::size_t i = 1; i < grid.size(); ++i) CHECK(grid[i] > grid[i - 1]);

  std::ostringstream out, err;
  c.format = OutputFormat::json;
  REQUIRE(cmd_scan(c, out, err) == kExitOk);
  std::istringstream lines(out.str());
  std::string line;
  double prev = 0;
  int n = 0;
  while (std::getline(lines, line)) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j.size() == kScanColumns.size());
    CHECK(j["x"].get<double>() > prev);
    prev = j["x"].get<double>();
    ++n;
  }
  CHECK(n == 5);
}

TEST_CASE("gap grid thinning") {
  RunConfig c;
  c.x_lo = 1e3;
  c.x_hi = 1e6;
  c.max_rows = 1000;
  const auto& cache = *fixtures::cache(1'000'000);
  const auto thin = make_grid(c, cache);
  CHECK(thin.size() <= 1000);
  CHECK(thin.size() > 900);
  const auto all = gap_endpoints(1e3, 1e6, cache);
  for (double x : thin) CHECK(std::binary_search(all.begin(), all.end(), x));
  c.grid_mode = GridMode::gap_full;
  CHECK(make_grid(c, cache).size() == all.size());
}

TEST_CASE("scan output is identical for 1 and 8 workers") {
  RunConfig c;
  c.cache_path = ws().cache6;
  c.x_lo = 1e5;
  c.x_hi = 1e6;
  c.max_rows = 10'000;
  std::ostringstream a, b, err;
  REQUIRE(cmd_scan(c, a, err) == kExitOk);
  c.workers = 8;
  REQUIRE(cmd_scan(c, b, err) == kExitOk);
  CHECK(a.str() == b.str());
  std::istringstream in(a.str());
  const auto rows = read_csv(in);
  CHECK(rows.size() >= 9000);
  CHECK(rows.size() <= 10'000);

  std::ostringstream again;
  write_csv(again, rows);
  CHECK(again.str() == a.str());
}

TEST_CASE("scan budget failures exit 3 and leave no output") {
  const auto out_path = ws().dir / "scan.csv";
  RunConfig c;
  c.cache_path = ws().cache6;
  c.x_lo = 10;
  c.x_hi = 1e4;
  c.tolerance = 1e-12;
  c.output_path = out_path;
  std::ostringstream out, err;
  CHECK(cmd_scan(c, out, err) == kExitBudget);
  CHECK_FALSE(std::filesystem::exists(out_path));
  CHECK_FALSE(std::filesystem::exists(out_path.string() + ".partial"));

  RunConfig small;
  small.cache_path = ws().cache6;
  small.x_lo = 10;
  small.x_hi = 2e6;
  CHECK(cmd_scan(small, out, err) == kExitBudget);

  c.tolerance = 1e-4;
  CHECK(cmd_scan(c, out, err) == kExitOk);
  CHECK(std::filesystem::exists(out_path));
}

TEST_CASE("check exit codes and report contents") {
  const auto cache = ws().cache6.string();
  CHECK(run({"check", "koch_22iii", "--range", "1e3:1e6", "--cache", cache, "--out",
             (ws().dir / "koch.json").string()}) == kExitOk);
  const auto koch = nlohmann::json::parse(read_file(ws().dir / "koch.json"));
  CHECK(koch["check_id"] == "koch_22iii");
  CHECK(koch["violation_count"] == 0);
  CHECK(koch["onset"].get<double>() == 1e3);

  const auto ingham_path = ws().dir / "ingham.json";
  CHECK(run({"check", "ingham_prop4", "--range", "10:1e6", "--cache", cache, "--out", ingham_path.string()}) ==
        kExitOk);
  const auto ingham = nlohmann::json::parse(read_file(ingham_path));
  CHECK(ingham["violation_count"].get<int>() > 0);
  CHECK(ingham["violations"][0]["at"].get<double>() == 10.0);
  CHECK(ingham["onset"].get<double>() < 1e3);
  CHECK(ingham["extrema"][0]["name"] == "psi_primitive_over_x32");

  // shortest round-trip doubles reparse exactly
  const Lab lab(fixtures::cache(1'000'000));
  const auto report = lab.run_check(CheckId::ingham_prop4, 10.0, 1e6);
  CHECK(ingham["extrema"][0]["max"].get<double>() == report.statistics[0].max);

  CHECK(run({"check", "cramer_31iii", "--range", "1e3:1e6", "--cache", cache, "--cramer-bound", "0.001", "--out",
             (ws().dir / "c.json").string()}) == kExitViolation);
  CHECK(run({"check", "no_such_check", "--cache", cache}) == kExitError);
  CHECK(run({"check", "koch_22iii", "--range", "10:2e6", "--cache", cache}) == kExitBudget);
  CHECK(run({"check", "koch_22iii", "--range", "oops", "--cache", cache}) == kExitError);
  CHECK(run({"check", "koch_22iii", "--cache", (ws().dir / "absent.nplc").string()}) == kExitError);
  CHECK(run({"check", "koch_22iii", "--bogus-flag"}) == kExitError);
  CHECK(run({"--help"}) == kExitOk);

  const auto csv_path = ws().dir / "ingham.csv";
  CHECK(run({"check", "ingham_prop4", "--range", "10:1e4", "--cache", cache, "--format", "csv", "--out",
             csv_path.string()}) == kExitOk);
  const auto csv = read_file(csv_path);
  CHECK(csv.rfind("check_id,at,lhs,rhs,condition\n", 0) == 0);
  CHECK(csv.find("ingham_prop4,10,") != std::string::npos);
}

TEST_CASE("cache directory from the environment") {
  const auto dir = ws().dir / "envcache";
  std::filesystem::create_directories(dir);
  save_cache(build_cache(200'000), dir / "primes.nplc");
  ::setenv(kCacheDirEnv, dir.c_str(), 1);
  RunConfig c;
  CHECK(resolve_cache(c, 1e5)->limit() == 200'000);
  // too small: a fresh sieve covers the request instead
  CHECK(resolve_cache(c, 3e5)->limit() == 300'000);
  // an explicit cache wins over the environment
  c.cache_path = ws().cache6;
  CHECK(resolve_cache(c, 1e5)->limit() == 1'000'000);
  ::unsetenv(kCacheDirEnv);
  RunConfig none;
  CHECK(resolve_cache(none, 5e4)->limit() == 50'000);
  c.cache_path = ws().cache6;
  CHECK_THROWS_AS(resolve_cache(c, 2e6), InsufficientCacheError);
}
