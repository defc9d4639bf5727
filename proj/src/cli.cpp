#include "mertenslab/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "mertenslab/error.hpp"

namespace mertenslab {

namespace {

std::array<double, 20> fields(const ScanRow& r) {
  return {r.x, r.theta, r.delta, r.phi, r.b, r.S, r.P, r.R, r.Q, r.A,
          r.H, r.H_err, r.T, r.T_err, r.D, r.E, r.E_err, r.F, r.residual, r.residual_err};
}

ScanRow from_fields(const std::array<double, 20>& f) {
  return {f[0],  f[1],  f[2],  f[3],  f[4],  f[5],  f[6],  f[7],  f[8],  f[9],
          f[10], f[11], f[12], f[13], f[14], f[15], f[16], f[17], f[18], f[19]};
}

// Upper bound for the k-th prime (Rosser), k >= 6.
double nth_prime_upper(double k) {
  if (k < 6) return 13.0;
  const double l = std::log(k);
  return k * (l + std::log(l));
}

std::string json_number(double v) { return std::isfinite(v) ? format_double(v) : "null"; }

// Writes to a sibling temporary file and renames it into place on commit;
// an uncommitted output is deleted.
class OutputFile {
 public:
  explicit OutputFile(const std::optional<std::filesystem::path>& target) : target_(target) {
    if (target_) {
      temp_ = *target_;
      temp_ += ".partial";
      file_.open(temp_, std::ios::binary | std::ios::trunc);
      if (!file_) throw IoError("cannot open output file " + temp_.string());
    }
  }
  ~OutputFile() {
    if (target_ && !committed_) {
      file_.close();
      std::error_code ec;
      std::filesystem::remove(temp_, ec);
    }
  }
  std::ostream& stream(std::ostream& fallback) { return target_ ? static_cast<std::ostream&>(file_) : fallback; }
  void commit() {
    if (!target_) return;
    file_.close();
    if (!file_) throw IoError("write failed for " + temp_.string());
    std::filesystem::rename(temp_, *target_);
    committed_ = true;
  }

 private:
  std::optional<std::filesystem::path> target_;
  std::filesystem::path temp_;
  std::ofstream file_;
  bool committed_ = false;
};

template <class Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const BudgetError& e) {
    err << "budget: " << e.what() << '\n';
    return kExitBudget;
  } catch (const InsufficientCacheError& e) {
    err << "budget: " << e.what() << '\n';
    return kExitBudget;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
}

}  // namespace

void RunConfig::validate() const {
  if (!(x_lo > 0.0) || !(x_lo <= x_hi)) throw InputError("range must satisfy 0 < lo <= hi");
  if (grid_mode == GridMode::log_spaced && grid_n == 0) throw InputError("log grid needs at least one point");
  if (max_rows < 2) throw InputError("max rows must be >= 2");
  if (t_max < 0.0) throw InputError("tmax must be non-negative");
  if (!(eps > 0.0 && eps < 0.5)) throw InputError("eps must lie in (0, 0.5)");
  if (!(delta0 > 0.0)) throw InputError("delta0 must be positive");
  if (tolerance < 0.0) throw InputError("tolerance must be non-negative");
  if (workers == 0) throw InputError("workers must be >= 1");
}

std::string format_double(double v) {
  std::array<char, 64> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::general, 17);
  return std::string(buf.data(), res.ptr);
}

double parse_double(std::string_view text) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (!text.empty() && *first == '+') ++first;
  auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last) {
    throw InputError("not a number: '" + std::string(text) + "'");
  }
  return v;
}

std::pair<double, double> parse_range(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) throw InputError("range must look like lo:hi, got '" + std::string(text) + "'");
  return {parse_double(text.substr(0, colon)), parse_double(text.substr(colon + 1))};
}

ScanRow make_scan_row(const Lab& lab, double x, double t_max) {
  const auto c = lab.chebyshev().point(x);
  const auto m = lab.mertens().point(x);
  const auto d = lab.decompose(x, t_max);
  return {x,       c.theta,         c.delta, c.phi,   c.b,   m.S,         m.P,   m.R,
          m.Q,     m.A,             d.H.value, d.H.error_bound, d.T.value, d.T.error_bound, d.D, d.E.value,
          d.E.error_bound, d.F,     d.residual.value, d.residual.error_bound};
}

std::vector<double> make_grid(const RunConfig& config, const PrimeCache& cache) {
  const double lo = std::max(config.x_lo, 3.0);
  const double hi = config.x_hi;
  if (hi < lo) throw InputError("scan range must reach x >= 3");
  if (config.grid_mode == GridMode::log_spaced) {
    std::vector<double> grid;
    const std::size_t n = config.grid_n;
    if (n == 1 || lo == hi) return {lo};
    const double ratio = std::log(hi / lo);
    for (std::size_t i = 0; i < n; ++i) {
      double x = i + 1 == n ? hi : lo * std::exp(ratio * static_cast<double>(i) / static_cast<double>(n - 1));
      if (grid.empty() || x > grid.back()) grid.push_back(x);
    }
    return grid;
  }
  auto points = gap_endpoints(lo, hi, cache);
  if (config.grid_mode == GridMode::gap_full || points.size() <= config.max_rows) return points;
  // Log-uniform thinning: the first endpoint at or beyond each target.
  std::vector<double> thinned;
  const std::size_t n = config.max_rows;
  const double ratio = std::log(hi / lo);
  for (std::size_t i = 0; i < n; ++i) {
    const double target = lo * std::exp(ratio * static_cast<double>(i) / static_cast<double>(n - 1));
    auto it = std::lower_bound(points.begin(), points.end(), target);
    if (it == points.end()) it = std::prev(points.end());
    if (thinned.empty() || *it > thinned.back()) thinned.push_back(*it);
  }
  return thinned;
}

void write_csv(std::ostream& out, std::span<const ScanRow> rows) {
  for (std::size_t i = 0; i < kScanColumns.size(); ++i) out << (i ? "," : "") << kScanColumns[i];
  out << '\n';
  for (const auto& r : rows) {
    const auto f = fields(r);
    for (std::size_t i = 0; i < f.size(); ++i) out << (i ? "," : "") << format_double(f[i]);
    out << '\n';
  }
}

std::vector<ScanRow> read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InputError("empty CSV");
  std::string header;
  for (std::size_t i = 0; i < kScanColumns.size(); ++i) header += (i ? "," : "") + std::string(kScanColumns[i]);
  if (line != header) throw InputError("unexpected CSV header");
  std::vector<ScanRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::array<double, 20> f{};
    std::size_t start = 0;
    for (std::size_t i = 0; i < f.size(); ++i) {
      const std::size_t comma = line.find(',', start);
      const bool last = i + 1 == f.size();
      if (last != (comma == std::string::npos)) throw InputError("CSV row has the wrong number of fields");
      f[i] = parse_double(std::string_view(line).substr(start, last ? std::string::npos : comma - start));
      start = comma + 1;
    }
    rows.push_back(from_fields(f));
  }
  return rows;
}

void write_json_lines(std::ostream& out, std::span<const ScanRow> rows) {
  for (const auto& r : rows) {
    const auto f = fields(r);
    out << '{';
    for (std::size_t i = 0; i < f.size(); ++i) {
      out << (i ? "," : "") << '"' << kScanColumns[i] << "\":" << json_number(f[i]);
    }
    out << "}\n";
  }
}

std::string report_to_json(const CriteriaReport& report) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["check_id"] = std::string(to_string(report.check));
  j["range"] = {report.lo, report.hi};
  j["points_evaluated"] = report.points_evaluated;
  j["violation_count"] = report.violation_count;
  j["onset"] = report.onset ? ordered_json(*report.onset) : ordered_json(nullptr);
  j["violations_persist"] = report.violations_persist();
  j["conditional"] = report.conditional;
  j["note"] = report.note;
  auto stats = ordered_json::array();
  for (const auto& s : report.statistics) {
    stats.push_back({{"name", s.name}, {"min", s.min}, {"argmin", s.argmin}, {"max", s.max}, {"argmax", s.argmax}});
  }
  j["extrema"] = stats;
  auto vs = ordered_json::array();
  for (const auto& v : report.violations) {
    vs.push_back({{"at", v.at}, {"lhs", v.lhs}, {"rhs", v.rhs}, {"condition", v.condition}});
  }
  j["violations"] = vs;
  return j.dump(2);
}

void write_report_csv(std::ostream& out, const CriteriaReport& report) {
  out << "check_id,at,lhs,rhs,condition\n";
  for (const auto& v : report.violations) {
    out << to_string(report.check) << ',' << format_double(v.at) << ',' << format_double(v.lhs) << ','
        << format_double(v.rhs) << ",\"" << v.condition << "\"\n";
  }
}

std::shared_ptr<const PrimeCache> resolve_cache(const RunConfig& config, double required) {
  const double want = std::max(required, static_cast<double>(config.limit));
  auto check_limit = [&](const PrimeCache& c, const std::filesystem::path& from) {
    if (static_cast<double>(c.limit()) < want) {
      throw InsufficientCacheError("cache " + from.string() + " reaches " + std::to_string(c.limit()) +
                                       " but the request needs " + format_double(want),
                                   want);
    }
  };
  if (config.cache_path) {
    auto c = std::make_shared<const PrimeCache>(load_cache(*config.cache_path));
    check_limit(*c, *config.cache_path);
    return c;
  }
  if (const char* dir = std::getenv(kCacheDirEnv); dir != nullptr && *dir != '\0') {
    const auto path = std::filesystem::path(dir) / "primes.nplc";
    std::error_code ec;
    if (std::filesystem::exists(path, ec) &&
        static_cast<double>(read_cache_header(path).limit) >= want) {
      return std::make_shared<const PrimeCache>(load_cache(path));
    }
  }
  SieveOptions opts;
  opts.workers = config.workers;
  return std::make_shared<const PrimeCache>(build_cache(static_cast<std::uint64_t>(std::ceil(want)), opts));
}

int cmd_cache_build(std::uint64_t limit, const std::filesystem::path& out_path, unsigned workers,
                    std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    SieveOptions opts;
    opts.workers = std::max(1u, workers);
    const auto cache = build_cache(limit, opts);
    save_cache(cache, out_path);
    out << "wrote " << out_path.string() << ": limit " << cache.limit() << ", count " << cache.count() << '\n';
    return kExitOk;
  });
}

int cmd_cache_info(const std::filesystem::path& path, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (!std::filesystem::exists(path)) throw IoError("no such cache file: " + path.string());
    const auto cache = load_cache(path);
    out << "file: " << path.string() << "\nversion: " << kCacheFormatVersion << "\nlimit: " << cache.limit()
        << "\ncount: " << cache.count() << '\n';
    return kExitOk;
  });
}

int cmd_scan(const RunConfig& config, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    config.validate();
    double required = std::max(config.x_hi, config.t_max);
    if (!config.cache_path && config.limit == 0) required = std::max(required, 1e6);
    const auto cache = resolve_cache(config, required);
    const double t_max = config.t_max > 0.0 ? config.t_max : static_cast<double>(cache->limit());
    if (config.x_hi > t_max) throw InputError("scan range must end at or below tmax");
    Lab lab(cache);
    const auto grid = make_grid(config, *cache);
    if (config.tolerance > 0.0) lab.tail_T(3.0, 0.0, config.tolerance);
    lab.E_of(grid.front(), t_max);  // builds the quadrature table once, before the workers start

    std::vector<ScanRow> rows(grid.size());
    parallel_chunks(grid.size(), 64, config.workers, [&](std::size_t, std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) rows[i] = make_scan_row(lab, grid[i], t_max);
    });
    if (config.tolerance > 0.0) {
      for (const auto& r : rows) {
        const double worst = std::max(r.H_err, r.E_err);
        if (worst > config.tolerance) {
          throw BudgetError("error bound " + format_double(worst) + " at x = " + format_double(r.x) +
                                " exceeds the tolerance; a larger cache / tmax is required",
                            worst);
        }
      }
    }

    OutputFile file(config.output_path);
    auto& sink = file.stream(out);
    if (config.format == OutputFormat::csv) {
      write_csv(sink, rows);
    } else {
      write_json_lines(sink, rows);
    }
    sink.flush();
    file.commit();
    return kExitOk;
  });
}

int cmd_check(std::string_view check_id, const RunConfig& config, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const CheckId id = parse_check_id(check_id);
    config.validate();
    CheckParams params = config.check;
    params.eps = config.eps;
    params.delta0 = config.delta0;
    params.t_max = config.t_max;
    params.workers = config.workers;

    double required = indexes_by_k(id) ? nth_prime_upper(config.x_hi) : config.x_hi;
    required = std::max({required, config.t_max, params.cutoff});
    const auto cache = resolve_cache(config, required);
    Lab lab(cache);
    const auto report = lab.run_check(id, config.x_lo, config.x_hi, params);

    OutputFile file(config.output_path);
    auto& sink = file.stream(out);
    if (config.format == OutputFormat::json) {
      sink << report_to_json(report) << '\n';
    } else {
      write_report_csv(sink, report);
    }
    sink.flush();
    file.commit();

    auto& summary = config.output_path ? out : err;
    summary << to_string(id) << " [" << format_double(report.lo) << ", " << format_double(report.hi)
            << "]: " << report.points_evaluated << " points, " << report.violation_count << " violations, onset "
            << (report.onset ? format_double(*report.onset) : std::string("none")) << '\n';
    return report.violations_persist() ? kExitViolation : kExitOk;
  });
}

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"mertenslab: remainders of the modified Mertens formula and RH-conditional bound checks"};
  app.require_subcommand(1);

  auto* cache = app.add_subcommand("cache", "build or inspect a prime cache file");
  cache->require_subcommand(1);
  auto* build = cache->add_subcommand("build", "sieve primes up to --limit and save them");
  std::string build_limit;
  std::string build_out;
  unsigned build_workers = 1;
  build->add_option("--limit", build_limit, "largest value to sieve (accepts 1e8)")->required();
  build->add_option("--out", build_out, "output cache file")->required();
  build->add_option("--workers", build_workers, "sieve threads")->default_val(1);
  auto* info = cache->add_subcommand("info", "print the header of a cache file");
  std::string info_path;
  info->add_option("path", info_path, "cache file")->required();

  RunConfig config;
  std::string cache_path, limit_text, range_text = "10:1e6", grid_text = "gap", format_text, out_path;
  std::string a_band_text = "1.5:2.5";
  auto add_common = [&](CLI::App* sub, const char* default_format) {
    sub->add_option("--cache", cache_path, "prime cache file (default: $MERTENSLAB_CACHE_DIR/primes.nplc, else sieve)");
    sub->add_option("--limit", limit_text, "sieve limit when no cache file is used");
    sub->add_option("--range", range_text, "lo:hi (x values; k indices for uk_35/vk_35)")->capture_default_str();
    sub->add_option("--grid", grid_text, "gap | full | log:N")->capture_default_str();
    sub->add_option("--max-rows", config.max_rows, "thinning threshold for the gap grid")->capture_default_str();
    sub->add_option("--tmax", config.t_max, "E truncation point (default: cache limit)");
    sub->add_option("--eps", config.eps, "epsilon of the U/V criteria")->capture_default_str();
    sub->add_option("--delta0", config.delta0, "bound on |b|; narrow_H window is -2 +- 5 delta0")->capture_default_str();
    sub->add_option("--tol", config.tolerance, "absolute tolerance on H_err and E_err (0: none)")->capture_default_str();
    sub->add_option("--workers", config.workers, "worker threads")->capture_default_str();
    sub->add_option("--out", out_path, "output file (default: stdout)");
    sub->add_option("--format", format_text, std::string("csv | json (default ") + default_format + ")");
  };

  auto* scan = app.add_subcommand("scan", "tabulate every quantity over a grid");
  add_common(scan, "csv");
  auto* check = app.add_subcommand("check", "run one bound check over a range");
  std::string check_name;
  check->add_option("check_id", check_name, "robin_13 | koch_22iii | narrow_A_18 | narrow_H_25 | window_D_E_210 | "
                                            "unconditional_211 | cramer_31iii | ingham_prop4 | b_window | uk_35 | vk_35")
      ->required();
  add_common(check, "json");
  check->add_option("--cutoff", config.check.cutoff, "T / U / V truncation point (default: cache limit)");
  check->add_option("--a-band", a_band_text, "narrow_A_18 window lo:hi")->capture_default_str();
  check->add_option("--d-margin", config.check.d_margin, "widening of the D window")->capture_default_str();
  check->add_option("--e-margin", config.check.e_margin, "widening of the E window")->capture_default_str();
  check->add_option("--cramer-bound", config.check.cramer_bound, "bound on cramer(x)/x^2")->capture_default_str();
  check->add_option("--max-listed", config.check.max_listed, "violations listed in the report")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  }

  auto parse_limit = [](const std::string& text) -> std::uint64_t {
    const double v = parse_double(text);
    if (!(v >= 2.0) || v != std::floor(v) || v > 1.8e19) throw InputError("limit must be an integer >= 2");
    return static_cast<std::uint64_t>(v);
  };

  if (*build) {
    std::uint64_t limit = 0;
    const int rc = guarded(std::cerr, [&] {
      limit = parse_limit(build_limit);
      return kExitOk;
    });
    if (rc != kExitOk) return rc;
    return cmd_cache_build(limit, build_out, build_workers, std::cout, std::cerr);
  }
  if (*info) return cmd_cache_info(info_path, std::cout, std::cerr);

  const int rc = guarded(std::cerr, [&] {
    if (!cache_path.empty()) config.cache_path = cache_path;
    if (!limit_text.empty()) config.limit = parse_limit(limit_text);
    std::tie(config.x_lo, config.x_hi) = parse_range(range_text);
    if (!out_path.empty()) config.output_path = out_path;
    if (format_text.empty()) format_text = *scan ? "csv" : "json";
    if (format_text == "csv") {
      config.format = OutputFormat::csv;
    } else if (format_text == "json") {
      config.format = OutputFormat::json;
    } else {
      throw InputError("format must be csv or json");
    }
    if (grid_text == "gap") {
      config.grid_mode = GridMode::gap_endpoints;
    } else if (grid_text == "full") {
      config.grid_mode = GridMode::gap_full;
    } else if (grid_text.rfind("log:", 0) == 0) {
      config.grid_mode = GridMode::log_spaced;
      const double n = parse_double(std::string_view(grid_text).substr(4));
      if (!(n >= 1.0) || n != std::floor(n)) throw InputError("log:N needs a positive integer N");
      config.grid_n = static_cast<std::size_t>(n);
    } else {
      throw InputError("grid must be gap, full or log:N");
    }
    std::tie(config.check.a_lo, config.check.a_hi) = parse_range(a_band_text);
    return kExitOk;
  });
  if (rc != kExitOk) return rc;

  if (*scan) return cmd_scan(config, std::cout, std::cerr);
  try {
    parse_check_id(check_name);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << check->help();
    return kExitError;
  }
  return cmd_check(check_name, config, std::cout, std::cerr);
}

}  // namespace mertenslab
