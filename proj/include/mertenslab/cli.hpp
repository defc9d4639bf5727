#pragma once

// Command-line front end: cache management, range scans and criteria checks
// with CSV / JSON export. The cmd_* functions are the testable core; run_cli
// parses argv and dispatches to them.

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mertenslab/primes.hpp"
#include "mertenslab/rh_criteria.hpp"

namespace mertenslab {

inline constexpr int kExitOk = 0;
inline constexpr int kExitViolation = 1;  // a bound is violated up to the end of the range
inline constexpr int kExitError = 2;      // usage, I/O or format error
inline constexpr int kExitBudget = 3;     // tolerance or cache budget unmeetable

// Names the directory searched for "primes.nplc" when --cache is not given.
inline constexpr const char* kCacheDirEnv = "MERTENSLAB_CACHE_DIR";

enum class GridMode { gap_endpoints, gap_full, log_spaced };
enum class OutputFormat { csv, json };

struct RunConfig {
  std::optional<std::filesystem::path> cache_path;
  std::uint64_t limit = 0;  // 0: taken from the cache, or derived from the range
  double x_lo = 10.0;
  double x_hi = 1e6;
  GridMode grid_mode = GridMode::gap_endpoints;
  std::size_t grid_n = 100;           // points for log_spaced
  std::size_t max_rows = 1'000'000;   // thinning threshold for gap_endpoints
  double t_max = 0.0;                 // 0: the cache limit
  double eps = 0.1;
  double delta0 = 0.1;
  double tolerance = 0.0;             // absolute bound on H_err and E_err; 0 disables
  unsigned workers = 1;
  std::optional<std::filesystem::path> output_path;
  OutputFormat format = OutputFormat::csv;
  // check-only knobs
  CheckParams check;

  /// Throws InputError describing the first invalid field.
  void validate() const;
};

struct ScanRow {
  double x, theta, delta, phi, b, S, P, R, Q, A, H, H_err, T, T_err, D, E, E_err, F, residual, residual_err;
};

inline constexpr std::array<std::string_view, 20> kScanColumns = {
    "x", "theta", "delta", "phi", "b", "S", "P", "R", "Q", "A",
    "H", "H_err", "T", "T_err", "D", "E", "E_err", "F", "residual", "residual_err"};

/// Locale-independent rendering with 17 significant digits (round-trips exactly).
std::string format_double(double v);
/// Parses what format_double produced; throws InputError otherwise.
double parse_double(std::string_view text);
/// "lo:hi" -> {lo, hi}.
std::pair<double, double> parse_range(std::string_view text);

ScanRow make_scan_row(const Lab& lab, double x, double t_max);
std::vector<double> make_grid(const RunConfig& config, const PrimeCache& cache);

void write_csv(std::ostream& out, std::span<const ScanRow> rows);
std::vector<ScanRow> read_csv(std::istream& in);
void write_json_lines(std::ostream& out, std::span<const ScanRow> rows);
std::string report_to_json(const CriteriaReport& report);
void write_report_csv(std::ostream& out, const CriteriaReport& report);

/// Loads --cache, or a cache from $MERTENSLAB_CACHE_DIR, or sieves one.
/// Throws InsufficientCacheError when a supplied cache is below `required`.
std::shared_ptr<const PrimeCache> resolve_cache(const RunConfig& config, double required);

int cmd_cache_build(std::uint64_t limit, const std::filesystem::path& out_path, unsigned workers,
                    std::ostream& out, std::ostream& err);
int cmd_cache_info(const std::filesystem::path& path, std::ostream& out, std::ostream& err);
int cmd_scan(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_check(std::string_view check_id, const RunConfig& config, std::ostream& out, std::ostream& err);

int run_cli(int argc, const char* const* argv);

}  // namespace mertenslab
