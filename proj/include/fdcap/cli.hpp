#pragma once

// Front end: gain profiles, region sweeps and comparison studies written as
// CSV/JSON files. dB in every file, linear inside.

#include "fdcap/geometry.hpp"
#include "fdcap/linkmodel.hpp"
#include "fdcap/mcgeneral.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace fdcap::cli {

enum class Mode { single, fixed, general_altmax, general_heuristic };
enum class OutputFormat { csv, json };

std::string to_string(Mode mode);
Mode parse_mode(const std::string& name);

struct InlineGainsDb {
  double gamma_bm_db = 0.0;
  double gamma_mb_db = 0.0;
  double gamma_mm_db = 0.0;
  double gamma_bb_db = 0.0;
};

struct RunConfig {
  Mode mode = Mode::single;
  std::optional<std::string> profile;      // CSV path
  std::optional<InlineGainsDb> inline_db;  // K = 1
  int n_points = 21;
  std::vector<double> rb_list;  // overrides n_points when non-empty
  Tolerances tol;
  int restarts = 8;
  std::uint64_t seed = 42;
  int jobs = 1;
  std::string out_dir = ".";
  OutputFormat format = OutputFormat::csv;
  bool debug_hull = false;

  void validate() const;
};

class ProfileError : public std::runtime_error {
 public:
  ProfileError(std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Reads `channel,gamma_bm_db,gamma_mb_db,gamma_mm_db,gamma_bb_db`.
Gains ingest_profile(const std::string& path);
Gains parse_profile(std::istream& in);

void write_profile(std::ostream& out, const Gains& g);
void write_profile(const std::string& path, const Gains& g);

/// Synthetic cancellation profiles: gamma_bb,k / K flat at 0 dB and
/// gamma_mm,k bowl-shaped over the band, deepest at the center.
enum class Preset { narrowband, mid, wideband };

struct BowlShape {
  double center_db;
  double edge_db;
};

BowlShape preset_shape(Preset p);
Preset parse_preset(const std::string& name);
std::string to_string(Preset p);

/// Equal SNR on every channel: gamma_bm,k = K * 10^(snr_bm_db / 10).
Gains synthetic_profile(Preset preset, double snr_bm_db, double snr_mb_db, Index channels = 52);

Gains resolve_gains(const RunConfig& cfg);

/// The sweep: rb_list as given, or n_points evenly spaced on [0, r_bar_b].
std::vector<double> sweep_grid(const RunConfig& cfg, double r_bar_b);

struct RegionRow {
  double rb = 0.0;
  double rm = 0.0;
  TdfdPlan plan;
};

struct RegionResult {
  std::vector<RegionRow> rows;
  RegionBoundary hull;      // breakpoints of the convexified region
  double r_bar_b = 0.0;
  double r_bar_m = 0.0;
  double s_b = 0.0;
  double s_m = 0.0;
  std::optional<std::string> shape_class;
  bool convex = false;
  double max_rate_improvement = 0.0;
  int nonconverged = 0;
  int infeasible = 0;
};

/// Solves the configured mode on `g` at every sweep point.
RegionResult compute_region(const Gains& g, const RunConfig& cfg);

struct CompareRow {
  double rb = 0.0;
  double rm_altmax = 0.0;
  double rm_heuristic = 0.0;
  double gap = 0.0;  // rm_altmax - rm_heuristic
  bool c1c2_restrictive = false;
};

/// Both general solvers on the same sweep, each convexified.
std::vector<CompareRow> compute_compare(const Gains& g, const RunConfig& cfg);

struct RunReport {
  int exit_code = 0;
  bool partial = false;
  std::vector<std::string> files;
  std::string diagnostic;
};

/// region.csv (or region.json) and summary.json in cfg.out_dir.
RunReport run_region(const RunConfig& cfg);

/// compare.csv (or compare.json).
RunReport run_compare(const RunConfig& cfg);

struct SnrGrid {
  double min_db = 0.0;
  double max_db = 50.0;
  double step_db = 5.0;

  std::vector<double> values() const;
};

/// improve.csv: the largest rate improvement of the configured mode over a
/// grid of (gamma_bm, gamma_mb) SNRs, XINRs as configured.
RunReport run_improve(const RunConfig& cfg, const SnrGrid& grid);

std::string format_number(double v);

}  // namespace fdcap::cli
