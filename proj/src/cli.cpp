#include "fdcap/cli.hpp"

#include "fdcap/detail/parallel.hpp"
#include "fdcap/mcfixed.hpp"
#include "fdcap/singlechannel.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace fdcap::cli {

using nlohmann::json;

namespace {

const char* const kProfileHeader = "channel,gamma_bm_db,gamma_mb_db,gamma_mm_db,gamma_bb_db";

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  for (auto& s : out) {
    const auto b = s.find_first_not_of(" \t");
    const auto e = s.find_last_not_of(" \t");
    s = b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  }
  return out;
}

double parse_number(const std::string& cell, std::size_t line, const std::string& column) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (cell.empty() || ec != std::errc() || ptr != last || !std::isfinite(v))
    throw ProfileError(line, "column " + column + ": '" + cell + "' is not a number");
  return v;
}

std::string csv_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += "\"";
  return out;
}

json alloc_json(const std::optional<Allocation>& a) {
  if (!a) return nullptr;
  json j;
  j["alpha_b"] = std::vector<double>(a->alpha_b.data(), a->alpha_b.data() + a->alpha_b.size());
  j["alpha_m"] = std::vector<double>(a->alpha_m.data(), a->alpha_m.data() + a->alpha_m.size());
  return j;
}

json plan_allocations(const TdfdPlan& plan) {
  if (plan.mode == OperatingMode::PureFD) return alloc_json(plan.first.alloc);
  json j;
  j["first"] = alloc_json(plan.first.alloc);
  j["second"] = alloc_json(plan.second.alloc);
  return j;
}

double max_improvement(const std::vector<BoundaryPoint>& pts, double r_bar_b, double r_bar_m) {
  if (!(r_bar_b > 0.0) || !(r_bar_m > 0.0)) return 0.0;
  double best = 0.0;
  for (const auto& p : pts) best = std::max(best, rate_improvement({p.r_b, p.r_m}, r_bar_b, r_bar_m));
  return best;
}

// Region vertices must dominate every sample and bend the right way.
void check_hull(const RegionBoundary& hull, const std::vector<BoundaryPoint>& samples, double eps) {
  if (!hull.is_convex(1e-9)) throw std::logic_error("debug hull: hull is not concave");
  for (const auto& p : samples) {
    if (p.r_b < hull.points.front().r_b || p.r_b > hull.points.back().r_b) continue;
    if (interpolate_rm(hull, p.r_b) < p.r_m - 2.0 * eps) {
      std::ostringstream os;
      os << "debug hull: sample (" << p.r_b << ", " << p.r_m << ") lies above the hull";
      throw std::logic_error(os.str());
    }
  }
}

std::vector<double> clamp_grid(std::vector<double> grid, double r_bar_b) {
  for (double& x : grid) {
    if (x < 0.0 || x > r_bar_b * (1.0 + 1e-12) + 1e-15) {
      std::ostringstream os;
      os << "rb value " << x << " outside [0, " << r_bar_b << "]";
      throw std::out_of_range(os.str());
    }
    x = std::min(x, r_bar_b);
  }
  return grid;
}

AltMaxOptions altmax_options(const RunConfig& cfg) {
  AltMaxOptions opt;
  opt.restarts = cfg.restarts;
  opt.seed = cfg.seed;
  return opt;
}

RegionResult single_region(const Gains& g, const RunConfig& cfg) {
  if (g.channels() != 1) throw std::invalid_argument("single mode needs exactly one channel");
  const ConvexifiedRegion region(g, cfg.tol);
  RegionResult out;
  out.r_bar_b = region.r_bar_b();
  out.r_bar_m = region.r_bar_m();
  out.s_b = region.corner().s_b;
  out.s_m = region.corner().s_m;
  out.shape_class = to_string(classify_shape_rm(g).kind);
  out.convex = region_is_convex(g);
  out.hull.points = region.vertices();
  out.hull.source = RegionSource::tdfd;
  const auto grid = clamp_grid(sweep_grid(cfg, out.r_bar_b), out.r_bar_b);
  if (cfg.debug_hull) region.check_against_dense_hull(grid);
  out.rows.resize(grid.size());
  detail::parallel_for(grid.size(), cfg.jobs, [&](std::size_t i) {
    const TdfdResult r = region.evaluate(grid[i]);
    out.rows[i] = {grid[i], r.r_m, r.plan};
  });
  out.max_rate_improvement = max_improvement(out.hull.points, out.r_bar_b, out.r_bar_m);
  return out;
}

RegionResult fixed_region(const Gains& g, const RunConfig& cfg) {
  RegionResult out;
  out.r_bar_b = fixed_r_bar_b(g);
  out.r_bar_m = fixed_r_bar_m(g);
  const CornerRates c = mc_corner_rates(g);
  out.s_b = c.s_b;
  out.s_m = c.s_m;
  const RegionBoundary dense = fd_region_fixed(g, 257, cfg.tol, {true, 4096});
  out.hull = upper_hull(dense.points);
  out.hull.source = RegionSource::tdfd;
  out.convex = true;
  for (const auto& p : dense.points)
    if (interpolate_rm(out.hull, p.r_b) > p.r_m + 2.0 * cfg.tol.eps_rate) out.convex = false;
  if (cfg.debug_hull) check_hull(out.hull, dense.points, cfg.tol.eps_rate);
  const auto grid = clamp_grid(sweep_grid(cfg, out.r_bar_b), out.r_bar_b);
  out.rows.resize(grid.size());
  detail::parallel_for(grid.size(), cfg.jobs, [&](std::size_t i) {
    const McFindResult fd = mcfind_rm(g, grid[i], cfg.tol);
    MixResult mix = mix_for_target(out.hull, grid[i]);
    if (fd.r_m >= mix.r_m - 2.0 * cfg.tol.eps_rate) {
      // the frontier itself is on the hull here
      mix.r_m = std::max(mix.r_m, fd.r_m);
      mix.plan = {OperatingMode::PureFD, {grid[i], fd.r_m, OperatingMode::PureFD, fd.alloc}, {}, 1.0};
    }
    out.rows[i] = {grid[i], mix.r_m, mix.plan};
  });
  out.max_rate_improvement = max_improvement(out.hull.points, out.r_bar_b, out.r_bar_m);
  return out;
}

RegionResult general_region(const Gains& g, const RunConfig& cfg, GeneralMethod method) {
  RegionResult out;
  const AltMaxOptions opt = altmax_options(cfg);
  const auto hd = max_rates(g, cfg.tol);
  out.r_bar_b = hd.r_bar_b;
  out.r_bar_m = hd.r_bar_m;
  const SumRateResult corner = sum_rate_max(g, cfg.tol, opt);
  out.s_b = corner.corner.s_b;
  out.s_m = corner.corner.s_m;
  const auto grid = clamp_grid(sweep_grid(cfg, out.r_bar_b), out.r_bar_b);
  const GeneralRegion region = tdfd_region_general(g, grid, method, corner, cfg.tol, opt, cfg.jobs);
  out.hull = region.hull;
  out.nonconverged = region.nonconverged_runs;
  out.infeasible = region.infeasible_runs;
  out.convex = true;
  for (const auto& p : region.raw)
    if (interpolate_rm(out.hull, p.r_b) > p.r_m + 2.0 * cfg.tol.eps_rate) out.convex = false;
  if (cfg.debug_hull) check_hull(out.hull, region.raw, cfg.tol.eps_rate);
  for (double rb : grid) {
    const MixResult mix = mix_for_target(out.hull, rb);
    out.rows.push_back({rb, mix.r_m, mix.plan});
  }
  out.max_rate_improvement = max_improvement(out.hull.points, out.r_bar_b, out.r_bar_m);
  return out;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir + ": " + ec.message());
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  return f;
}

std::string join(const std::string& dir, const std::string& file) {
  return (std::filesystem::path(dir) / file).string();
}

json summary_json(const RegionResult& r, const RunConfig& cfg, std::size_t points) {
  json j;
  j["mode"] = to_string(cfg.mode);
  j["r_bar_b"] = r.r_bar_b;
  j["r_bar_m"] = r.r_bar_m;
  j["s_b"] = r.s_b;
  j["s_m"] = r.s_m;
  j["shape_class"] = r.shape_class ? json(*r.shape_class) : json(nullptr);
  j["convex"] = r.convex;
  j["max_rate_improvement"] = r.max_rate_improvement;
  j["seed"] = cfg.seed;
  j["solver_stats"] = {{"points", points},
                       {"hull_vertices", r.hull.points.size()},
                       {"nonconverged", r.nonconverged},
                       {"restricted_infeasible", r.infeasible},
                       {"restarts", cfg.restarts},
                       {"eps_rate", cfg.tol.eps_rate}};
  j["partial"] = r.nonconverged > 0;
  return j;
}

RunReport failure(const std::exception& e) {
  RunReport r;
  r.exit_code = 1;
  r.diagnostic = e.what();
  return r;
}

}  // namespace

std::string to_string(Mode mode) {
  switch (mode) {
    case Mode::single: return "single";
    case Mode::fixed: return "fixed";
    case Mode::general_altmax: return "general-altmax";
    case Mode::general_heuristic: return "general-heuristic";
  }
  return "?";
}

Mode parse_mode(const std::string& name) {
  if (name == "single") return Mode::single;
  if (name == "fixed") return Mode::fixed;
  if (name == "general-altmax") return Mode::general_altmax;
  if (name == "general-heuristic") return Mode::general_heuristic;
  throw std::invalid_argument("unknown mode '" + name + "'");
}

void RunConfig::validate() const {
  if (profile.has_value() == inline_db.has_value())
    throw std::invalid_argument("give exactly one gains source: a profile file or inline dB values");
  if (rb_list.empty() && n_points < 2) throw std::invalid_argument("points must be >= 2");
  if (restarts < 1) throw std::invalid_argument("restarts must be >= 1");
  if (jobs < 1) throw std::invalid_argument("jobs must be >= 1");
  tol.validate();
}

ProfileError::ProfileError(std::size_t line, const std::string& what)
    : std::runtime_error("profile line " + std::to_string(line) + ": " + what), line_(line) {}

Gains parse_profile(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  std::map<std::string, std::size_t> col;
  const std::vector<std::string> required = split_csv(kProfileHeader);
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) break;
  }
  if (line.empty()) throw ProfileError(lineno, "missing header");
  const auto header = split_csv(line);
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  for (const auto& name : required)
    if (!col.count(name)) throw ProfileError(lineno, "missing column " + name);

  std::vector<double> bm, mb, mm, bb;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size())
      throw ProfileError(lineno, "expected " + std::to_string(header.size()) + " cells, got " +
                                     std::to_string(cells.size()));
    const double ch = parse_number(cells[col["channel"]], lineno, "channel");
    const double expect = static_cast<double>(bm.size() + 1);
    if (ch != expect)
      throw ProfileError(lineno, "channel " + cells[col["channel"]] + " breaks the sequence 1..K");
    bm.push_back(parse_number(cells[col["gamma_bm_db"]], lineno, "gamma_bm_db"));
    mb.push_back(parse_number(cells[col["gamma_mb_db"]], lineno, "gamma_mb_db"));
    mm.push_back(parse_number(cells[col["gamma_mm_db"]], lineno, "gamma_mm_db"));
    bb.push_back(parse_number(cells[col["gamma_bb_db"]], lineno, "gamma_bb_db"));
  }
  if (bm.empty()) throw ProfileError(lineno, "no channel rows");
  auto arr = [](const std::vector<double>& v) {
    return ArrayXd(Eigen::Map<const ArrayXd>(v.data(), static_cast<Index>(v.size())));
  };
  return Gains::from_db(arr(bm), arr(mb), arr(mm), arr(bb));
}

Gains ingest_profile(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open profile " + path);
  return parse_profile(f);
}

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_profile(std::ostream& out, const Gains& g) {
  g.validate();
  out << kProfileHeader << '\n';
  for (Index k = 0; k < g.channels(); ++k) {
    out << (k + 1) << ',' << format_number(linear_to_db(g.gamma_bm[k])) << ','
        << format_number(linear_to_db(g.gamma_mb[k])) << ','
        << format_number(linear_to_db(g.gamma_mm[k])) << ','
        << format_number(linear_to_db(g.gamma_bb[k])) << '\n';
  }
}

void write_profile(const std::string& path, const Gains& g) {
  std::ofstream f = open_out(path);
  write_profile(f, g);
}

BowlShape preset_shape(Preset p) {
  switch (p) {
    case Preset::narrowband: return {15.0, 39.0};
    case Preset::mid: return {15.0, 32.5};
    case Preset::wideband: return {15.0, 25.0};
  }
  return {15.0, 25.0};
}

Preset parse_preset(const std::string& name) {
  if (name == "narrowband") return Preset::narrowband;
  if (name == "mid") return Preset::mid;
  if (name == "wideband") return Preset::wideband;
  throw std::invalid_argument("unknown preset '" + name + "'");
}

std::string to_string(Preset p) {
  switch (p) {
    case Preset::narrowband: return "narrowband";
    case Preset::mid: return "mid";
    case Preset::wideband: return "wideband";
  }
  return "?";
}

Gains synthetic_profile(Preset preset, double snr_bm_db, double snr_mb_db, Index channels) {
  if (channels < 1) throw std::invalid_argument("synthetic_profile: need at least one channel");
  const BowlShape s = preset_shape(preset);
  const double k = static_cast<double>(channels);
  Gains g;
  g.gamma_bb = ArrayXd::Constant(channels, k);
  g.gamma_bm = ArrayXd::Constant(channels, k * db_to_linear(snr_bm_db));
  g.gamma_mb = ArrayXd::Constant(channels, k * db_to_linear(snr_mb_db));
  g.gamma_mm.resize(channels);
  for (Index i = 0; i < channels; ++i) {
    // u runs from -1 at the lower band edge to +1 at the upper one
    const double u = channels == 1 ? 0.0 : -1.0 + 2.0 * static_cast<double>(i) / (k - 1.0);
    g.gamma_mm[i] = db_to_linear(s.center_db + (s.edge_db - s.center_db) * u * u);
  }
  g.validate();
  return g;
}

Gains resolve_gains(const RunConfig& cfg) {
  cfg.validate();
  if (cfg.profile) return ingest_profile(*cfg.profile);
  const InlineGainsDb& d = *cfg.inline_db;
  return Gains::single(db_to_linear(d.gamma_bm_db), db_to_linear(d.gamma_mb_db),
                       db_to_linear(d.gamma_mm_db), db_to_linear(d.gamma_bb_db));
}

std::vector<double> sweep_grid(const RunConfig& cfg, double r_bar_b) {
  if (!cfg.rb_list.empty()) {
    std::vector<double> g = cfg.rb_list;
    std::sort(g.begin(), g.end());
    return g;
  }
  std::vector<double> g(static_cast<std::size_t>(cfg.n_points));
  for (int i = 0; i < cfg.n_points; ++i) g[i] = r_bar_b * i / (cfg.n_points - 1);
  g.back() = r_bar_b;
  return g;
}

RegionResult compute_region(const Gains& g, const RunConfig& cfg) {
  switch (cfg.mode) {
    case Mode::single: return single_region(g, cfg);
    case Mode::fixed: return fixed_region(g, cfg);
    case Mode::general_altmax: return general_region(g, cfg, GeneralMethod::altmax);
    case Mode::general_heuristic: return general_region(g, cfg, GeneralMethod::heuristic);
  }
  throw std::invalid_argument("compute_region: bad mode");
}

std::vector<CompareRow> compute_compare(const Gains& g, const RunConfig& cfg) {
  const AltMaxOptions opt = altmax_options(cfg);
  const auto hd = max_rates(g, cfg.tol);
  const SumRateResult corner = sum_rate_max(g, cfg.tol, opt);
  const auto grid = clamp_grid(sweep_grid(cfg, hd.r_bar_b), hd.r_bar_b);
  const GeneralRegion alt =
      tdfd_region_general(g, grid, GeneralMethod::altmax, corner, cfg.tol, opt, cfg.jobs);
  const GeneralRegion heur =
      tdfd_region_general(g, grid, GeneralMethod::heuristic, corner, cfg.tol, opt, cfg.jobs);
  const bool restrictive = c1c2_restrictive(g);
  std::vector<CompareRow> rows;
  for (double rb : grid) {
    CompareRow r;
    r.rb = rb;
    r.rm_altmax = interpolate_rm(alt.hull, rb);
    r.rm_heuristic = interpolate_rm(heur.hull, rb);
    r.gap = r.rm_altmax - r.rm_heuristic;
    r.c1c2_restrictive = restrictive;
    rows.push_back(r);
  }
  return rows;
}

RunReport run_region(const RunConfig& cfg) {
  try {
    const Gains g = resolve_gains(cfg);
    const RegionResult r = compute_region(g, cfg);
    ensure_dir(cfg.out_dir);
    RunReport rep;
    if (cfg.format == OutputFormat::csv) {
      const std::string path = join(cfg.out_dir, "region.csv");
      std::ofstream f = open_out(path);
      f << "rb,rm,mode,lambda,alphas_json\n";
      for (const auto& row : r.rows) {
        f << format_number(row.rb) << ',' << format_number(row.rm) << ','
          << to_string(row.plan.mode) << ',' << format_number(row.plan.lambda) << ','
          << csv_quote(plan_allocations(row.plan).dump()) << '\n';
      }
      rep.files.push_back(path);
    } else {
      const std::string path = join(cfg.out_dir, "region.json");
      json rows = json::array();
      for (const auto& row : r.rows)
        rows.push_back({{"rb", row.rb},
                        {"rm", row.rm},
                        {"mode", to_string(row.plan.mode)},
                        {"lambda", row.plan.lambda},
                        {"alphas", plan_allocations(row.plan)}});
      std::ofstream f = open_out(path);
      f << rows.dump(2) << '\n';
      rep.files.push_back(path);
    }
    const std::string spath = join(cfg.out_dir, "summary.json");
    std::ofstream s = open_out(spath);
    s << summary_json(r, cfg, r.rows.size()).dump(2) << '\n';
    rep.files.push_back(spath);
    if (r.nonconverged > 0) {
      rep.partial = true;
      rep.exit_code = 3;
      rep.diagnostic = std::to_string(r.nonconverged) + " sweep point(s) hit the iteration limit";
    }
    return rep;
  } catch (const std::exception& e) {
    return failure(e);
  }
}

RunReport run_compare(const RunConfig& cfg) {
  try {
    const Gains g = resolve_gains(cfg);
    const auto rows = compute_compare(g, cfg);
    ensure_dir(cfg.out_dir);
    RunReport rep;
    if (cfg.format == OutputFormat::csv) {
      const std::string path = join(cfg.out_dir, "compare.csv");
      std::ofstream f = open_out(path);
      f << "rb,rm_altmax,rm_heuristic,gap,c1c2_restrictive\n";
      for (const auto& r : rows)
        f << format_number(r.rb) << ',' << format_number(r.rm_altmax) << ','
          << format_number(r.rm_heuristic) << ',' << format_number(r.gap) << ','
          << (r.c1c2_restrictive ? "true" : "false") << '\n';
      rep.files.push_back(path);
    } else {
      const std::string path = join(cfg.out_dir, "compare.json");
      json arr = json::array();
      for (const auto& r : rows)
        arr.push_back({{"rb", r.rb},
                       {"rm_altmax", r.rm_altmax},
                       {"rm_heuristic", r.rm_heuristic},
                       {"gap", r.gap},
                       {"c1c2_restrictive", r.c1c2_restrictive}});
      std::ofstream f = open_out(path);
      f << arr.dump(2) << '\n';
      rep.files.push_back(path);
    }
    return rep;
  } catch (const std::exception& e) {
    return failure(e);
  }
}

std::vector<double> SnrGrid::values() const {
  if (!(step_db > 0.0) || max_db < min_db) throw std::invalid_argument("SNR grid: bad range");
  std::vector<double> v;
  const long n = static_cast<long>(std::floor((max_db - min_db) / step_db + 1e-9));
  for (long i = 0; i <= n; ++i) v.push_back(min_db + static_cast<double>(i) * step_db);
  return v;
}

RunReport run_improve(const RunConfig& cfg, const SnrGrid& grid) {
  try {
    const Gains base = resolve_gains(cfg);
    const auto snr = grid.values();
    const double k = static_cast<double>(base.channels());
    struct Cell {
      double bm_db, mb_db, p;
    };
    std::vector<Cell> cells;
    for (double x : snr)
      for (double y : snr) cells.push_back({x, y, 0.0});
    RunConfig inner = cfg;
    inner.jobs = 1;
    inner.debug_hull = false;
    inner.rb_list.clear();
    detail::parallel_for(cells.size(), cfg.jobs, [&](std::size_t i) {
      Gains g = base;
      g.gamma_bm.setConstant(k * db_to_linear(cells[i].bm_db));
      g.gamma_mb.setConstant(k * db_to_linear(cells[i].mb_db));
      cells[i].p = compute_region(g, inner).max_rate_improvement;
    });
    ensure_dir(cfg.out_dir);
    const std::string path = join(cfg.out_dir, "improve.csv");
    std::ofstream f = open_out(path);
    f << "gamma_bm_db,gamma_mb_db,p_max\n";
    for (const auto& c : cells)
      f << format_number(c.bm_db) << ',' << format_number(c.mb_db) << ',' << format_number(c.p) << '\n';
    RunReport rep;
    rep.files.push_back(path);
    return rep;
  } catch (const std::exception& e) {
    return failure(e);
  }
}

}  // namespace fdcap::cli
