// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero when any of them fails.

#include "fdcap/cli.hpp"
#include "fdcap/mcfixed.hpp"
#include "fdcap/mcgeneral.hpp"
#include "fdcap/oracle.hpp"
#include "fdcap/singlechannel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace {

using namespace fdcap;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

class GainSource {
 public:
  explicit GainSource(std::uint64_t seed) : rng_(seed) {}

  double db(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  double unit() { return db(0.0, 1.0); }

  Gains single(double lo = -10.0, double hi = 50.0) {
    return Gains::single(db_to_linear(db(lo, hi)), db_to_linear(db(lo, hi)),
                         db_to_linear(db(lo, hi)), db_to_linear(db(lo, hi)));
  }

  Gains channels(Index k, double lo = -10.0, double hi = 50.0) {
    Gains g = Gains::uniform(k, 0, 0, 0, 0);
    for (Index i = 0; i < k; ++i) {
      g.gamma_bm[i] = db_to_linear(db(lo, hi));
      g.gamma_mb[i] = db_to_linear(db(lo, hi));
      g.gamma_mm[i] = db_to_linear(db(lo, hi));
      g.gamma_bb[i] = db_to_linear(db(lo, hi));
    }
    return g;
  }

  Allocation allocation(Index k) {
    Allocation a = Allocation::zeros(k);
    for (auto* row : {&a.alpha_b, &a.alpha_m}) {
      for (Index i = 0; i < k; ++i) (*row)[i] = -std::log(1.0 - unit());
      *row *= unit() / row->sum();
    }
    return a;
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = a + (b - a) * i / (n - 1);
  return v;
}

// ---------------------------------------------------------------------------

struct OracleRuns {
  double worst_error = 0.0;
  int alpha_m_violations = 0;
  int samples = 0;
  double elapsed = 0.0;
};

OracleRuns single_channel_oracle_runs() {
  GainSource src(1001);
  OracleRuns out;
  const GridSpec spec{1e-3, 6};
  const auto t0 = Clock::now();
  for (int n = 0; n < 50; ++n) {
    const Gains g = src.single();
    const double r_bar_b = max_rates(g).r_bar_b;
    const double s_b = corner_rates(g).s_b;
    for (int i = 0; i < 20; ++i) {
      const double rb = r_bar_b * (i + 0.5) / 20.0;
      const double fd = fd_boundary_rm(g, rb).r_m;
      const GridResult o = grid_max_rm(g, rb, spec);
      out.worst_error = std::max(out.worst_error, std::abs(fd - o.value));
      if (rb <= s_b && o.alloc.alpha_m[0] < 1.0 - 2.0 * spec.step) ++out.alpha_m_violations;
      ++out.samples;
    }
  }
  out.elapsed = seconds_since(t0);
  return out;
}

Outcome criterion1(const OracleRuns& r) {
  return {r.worst_error <= 2e-3 && r.elapsed < 120.0,
          fmt("max |fd - grid| = %.3g over %d samples, %.1f s", r.worst_error, r.samples,
              r.elapsed)};
}

Outcome criterion2(const OracleRuns& r) {
  return {r.alpha_m_violations == 0,
          fmt("%d grid argmaxes with alpha_m < 1 - 2 step below s_b", r.alpha_m_violations)};
}

// ---------------------------------------------------------------------------

int predicted_sign(const ShapeClass& s, double rb) {
  switch (s.kind) {
    case ShapeKind::ConcaveAll: return -1;
    case ShapeKind::ConvexAll: return 1;
    case ShapeKind::ConcaveThenConvex: return rb < *s.breakpoint_rb ? -1 : 1;
  }
  return 0;
}

struct ShapeRuns {
  int instances = 0;
  int disagreements = 0;
  int excused = 0;
  int condition_mismatch = 0;
  int kinds[3] = {0, 0, 0};
  double worst_concave_d2 = 0.0;
};

ShapeRuns shape_runs() {
  GainSource src(2002);
  ShapeRuns out;
  for (int n = 0; n < 200; ++n) {
    const Gains g = src.single();
    const ShapeClass shape = classify_shape_rm(g);
    ++out.kinds[static_cast<int>(shape.kind)];
    ++out.instances;
    if (concave_rm_condition(g) != (shape.kind == ShapeKind::ConcaveAll)) ++out.condition_mismatch;
    const double s_b = corner_rates(g).s_b;
    if (!(s_b > 0.0)) continue;
    const auto grid = linspace(0.0, s_b, 200);
    const double h = grid[1] - grid[0];
    for (const CurvatureSample& c : curvature_samples(g, grid)) {
      const int want = predicted_sign(shape, c.r_b);
      const bool near_break =
          shape.breakpoint_rb && std::abs(c.r_b - *shape.breakpoint_rb) <= h;
      if (want < 0 && !near_break)
        out.worst_concave_d2 = std::max(out.worst_concave_d2, std::abs(c.second_difference));
      if (c.sign == 0 || c.sign == want) continue;
      if (near_break)
        ++out.excused;
      else
        ++out.disagreements;
    }
  }
  return out;
}

Outcome criterion3(const ShapeRuns& r) {
  return {r.disagreements == 0,
          fmt("%d instances (concave %d, convex %d, concave-then-convex %d); %d sign "
              "disagreements, %d within a step of the breakpoint",
              r.instances, r.kinds[0], r.kinds[1], r.kinds[2], r.disagreements, r.excused)};
}

Outcome criterion4(const ShapeRuns& r) {
  return {r.condition_mismatch == 0,
          fmt("%d mismatches between the closed-form condition and the classifier of %d",
              r.condition_mismatch, r.instances)};
}

Outcome criterion5(const ShapeRuns& shapes) {
  Outcome out;
  const Gains hi = Gains::single(1e5, 1e5, 1.0, 1.0);
  const double r_bar_b = max_rates(hi).r_bar_b;
  const bool constant_ok = std::abs(r_bar_b - 16.61) <= 0.01;

  GainSource src(5005);
  const double eps = 1e-6;
  Tolerances tol;
  tol.eps_rate = eps;
  int checked = 0, over = 0, worst_steps = 0, worst_bound = 0;
  for (int tries = 0; checked < 100 && tries < 100000; ++tries) {
    const Gains g = src.single();
    const ShapeClass shape = classify_shape_rm(g);
    if (shape.kind != ShapeKind::ConcaveThenConvex || !(concave_extent_rm(g, shape) > 0.0))
      continue;
    const TangentResult t = tangent_from_corner(g, shape, tol);
    const int bound = static_cast<int>(std::ceil(std::log2(1.4 * max_rates(g).r_bar_b / eps)));
    if (t.steps > bound) ++over;
    if (t.steps > worst_steps) {
      worst_steps = t.steps;
      worst_bound = bound;
    }
    ++checked;
  }
  const bool steps_ok = checked == 100 && over == 0;
  const bool curvature_ok = shapes.worst_concave_d2 < 1.45;
  out.pass = constant_ok && steps_ok && curvature_ok;
  out.detail = fmt("r_bar_b(50 dB) = %.4f; tangent steps over bound on %d of %d (max %d vs %d); "
                   "max concave |d2| = %.3f",
                   r_bar_b, over, checked, worst_steps, worst_bound, shapes.worst_concave_d2);
  return out;
}

// ---------------------------------------------------------------------------

Outcome criterion6() {
  GainSource src(6006);
  const GridSpec spec{1e-3, 6};
  double worst_err = 0.0;
  int structure_violations = 0, points = 0;
  for (Index k : {2, 3}) {
    for (int n = 0; n < 20; ++n) {
      const Gains g = src.channels(k, -10.0, 40.0);
      const double r_bar_b = fixed_r_bar_b(g);
      const double s_b = mc_corner_rates(g).s_b;
      const double full = 1.0 / static_cast<double>(k);
      for (double f : {0.15, 0.5, 0.85}) {
        const double rb = f * r_bar_b;
        const GridResult o = grid_max_rm(g, rb, spec, GridMode::uniform_scalar);
        const McFindResult m = mcfind_rm(g, rb);
        worst_err = std::max(worst_err, std::abs(o.value - m.r_m));
        const double y = o.alloc.alpha_m[0], x = o.alloc.alpha_b[0];
        const double slack = 2.0 * spec.step * full;
        if (rb <= s_b ? y < full - slack : x < full - slack) ++structure_violations;
        ++points;
      }
    }
  }
  return {worst_err <= 2e-3 && structure_violations == 0,
          fmt("%d points at K = 2, 3: %d maximizers off the full-power edge, max |mcfind - grid| "
              "= %.3g",
              points, structure_violations, worst_err)};
}

// ---------------------------------------------------------------------------

Gains two_channel_nonrestrictive(GainSource& src) {
  for (;;) {
    Gains g = Gains::uniform(2, 0, 0, 0, 0);
    for (Index k = 0; k < 2; ++k) {
      g.gamma_bb[k] = db_to_linear(src.db(-10.0, 10.0));
      g.gamma_mm[k] = db_to_linear(src.db(-10.0, 10.0));
      g.gamma_bm[k] = db_to_linear(src.db(10.0, 40.0));
      g.gamma_mb[k] = db_to_linear(src.db(10.0, 40.0));
    }
    if (!c1c2_restrictive(g)) return g;
  }
}

// Derivative of r_b + r_m along alpha_b,k, written out from the rate formula.
double sum_rate_slope_b(const Gains& g, const ArrayXd& ab, const ArrayXd& am, Index k) {
  const double rb = g.gamma_bm[k] / (1.0 + am[k] * g.gamma_mm[k] + ab[k] * g.gamma_bm[k]);
  const double i = 1.0 + ab[k] * g.gamma_bb[k];
  const double rm = -am[k] * g.gamma_mb[k] * g.gamma_bb[k] / (i * (i + am[k] * g.gamma_mb[k]));
  return (rb + rm) / std::log(2.0);
}

Outcome criterion7() {
  GainSource src(7007);
  double worst_gap = 0.0, worst_kkt = 0.0, worst_stationarity = 0.0, worst_drop = 0.0;
  int nonmonotone = 0, runs = 0;
  for (int n = 0; n < 10; ++n) {
    const Gains g = two_channel_nonrestrictive(src);
    const SumRateResult sr = sum_rate_max(g);
    const double r_bar_b = max_rates(g).r_bar_b;
    for (double f : {0.2, 0.5, 0.8}) {
      const double rb = f * r_bar_b;
      const AltMaxResult r = altmax(g, rb, sr);
      const GridResult o = grid_max_sum_rate(g, rb, r.constraint, restriction_bounds(g, r.side),
                                             {2e-2, 6});
      worst_gap = std::max(worst_gap, o.value - (r.rates.r_b + r.rates.r_m));
      for (const Trajectory& t : r.trajectories) {
        ++runs;
        worst_kkt = std::max(worst_kkt, t.worst_kkt_b);
        for (std::size_t i = 1; i < t.objective_trace.size(); ++i) {
          const double drop = t.objective_trace[i - 1] - t.objective_trace[i];
          worst_drop = std::max(worst_drop, drop);
          if (drop > 1e-9) {
            ++nonmonotone;
            break;
          }
        }
      }
    }
    // Unconstrained block: active channels share one marginal, idle ones sit below it.
    for (int t = 0; t < 5; ++t) {
      const ArrayXd am = src.allocation(2).alpha_m;
      const SubproblemResult s = solve_sub_b(g, am, 0.0, RateConstraint::None,
                                             RestrictionBounds::unrestricted(2));
      worst_kkt = std::max(worst_kkt, s.kkt_residual);
      double level = -INFINITY;
      for (Index k = 0; k < 2; ++k)
        if (s.alpha[k] > 1e-12) level = std::max(level, sum_rate_slope_b(g, s.alpha, am, k));
      for (Index k = 0; k < 2; ++k) {
        const double d = sum_rate_slope_b(g, s.alpha, am, k);
        const double scale = std::max(1.0, std::abs(level));
        const double viol = s.alpha[k] > 1e-12 ? std::abs(d - level) : std::max(0.0, d - level);
        worst_stationarity = std::max(worst_stationarity, viol / scale);
      }
    }
  }
  const double kkt = std::max(worst_kkt, worst_stationarity);
  return {nonmonotone == 0 && worst_gap <= 1e-2 && kkt <= 1e-6,
          fmt("%d runs, %d non-monotone (largest drop %.2g); best-of-8 vs grid gap %.3g; KKT "
              "residual %.2g",
              runs, nonmonotone, worst_drop, worst_gap, kkt)};
}

// ---------------------------------------------------------------------------

bool same_points(const RegionBoundary& a, const RegionBoundary& b) {
  if (a.points.size() != b.points.size()) return false;
  for (std::size_t i = 0; i < a.points.size(); ++i)
    if (a.points[i].r_b != b.points[i].r_b || a.points[i].r_m != b.points[i].r_m) return false;
  return true;
}

RegionBoundary from_vertices(std::vector<BoundaryPoint> v) { return {std::move(v), RegionSource::tdfd}; }

Outcome criterion8() {
  GainSource src(8008);
  Tolerances tol;
  int nonconvex = 0, undominated = 0, not_idempotent = 0, convex_mismatch = 0, hulls = 0;
  int convex_instances = 0;
  double worst_convex_diff = 0.0;

  // single channel
  for (int n = 0; n < 60; ++n) {
    const Gains g = src.single();
    const ConvexifiedRegion region(g, tol);
    const RegionBoundary hull = from_vertices(region.vertices());
    ++hulls;
    if (!hull.is_convex(1e-9)) ++nonconvex;
    if (!same_points(upper_hull(hull.points), hull)) ++not_idempotent;
    const double r_bar_b = region.r_bar_b();
    const bool convex = region_is_convex(g);
    for (double rb : linspace(0.0, r_bar_b, 101)) {
      const double fd = fd_boundary_rm(g, rb, tol).r_m;
      const double td = region.evaluate(rb).r_m;
      if (td < fd - 1e-9) ++undominated;
      if (convex) worst_convex_diff = std::max(worst_convex_diff, std::abs(td - fd));
    }
    if (convex) ++convex_instances;
  }
  // make sure the convex branch is exercised on enough instances
  for (int tries = 0; convex_instances < 30 && tries < 10000; ++tries) {
    const Gains g = src.single(0.0, 50.0);
    if (!region_is_convex(g)) continue;
    ++convex_instances;
    const ConvexifiedRegion region(g, tol);
    for (double rb : linspace(0.0, region.r_bar_b(), 101))
      worst_convex_diff = std::max(
          worst_convex_diff, std::abs(region.evaluate(rb).r_m - fd_boundary_rm(g, rb, tol).r_m));
  }
  if (worst_convex_diff > 2.0 * tol.eps_rate) ++convex_mismatch;

  // fixed shape, discrete levels
  for (int n = 0; n < 20; ++n) {
    const Gains g = src.channels(3);
    DiscretePowerGrid grid;
    for (int l = 1; l <= 16; ++l) grid.levels.push_back(l / 16.0);
    const DiscreteRegion d = tdfd_region_fixed(g, grid, tol);
    ++hulls;
    if (!d.hull.is_convex(1e-9)) ++nonconvex;
    if (!same_points(upper_hull(d.hull.points), d.hull)) ++not_idempotent;
    for (const auto& p : d.fd_points)
      if (mix_for_target(d.hull, p.r_b).r_m < p.r_m - 1e-12) ++undominated;
  }

  // general allocation
  for (int n = 0; n < 4; ++n) {
    const Gains g = src.channels(2, 0.0, 30.0);
    const double r_bar_b = max_rates(g).r_bar_b;
    const GeneralRegion r =
        tdfd_region_general(g, linspace(0.0, r_bar_b, 9), GeneralMethod::altmax, tol);
    ++hulls;
    if (!r.hull.is_convex(1e-9)) ++nonconvex;
    if (!same_points(upper_hull(r.hull.points), r.hull)) ++not_idempotent;
    for (const auto& p : r.raw)
      if (mix_for_target(r.hull, p.r_b).r_m < p.r_m - 1e-12) ++undominated;
  }

  return {nonconvex + undominated + not_idempotent + convex_mismatch == 0,
          fmt("%d hulls: %d non-convex, %d not idempotent, %d dominance failures; %d convex "
              "regions, max |tdfd - fd| = %.2g",
              hulls, nonconvex, not_idempotent, undominated, convex_instances,
              worst_convex_diff)};
}

// ---------------------------------------------------------------------------

Outcome criterion9() {
  GainSource src(9009);
  double worst_rect = 0.0, worst_p = 0.0;
  for (int n = 0; n < 20; ++n) {
    const Gains g1 = Gains::single(db_to_linear(src.db(-10, 50)), db_to_linear(src.db(-10, 50)),
                                   0.0, 0.0);
    const auto hd = max_rates(g1);
    for (double rb : linspace(0.0, hd.r_bar_b, 21))
      worst_rect = std::max(worst_rect, std::abs(fd_boundary_rm(g1, rb).r_m - hd.r_bar_m));
    const ConvexifiedRegion region(g1);
    for (double rb : linspace(0.0, hd.r_bar_b, 21)) {
      worst_rect = std::max(worst_rect, std::abs(region.evaluate(rb).r_m - hd.r_bar_m));
    }
    const CornerRates c = corner_rates(g1);
    worst_p = std::max(worst_p, std::abs(rate_improvement({c.s_b, c.s_m}, hd.r_bar_b, hd.r_bar_m) - 2.0));

    Gains gk = src.channels(4);
    gk.gamma_mm.setZero();
    gk.gamma_bb.setZero();
    const auto hk = max_rates(gk);
    const SumRateResult sr = sum_rate_max(gk);
    worst_p = std::max(worst_p,
                       std::abs(rate_improvement({sr.corner.s_b, sr.corner.s_m}, hk.r_bar_b,
                                                 hk.r_bar_m) - 2.0));
  }
  return {worst_rect <= 1e-9 && worst_p <= 1e-9,
          fmt("max distance from the rectangle %.2g, max |p - 2| = %.2g", worst_rect, worst_p)};
}

Outcome criterion10() {
  GainSource src(1010);
  std::uniform_int_distribution<int> kdist(1, 52);
  double worst = 0.0;
  for (int n = 0; n < 1000; ++n) {
    const Index k = kdist(src.engine());
    const Gains g = src.channels(k);
    const Allocation a = src.allocation(k);
    const Gains s = scale_gains(g, a);
    const Allocation u = Allocation::uniform(k);
    const double rb = rate_dl(g, a), rm = rate_ul(g, a);
    const double rbs = rate_dl(s, u), rms = rate_ul(s, u);
    auto rel = [](double x, double y) { return std::abs(x - y) / std::max(std::abs(x), 1e-300); };
    if (rb > 0) worst = std::max(worst, rel(rb, rbs));
    if (rm > 0) worst = std::max(worst, rel(rm, rms));
  }
  return {worst <= 1e-12, fmt("1000 pairs, max relative rate change %.2g", worst)};
}

// ---------------------------------------------------------------------------

Outcome criterion11() {
  Outcome out;
  Tolerances tol;
  AltMaxOptions opt;

  // construction invariant on the seed shapes
  int seed_checks = 0, seed_failures = 0;
  auto check_seeds = [&](const Gains& g, const SumRateResult& sr, double rb) {
    const HeuristicResult h = pa_heuristic(g, rb, sr, tol);
    const auto hd = max_rates(g, tol);
    auto norm = [](const ArrayXd& x) { return x.sum() > 0 ? ArrayXd(x / x.sum()) : ArrayXd(x); };
    Allocation seeds[2] = {{norm(hd.alloc_b.alpha_b), norm(hd.alloc_m.alpha_m)},
                           {norm(sr.allocation.alpha_b), norm(sr.allocation.alpha_m)}};
    for (auto& s : seeds) {
      if (s.alpha_b.sum() <= 0) s.alpha_b = seeds[0].alpha_b;
      if (s.alpha_m.sum() <= 0) s.alpha_m = seeds[0].alpha_m;
      if (rb > fixed_r_bar_b(scale_gains(g, s))) continue;
      ++seed_checks;
      if (h.r_m < mcfind_rm_shaped(g, s, rb, tol).r_m - 1e-9) ++seed_failures;
    }
  };
  GainSource src(1111);
  for (int n = 0; n < 20; ++n) {
    const Gains g = src.channels(4, -10.0, 40.0);
    const SumRateResult sr = sum_rate_max(g, tol, opt);
    const double r_bar_b = max_rates(g).r_bar_b;
    for (double f : {0.0, 0.1, 0.3, 0.5, 0.7, 0.9, 1.0}) check_seeds(g, sr, f * r_bar_b);
  }

  // comparison grid at K = 52
  cli::RunConfig cfg;
  cfg.n_points = 11;
  cfg.jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  const auto t0 = Clock::now();
  int nonrestrictive_rows = 0, gap_failures = 0, instances = 0, nonrestrictive_instances = 0;
  double worst_rel_gap = 0.0;
  for (cli::Preset p : {cli::Preset::narrowband, cli::Preset::mid, cli::Preset::wideband}) {
    for (double snr : cli::SnrGrid{}.values()) {
      const Gains g = cli::synthetic_profile(p, snr, snr, 52);
      const auto rows = cli::compute_compare(g, cfg);
      ++instances;
      if (rows.front().c1c2_restrictive) continue;
      ++nonrestrictive_instances;
      for (const auto& r : rows) {
        ++nonrestrictive_rows;
        if (std::abs(r.gap) > 0.02 * r.rm_altmax + 1e-9) ++gap_failures;
        if (r.rm_altmax > 0) worst_rel_gap = std::max(worst_rel_gap, std::abs(r.gap) / r.rm_altmax);
      }
    }
  }
  const double grid_seconds = seconds_since(t0);
  // seed invariant on the K = 52 profiles too
  for (cli::Preset p : {cli::Preset::narrowband, cli::Preset::wideband}) {
    const Gains g = cli::synthetic_profile(p, 40.0, 40.0, 52);
    const SumRateResult sr = sum_rate_max(g, tol, opt);
    const double r_bar_b = max_rates(g).r_bar_b;
    for (double f : {0.25, 0.5, 0.75}) check_seeds(g, sr, f * r_bar_b);
  }

  out.pass = seed_failures == 0 && seed_checks > 0 && nonrestrictive_rows > 0 &&
             gap_failures == 0 && grid_seconds < 600.0;
  out.detail = fmt("seed shapes: %d/%d below mcfind; %d profiles, %d non-restrictive, %d gaps "
                   "over 2%% (max %.3g%%); grid %.0f s on %d thread(s)",
                   seed_failures, seed_checks, instances, nonrestrictive_instances, gap_failures,
                   100.0 * worst_rel_gap, grid_seconds, cfg.jobs);
  return out;
}

// ---------------------------------------------------------------------------

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

Outcome criterion12() {
  namespace fs = std::filesystem;
  const fs::path base = fs::temp_directory_path() / fs::path("fdcap_acceptance");
  fs::remove_all(base);

  const Gains profile_gains = cli::synthetic_profile(cli::Preset::mid, 20.0, 25.0, 6);
  const fs::path profile = base / "profile.csv";
  fs::create_directories(base);
  cli::write_profile(profile.string(), profile_gains);

  int runs = 0, differing = 0;
  for (cli::Mode mode : {cli::Mode::single, cli::Mode::fixed, cli::Mode::general_altmax,
                         cli::Mode::general_heuristic}) {
    std::string bytes[2];
    for (int rep = 0; rep < 2; ++rep) {
      cli::RunConfig cfg;
      cfg.mode = mode;
      if (mode == cli::Mode::single)
        cfg.inline_db = cli::InlineGainsDb{20.0, 25.0, 5.0, 3.0};
      else
        cfg.profile = profile.string();
      cfg.n_points = 9;
      cfg.seed = 7;
      cfg.out_dir = (base / (cli::to_string(mode) + std::to_string(rep))).string();
      const cli::RunReport r = cli::run_region(cfg);
      if (r.exit_code != 0) return {false, fmt("run_region failed: %s", r.diagnostic.c_str())};
      bytes[rep] = slurp(fs::path(cfg.out_dir) / "region.csv") +
                   slurp(fs::path(cfg.out_dir) / "summary.json");
    }
    ++runs;
    if (bytes[0] != bytes[1] || bytes[0].empty()) ++differing;
  }

  GainSource src(1212);
  double worst = 0.0;
  for (int n = 0; n < 50; ++n) {
    Gains g = src.channels(1 + n % 52, -30.0, 70.0);
    std::stringstream ss;
    cli::write_profile(ss, g);
    const Gains back = cli::parse_profile(ss);
    for (const auto& [a, b] : {std::pair{&g.gamma_bm, &back.gamma_bm}, {&g.gamma_mb, &back.gamma_mb},
                               {&g.gamma_mm, &back.gamma_mm}, {&g.gamma_bb, &back.gamma_bb}})
      worst = std::max(worst, ((*a - *b).abs() / a->abs()).maxCoeff());
  }
  fs::remove_all(base);
  return {differing == 0 && worst <= 1e-9,
          fmt("%d of %d modes reproduce byte-identical output; profile round trip rel error %.2g",
              runs - differing, runs, worst)};
}

}  // namespace

int main() {
  const OracleRuns oracle = single_channel_oracle_runs();
  const ShapeRuns shapes = shape_runs();
  const std::vector<std::function<Outcome()>> checks = {
      [&] { return criterion1(oracle); }, [&] { return criterion2(oracle); },
      [&] { return criterion3(shapes); }, [&] { return criterion4(shapes); },
      [&] { return criterion5(shapes); }, criterion6, criterion7, criterion8, criterion9,
      criterion10, criterion11, criterion12};
  int failed = 0;
  for (std::size_t i = 0; i < checks.size(); ++i) {
    Outcome o;
    try {
      o = checks[i]();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("criterion %zu: %s  %s\n", i + 1, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
