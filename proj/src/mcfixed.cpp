#include "fdcap/mcfixed.hpp"

#include "fdcap/detail/roots.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace fdcap {

namespace {

constexpr double kLn = std::numbers::ln2;

}  // namespace

CornerRates mc_corner_rates(const Gains& g) {
  g.validate();
  const Allocation u = Allocation::uniform(g.channels());
  return {rate_dl(g, u), rate_ul(g, u)};
}

double fixed_r_bar_b(const Gains& g) {
  g.validate();
  const double k = static_cast<double>(g.channels());
  return ((g.gamma_bm / k).log1p() / kLn).sum();
}

double fixed_r_bar_m(const Gains& g) {
  g.validate();
  const double k = static_cast<double>(g.channels());
  return ((g.gamma_mb / k).log1p() / kLn).sum();
}

McFindResult mcfind_rm(const Gains& g, double rb_star, const Tolerances& tol) {
  tol.validate();
  const double r_bar = fixed_r_bar_b(g);
  const Index kk = g.channels();
  const double k = static_cast<double>(kk);
  const double slack = 1e-12 * std::max(1.0, r_bar);
  if (!(rb_star >= 0.0) || rb_star > r_bar + slack) {
    std::ostringstream os;
    os << "mcfind_rm: rb_star = " << rb_star << " outside [0, " << r_bar << "]";
    throw std::out_of_range(os.str());
  }
  const double rb = std::min(rb_star, r_bar);
  const double full = 1.0 / k;
  const double s_b = rate_dl(g, Allocation::uniform(kk));

  McFindResult out;
  if (rb <= s_b) {
    // MS at 1/K on every channel; search the common BS level
    const ArrayXd eff = g.gamma_bm / (1.0 + full * g.gamma_mm);
    auto f = [&](double x) { return ((x * eff).log1p() / kLn).sum() - rb; };
    auto df = [&](double x) { return (eff / ((1.0 + x * eff) * kLn)).sum(); };
    const auto root = detail::monotone_root(f, df, 0.0, full, tol.eps_alpha, tol.eps_rate,
                                            detail::StopRule::WidthOrResidual, tol.max_iters);
    out.alloc = Allocation::constant(kk, std::clamp(root.x, 0.0, full), full);
    out.steps = root.bisection_steps;
    out.polish_steps = root.polish_steps;
  } else {
    auto f = [&](double y) {
      return ((full * g.gamma_bm / (1.0 + y * g.gamma_mm)).log1p() / kLn).sum() - rb;
    };
    auto df = [&](double y) {
      const ArrayXd d = 1.0 + y * g.gamma_mm;
      return -(full * g.gamma_bm * g.gamma_mm / (d * (d + full * g.gamma_bm) * kLn)).sum();
    };
    const auto root = detail::monotone_root(f, df, 0.0, full, tol.eps_alpha, tol.eps_rate,
                                            detail::StopRule::WidthOrResidual, tol.max_iters);
    out.alloc = Allocation::constant(kk, full, std::clamp(root.x, 0.0, full));
    out.steps = root.bisection_steps;
    out.polish_steps = root.polish_steps;
    out.swept_bs = false;
  }
  out.r_m = rate_ul(g, out.alloc);
  return out;
}

McFindResult mcfind_rm_shaped(const Gains& g, const Allocation& shape, double rb_star,
                              const Tolerances& tol) {
  const Gains folded = scale_gains(g, shape);
  McFindResult out = mcfind_rm(folded, rb_star, tol);
  const double k = static_cast<double>(g.channels());
  out.alloc.alpha_b = shape.alpha_b * k * out.alloc.alpha_b;
  out.alloc.alpha_m = shape.alpha_m * k * out.alloc.alpha_m;
  return out;
}

void DiscretePowerGrid::validate() const {
  if (levels.empty() || levels.size() >= 1000)
    throw std::invalid_argument("DiscretePowerGrid: need 1..999 levels");
  if (levels.front() < 0.0 || levels.back() > 1.0)
    throw std::invalid_argument("DiscretePowerGrid: levels must lie in [0, 1]");
  for (std::size_t i = 1; i < levels.size(); ++i)
    if (!(levels[i] > levels[i - 1]))
      throw std::invalid_argument("DiscretePowerGrid: levels must be strictly increasing");
}

RegionBoundary fd_region_fixed(const Gains& g, const std::vector<double>& rb_grid,
                               const Tolerances& tol) {
  RegionBoundary out;
  out.source = RegionSource::fd;
  for (double rb : rb_grid) {
    const McFindResult r = mcfind_rm(g, rb, tol);
    out.points.push_back({rb, r.r_m, OperatingMode::PureFD, r.alloc});
  }
  return out;
}

RegionBoundary fd_region_fixed(const Gains& g, int n_points, const Tolerances& tol,
                               const FixedRegionOptions& opt) {
  if (n_points < 2) throw std::invalid_argument("fd_region_fixed: n_points must be >= 2");
  const double r_bar = fixed_r_bar_b(g);
  std::vector<double> grid(static_cast<std::size_t>(n_points));
  for (int i = 0; i < n_points; ++i) grid[i] = r_bar * i / (n_points - 1);
  grid.back() = r_bar;
  RegionBoundary out = fd_region_fixed(g, grid, tol);
  if (!opt.refine || r_bar == 0.0) return out;

  std::vector<BoundaryPoint> pts = std::move(out.points);
  bool changed = true;
  while (changed && static_cast<int>(pts.size()) < opt.max_points) {
    changed = false;
    std::vector<BoundaryPoint> next;
    next.reserve(pts.size() * 2);
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      next.push_back(pts[i]);
      if (static_cast<int>(pts.size() + next.size() - i - 1) >= opt.max_points) continue;
      const double mid = 0.5 * (pts[i].r_b + pts[i + 1].r_b);
      if (!(mid > pts[i].r_b && mid < pts[i + 1].r_b)) continue;
      const McFindResult r = mcfind_rm(g, mid, tol);
      const double chord = 0.5 * (pts[i].r_m + pts[i + 1].r_m);
      if (std::abs(r.r_m - chord) > 10.0 * tol.eps_rate) {
        next.push_back({mid, r.r_m, OperatingMode::PureFD, r.alloc});
        changed = true;
      }
    }
    next.push_back(pts.back());
    pts = std::move(next);
  }
  out.points = std::move(pts);
  return out;
}

DiscreteRegion tdfd_region_fixed(const Gains& g, const DiscretePowerGrid& grid,
                                 const Tolerances& tol) {
  tol.validate();
  grid.validate();
  g.validate();
  const Index kk = g.channels();
  const double full = 1.0 / static_cast<double>(kk);
  std::vector<double> levels = grid.levels;
  if (levels.front() > 0.0) levels.insert(levels.begin(), 0.0);

  DiscreteRegion out;
  // BS level sweeps up with the MS at full power, then the MS level sweeps
  // down with the BS at full power: increasing r_b throughout.
  for (double l : levels) {
    const Allocation a = Allocation::constant(kk, l * full, full);
    out.fd_points.push_back({rate_dl(g, a), rate_ul(g, a), OperatingMode::PureFD, a});
  }
  for (auto it = levels.rbegin(); it != levels.rend(); ++it) {
    const Allocation a = Allocation::constant(kk, full, *it * full);
    out.fd_points.push_back({rate_dl(g, a), rate_ul(g, a), OperatingMode::PureFD, a});
  }
  out.hull = upper_hull(out.fd_points);
  return out;
}

}  // namespace fdcap
