#include "fdcap/singlechannel.hpp"

#include "fdcap/detail/roots.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace fdcap {

namespace {

constexpr double kLn = std::numbers::ln2;

struct Link1 {
  double bm, mb, mm, bb;
};

Link1 scalars(const Gains& g) {
  g.validate();
  if (g.channels() != 1)
    throw std::invalid_argument("single-channel routine called with K != 1");
  return {g.gamma_bm[0], g.gamma_mb[0], g.gamma_mm[0], g.gamma_bb[0]};
}

Link1 mirror(const Link1& s) { return {s.mb, s.bm, s.bb, s.mm}; }

// S_b arc parameterized by the BS power a, MS at full power.
double arc_rb(const Link1& s, double a) { return std::log1p(a * s.bm / (1.0 + s.mm)) / kLn; }
double arc_rm(const Link1& s, double a) { return std::log1p(s.mb / (1.0 + a * s.bb)) / kLn; }
double arc_alpha(const Link1& s, double rb) {
  return std::expm1(rb * kLn) * (1.0 + s.mm) / s.bm;
}

struct Vec2 {
  double x, y;
};

// d(r_b, r_m)/da along the arc
Vec2 arc_dir(const Link1& s, double a) {
  return {s.bm / ((1.0 + s.mm + a * s.bm) * kLn),
          -s.bb * s.mb / ((1.0 + a * s.bb) * (1.0 + a * s.bb + s.mb) * kLn)};
}

double arc_slope(const Link1& s, double a) {
  return -s.bb * s.mb * (1.0 + s.mm + a * s.bm) /
         (s.bm * (1.0 + a * s.bb) * (1.0 + a * s.bb + s.mb));
}

bool degenerate(const Link1& s) { return s.bm == 0.0 || s.mb == 0.0 || s.bb == 0.0; }

ShapeClass classify(const Link1& s) {
  ShapeClass out;
  // flat or collapsed arcs are trivially concave
  if (degenerate(s)) return out;
  const double b = 2.0 * (1.0 + s.mm) / s.bm;
  const double c = (2.0 + s.mb) * (1.0 + s.mm) / (s.bb * s.bm) - (1.0 + s.mb) / (s.bb * s.bb);
  if (c >= 0.0) {
    out.kind = ShapeKind::ConvexAll;
    return out;
  }
  const double root = -2.0 * c / (b + std::sqrt(b * b - 4.0 * c));
  if (root >= 1.0) return out;
  out.kind = ShapeKind::ConcaveThenConvex;
  out.breakpoint_alpha = root;
  out.breakpoint_rb = arc_rb(s, root);
  return out;
}

bool concave_condition(const Link1& s) {
  if (degenerate(s)) return true;
  const double ratio = (1.0 + s.mb) / (s.bb * s.bb);
  if (!(ratio > 1.0)) return false;
  const double t2 = s.bb * (1.0 + s.mm) * (2.0 + s.mb) / (1.0 + s.mb);
  const double t3 = (1.0 + s.mm) * (2.0 + (2.0 + s.mb) / s.bb) / (ratio - 1.0);
  return s.bm > t2 && s.bm >= t3;
}

double extent(const Link1& s, const ShapeClass& shape) {
  switch (shape.kind) {
    case ShapeKind::ConcaveAll: return arc_rb(s, 1.0);
    case ShapeKind::ConcaveThenConvex: return *shape.breakpoint_rb;
    case ShapeKind::ConvexAll: return 0.0;
  }
  return 0.0;
}

struct ArcTangent {
  double t = 0.0;  // touch, in the arc's own r_b axis
  int steps = 0;
  double residual = 0.0;
};

// Touch point on the concave arc [0, t_hi] of the tangent through (qx, qy),
// with qx to the right of the arc. F below is decreasing on a concave arc.
ArcTangent tangent_on_arc(const Link1& s, double t_hi, double qx, double qy, double eps,
                          int max_iters) {
  auto F = [&](double t) {
    const double a = arc_alpha(s, t);
    return arc_rm(s, a) + arc_slope(s, a) * (qx - t) - qy;
  };
  ArcTangent out;
  if (!(t_hi > 0.0)) return out;
  const double f0 = F(0.0);
  if (f0 <= 0.0) {
    out.residual = f0;
    return out;
  }
  const double fh = F(t_hi);
  const double slack = 8 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(qy) + std::abs(qx));
  if (fh >= -slack) {
    out.t = t_hi;
    out.residual = fh;
    return out;
  }
  double lo = 0.0, hi = t_hi;
  double t = 0.5 * (lo + hi);
  double ft = F(t);
  out.steps = 1;
  while (std::abs(ft) > eps && out.steps < max_iters) {
    (ft > 0.0 ? lo : hi) = t;
    const double mid = 0.5 * (lo + hi);
    if (!(lo < mid && mid < hi)) break;
    t = mid;
    ft = F(t);
    ++out.steps;
  }
  out.t = t;
  out.residual = ft;
  return out;
}

double rb_range_check(double rb_star, double r_bar_b) {
  const double slack = 1e-12 * std::max(1.0, r_bar_b);
  if (!(rb_star >= 0.0) || rb_star > r_bar_b + slack) {
    std::ostringstream os;
    os << "rb_star = " << rb_star << " outside [0, " << r_bar_b << "]";
    throw std::out_of_range(os.str());
  }
  return std::min(rb_star, r_bar_b);
}

Allocation alloc1(double ab, double am) {
  return {ArrayXd::Constant(1, ab), ArrayXd::Constant(1, am)};
}

}  // namespace

std::string to_string(ShapeKind kind) {
  switch (kind) {
    case ShapeKind::ConcaveAll: return "concave";
    case ShapeKind::ConvexAll: return "convex";
    case ShapeKind::ConcaveThenConvex: return "concave-then-convex";
  }
  return "?";
}

CornerRates corner_rates(const Gains& g) {
  const Link1 s = scalars(g);
  return {arc_rb(s, 1.0), arc_rm(s, 1.0)};
}

FdPoint fd_boundary_rm(const Gains& g, double rb_star, const Tolerances& tol) {
  tol.validate();
  const Link1 s = scalars(g);
  const double r_bar_b = std::log1p(s.bm) / kLn;
  const double rb = rb_range_check(rb_star, r_bar_b);
  FdPoint out;
  if (s.bm == 0.0) {
    out.alloc = alloc1(0.0, 1.0);
  } else if (rb <= arc_rb(s, 1.0)) {
    out.alloc = alloc1(std::clamp(arc_alpha(s, rb), 0.0, 1.0), 1.0);
  } else {
    // BS at full power; more MS power lowers r_b, so r_b(1, a_m) is decreasing
    auto f = [&](double am) { return std::log1p(s.bm / (1.0 + am * s.mm)) / kLn - rb; };
    auto df = [&](double am) {
      const double d = 1.0 + am * s.mm;
      return -s.mm * s.bm / (d * (d + s.bm) * kLn);
    };
    const auto root = detail::monotone_root(f, df, 0.0, 1.0, tol.eps_alpha, tol.eps_rate,
                                            detail::StopRule::WidthAndResidual, tol.max_iters);
    out.alloc = alloc1(1.0, std::clamp(root.x, 0.0, 1.0));
    out.steps = root.bisection_steps;
  }
  out.r_m = rate_ul(g, out.alloc);
  return out;
}

bool concave_rm_condition(const Gains& g) { return concave_condition(scalars(g)); }

bool concave_rb_condition(const Gains& g) { return concave_condition(mirror(scalars(g))); }

bool region_is_convex(const Gains& g) {
  const Link1 s = scalars(g);
  if (s.bb == 0.0 && s.mm == 0.0) return true;  // rectangle
  const bool convex = concave_condition(s) && concave_condition(mirror(s));
  // both segments concave forces the slopes to meet properly at the corner
  assert(!convex || s.bm * s.mb >= s.mm * s.bb / ((1.0 + s.mm) * (1.0 + s.bb)));
  return convex;
}

ShapeClass classify_shape_rm(const Gains& g) { return classify(scalars(g)); }

ShapeClass classify_shape_rb(const Gains& g) { return classify(mirror(scalars(g))); }

double concave_extent_rm(const Gains& g, const ShapeClass& shape) {
  return extent(scalars(g), shape);
}

TangentResult tangent_from_point(const Gains& g, const ShapeClass& shape, RatePair q,
                                 const Tolerances& tol) {
  tol.validate();
  const Link1 s = scalars(g);
  const double t_hi = extent(s, shape);
  if (!(t_hi > 0.0))
    throw std::invalid_argument("tangent search: r_m(r_b) has no concave segment");
  if (q.r_b < t_hi)
    throw std::invalid_argument("tangent search: query point left of the concave segment");
  const ArcTangent at = tangent_on_arc(s, t_hi, q.r_b, q.r_m, tol.eps_rate, tol.max_iters);
  const double a = arc_alpha(s, at.t);
  TangentResult out;
  out.rb_touch = at.t;
  out.rm_touch = arc_rm(s, a);
  out.slope = arc_slope(s, a);
  out.steps = at.steps;
  out.residual = at.residual;
  out.degenerate = at.t == q.r_b;
  return out;
}

TangentResult tangent_from_corner(const Gains& g, const ShapeClass& shape,
                                  const Tolerances& tol) {
  const Link1 s = scalars(g);
  if (shape.kind == ShapeKind::ConcaveAll && s.bm > 0.0) {
    TangentResult out;
    out.rb_touch = arc_rb(s, 1.0);
    out.rm_touch = arc_rm(s, 1.0);
    out.slope = arc_slope(s, 1.0);
    out.degenerate = true;
    return out;
  }
  const CornerRates c = corner_rates(g);
  return tangent_from_point(g, shape, {c.s_b, c.s_m}, tol);
}

// ---------------------------------------------------------------------------

ConvexifiedRegion::ConvexifiedRegion(const Gains& g, const Tolerances& tol) : g_(g), tol_(tol) {
  tol_.validate();
  const Link1 s = scalars(g_);
  const Link1 m = mirror(s);
  corner_ = {arc_rb(s, 1.0), arc_rm(s, 1.0)};
  r_bar_b_ = std::log1p(s.bm) / kLn;
  r_bar_m_ = std::log1p(s.mb) / kLn;
  shape_a_ = classify(s);
  shape_b_ = classify(m);
  if (r_bar_b_ == 0.0) return;  // region is the segment r_b = 0

  const BoundaryPoint p0{0.0, r_bar_m_, OperatingMode::PureFD, alloc1(0.0, 1.0)};
  const BoundaryPoint e{r_bar_b_, 0.0, OperatingMode::PureFD, alloc1(1.0, 0.0)};
  const BoundaryPoint c{corner_.s_b, corner_.s_m, OperatingMode::PureFD, alloc1(1.0, 1.0)};
  const double a_hi = extent(s, shape_a_);
  const double b_hi = extent(m, shape_b_);
  const bool a_full = shape_a_.kind == ShapeKind::ConcaveAll;
  const bool b_full = shape_b_.kind == ShapeKind::ConcaveAll;

  BoundaryPoint a_touch = c;
  Vec2 u;
  if (a_full) {
    u = arc_dir(s, 1.0);
  } else {
    const auto at = tangent_on_arc(s, a_hi, c.r_b, c.r_m, tol_.eps_rate, tol_.max_iters);
    a_touch = a_hi > 0.0 ? point_on_rm_arc(at.t) : p0;
    u = {c.r_b - a_touch.r_b, c.r_m - a_touch.r_m};
  }
  BoundaryPoint b_touch = c;
  Vec2 v;
  if (b_full) {
    const Vec2 d = arc_dir(m, 1.0);
    v = {-d.y, -d.x};
  } else {
    const auto bt = tangent_on_arc(m, b_hi, c.r_m, c.r_b, tol_.eps_rate, tol_.max_iters);
    b_touch = b_hi > 0.0 ? point_on_rb_arc(bt.t) : e;
    v = {b_touch.r_b - c.r_b, b_touch.r_m - c.r_m};
  }
  const double nu = std::hypot(u.x, u.y);
  const double nv = std::hypot(v.x, v.y);
  const double cross = (nu > 0.0 && nv > 0.0) ? (u.x * v.y - u.y * v.x) / (nu * nv) : 0.0;
  corner_on_hull_ = cross <= 1e-12;

  if (corner_on_hull_) {
    add_arc(PieceKind::ArcRm, p0, a_touch);
    add_chord(a_touch, c);
    add_chord(c, b_touch);
    add_arc(PieceKind::ArcRb, b_touch, e);
    return;
  }

  if (a_hi == 0.0 && b_hi == 0.0) {
    add_chord(p0, e);
  } else if (b_hi == 0.0) {
    const auto at = tangent_on_arc(s, a_hi, e.r_b, e.r_m, tol_.eps_rate, tol_.max_iters);
    const BoundaryPoint t = point_on_rm_arc(at.t);
    add_arc(PieceKind::ArcRm, p0, t);
    add_chord(t, e);
  } else if (a_hi == 0.0) {
    const auto bt = tangent_on_arc(m, b_hi, p0.r_m, p0.r_b, tol_.eps_rate, tol_.max_iters);
    const BoundaryPoint t = point_on_rb_arc(bt.t);
    add_chord(p0, t);
    add_arc(PieceKind::ArcRb, t, e);
  } else {
    // Both segments have concave parts and the corner is cut off. Locate the
    // bridge on a dense sample hull, then slide both touch points until each
    // is the tangent point seen from the other.
    constexpr int n = 2048;
    std::vector<BoundaryPoint> samples;
    samples.reserve(2 * n);
    for (int i = 0; i < n; ++i) samples.push_back(point_on_rm_arc(a_hi * i / (n - 1)));
    for (int i = 0; i < n; ++i) samples.push_back(point_on_rb_arc(b_hi * i / (n - 1)));
    const RegionBoundary hull = upper_hull(samples);
    double ta = 0.0, tb = 0.0;
    for (std::size_t i = 1; i < hull.points.size(); ++i) {
      const auto& l = hull.points[i - 1];
      const auto& r = hull.points[i];
      if (l.r_b <= a_hi && r.r_b >= corner_.s_b) {
        ta = l.r_b;
        tb = r.r_m;
        break;
      }
    }
    for (int it = 0; it < 200; ++it) {
      const BoundaryPoint pb = point_on_rb_arc(tb);
      const double ta_new = tangent_on_arc(s, a_hi, pb.r_b, pb.r_m, 1e-14, 200).t;
      const BoundaryPoint pa = point_on_rm_arc(ta_new);
      const double tb_new = tangent_on_arc(m, b_hi, pa.r_m, pa.r_b, 1e-14, 200).t;
      const bool done = std::abs(ta_new - ta) <= 1e-13 && std::abs(tb_new - tb) <= 1e-13;
      ta = ta_new;
      tb = tb_new;
      if (done) break;
    }
    const BoundaryPoint la = point_on_rm_arc(ta);
    const BoundaryPoint rb = point_on_rb_arc(tb);
    add_arc(PieceKind::ArcRm, p0, la);
    add_chord(la, rb);
    add_arc(PieceKind::ArcRb, rb, e);
  }
}

void ConvexifiedRegion::add_arc(PieceKind kind, const BoundaryPoint& l, const BoundaryPoint& r) {
  if (r.r_b > l.r_b) pieces_.push_back({kind, l, r});
}

void ConvexifiedRegion::add_chord(const BoundaryPoint& l, const BoundaryPoint& r) {
  if (r.r_b > l.r_b) pieces_.push_back({PieceKind::Chord, l, r});
}

BoundaryPoint ConvexifiedRegion::point_on_rm_arc(double rb) const {
  const Link1 s = scalars(g_);
  const double a = std::clamp(arc_alpha(s, rb), 0.0, 1.0);
  return {rb, arc_rm(s, a), OperatingMode::PureFD, alloc1(a, 1.0)};
}

BoundaryPoint ConvexifiedRegion::point_on_rb_arc(double rm) const {
  const Link1 m = mirror(scalars(g_));
  const double a = std::clamp(arc_alpha(m, rm), 0.0, 1.0);
  return {arc_rm(m, a), rm, OperatingMode::PureFD, alloc1(1.0, a)};
}

double ConvexifiedRegion::fd_rm(double rb) const { return fd_boundary_rm(g_, rb, tol_).r_m; }

bool ConvexifiedRegion::pure_fd() const {
  return std::none_of(pieces_.begin(), pieces_.end(),
                      [](const Piece& p) { return p.kind == PieceKind::Chord; });
}

TdfdResult ConvexifiedRegion::evaluate(double rb_star) const {
  const double rb = rb_range_check(rb_star, r_bar_b_);
  TdfdResult out;
  auto fd_result = [&](double x) {
    const FdPoint p = fd_boundary_rm(g_, x, tol_);
    out.r_m = p.r_m;
    out.plan.mode = OperatingMode::PureFD;
    out.plan.first = {x, p.r_m, OperatingMode::PureFD, p.alloc};
    out.plan.second = out.plan.first;
    out.plan.lambda = 1.0;
    return out;
  };
  if (pieces_.empty()) return fd_result(rb);
  auto it = std::find_if(pieces_.begin(), pieces_.end(),
                         [&](const Piece& p) { return rb <= p.right.r_b; });
  if (it == pieces_.end()) it = std::prev(pieces_.end());
  if (it->kind != PieceKind::Chord) return fd_result(rb);

  const BoundaryPoint& l = it->left;
  const BoundaryPoint& r = it->right;
  if (rb == l.r_b || rb == r.r_b) {
    const BoundaryPoint& v = rb == l.r_b ? l : r;
    out.r_m = v.r_m;
    out.plan = {OperatingMode::PureFD, v, v, 1.0};
    return out;
  }
  const double lambda = (r.r_b - rb) / (r.r_b - l.r_b);
  out.r_m = lambda * l.r_m + (1.0 - lambda) * r.r_m;
  const bool tdd = l.r_b == 0.0 && r.r_b == r_bar_b_;
  out.plan = {tdd ? OperatingMode::PureTDD : OperatingMode::TimeShare, l, r, lambda};
  return out;
}

std::vector<BoundaryPoint> ConvexifiedRegion::vertices() const {
  std::vector<BoundaryPoint> out;
  if (pieces_.empty()) {
    out.push_back({0.0, r_bar_m_, OperatingMode::PureFD, alloc1(0.0, 1.0)});
    return out;
  }
  out.push_back(pieces_.front().left);
  for (const auto& p : pieces_) out.push_back(p.right);
  return out;
}

void ConvexifiedRegion::check_against_dense_hull(const std::vector<double>& rb_samples,
                                                 int n_samples) const {
  if (pieces_.empty()) return;
  const int half = std::max(2, n_samples / 2);
  std::vector<BoundaryPoint> samples;
  samples.reserve(2 * half);
  const Link1 s = scalars(g_);
  const Link1 m = mirror(s);
  // closed forms on both segments, independent of the piece construction
  for (int i = 0; i < half; ++i) {
    const double rb = corner_.s_b * i / (half - 1);
    samples.push_back({rb, arc_rm(s, std::clamp(arc_alpha(s, rb), 0.0, 1.0)), OperatingMode::PureFD, std::nullopt});
  }
  for (int i = 0; i < half; ++i) {
    const double rm = corner_.s_m * i / (half - 1);
    samples.push_back({arc_rm(m, std::clamp(arc_alpha(m, rm), 0.0, 1.0)), rm, OperatingMode::PureFD, std::nullopt});
  }
  std::sort(samples.begin(), samples.end(),
            [](const auto& a, const auto& b) { return a.r_b < b.r_b; });
  const RegionBoundary hull = upper_hull(samples);

  auto sample_index = [&](double rb) {
    auto it = std::lower_bound(samples.begin(), samples.end(), rb,
                               [](const BoundaryPoint& p, double v) { return p.r_b < v; });
    return it - samples.begin();
  };

  for (double rb : rb_samples) {
    const double exact = evaluate(rb).r_m;
    double dense = interpolate_rm(hull, rb);
    const auto& pts = hull.points;
    auto it = std::lower_bound(pts.begin(), pts.end(), rb,
                               [](const BoundaryPoint& p, double v) { return p.r_b < v; });
    if (it != pts.begin() && it != pts.end() && it->r_b != rb) {
      // an edge joining neighbouring samples is a piece of the FD frontier
      if (sample_index(it->r_b) - sample_index(std::prev(it)->r_b) <= 1)
        dense = std::max(dense, fd_rm(rb));
    }
    if (std::abs(exact - dense) > 2.0 * tol_.eps_rate) {
      std::ostringstream os;
      os.precision(17);
      os << "convexified region disagrees with dense hull at rb=" << rb << ": " << exact
         << " vs " << dense;
      throw std::logic_error(os.str());
    }
  }
}

TdfdResult tdfd_boundary_rm(const Gains& g, double rb_star, const Tolerances& tol,
                            bool debug_hull_check) {
  const ConvexifiedRegion region(g, tol);
  if (debug_hull_check) region.check_against_dense_hull({rb_star});
  return region.evaluate(rb_star);
}

}  // namespace fdcap
