#include "fdcap/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fdcap {

namespace {

constexpr double kTurnTol = 1e-12;
constexpr double kVertexSnap = 1e-8;

// Height of `a` above the chord o-b (negative when below), with o.r_b < b.r_b.
// This is the cross product (a-o) x (b-o) normalized by the chord's r_b span.
double height_above_chord(const BoundaryPoint& o, const BoundaryPoint& a,
                          const BoundaryPoint& b) {
  const double dx = b.r_b - o.r_b;
  const double cross = (a.r_b - o.r_b) * (b.r_m - o.r_m) - (a.r_m - o.r_m) * dx;
  return -cross / dx;
}

std::size_t bracket(const std::vector<BoundaryPoint>& pts, double rb_star) {
  // first index with r_b >= rb_star
  auto it = std::lower_bound(pts.begin(), pts.end(), rb_star,
                             [](const BoundaryPoint& p, double v) { return p.r_b < v; });
  return static_cast<std::size_t>(it - pts.begin());
}

}  // namespace

std::string to_string(OperatingMode mode) {
  switch (mode) {
    case OperatingMode::PureFD: return "fd";
    case OperatingMode::TimeShare: return "timeshare";
    case OperatingMode::PureTDD: return "tdd";
  }
  return "?";
}

bool RegionBoundary::r_b_strictly_increasing() const {
  for (std::size_t i = 1; i < points.size(); ++i)
    if (!(points[i].r_b > points[i - 1].r_b)) return false;
  return true;
}

bool RegionBoundary::r_m_non_increasing(double slack) const {
  for (std::size_t i = 1; i < points.size(); ++i)
    if (points[i].r_m > points[i - 1].r_m + slack) return false;
  return true;
}

bool RegionBoundary::is_convex(double slack) const {
  for (std::size_t i = 2; i < points.size(); ++i)
    if (height_above_chord(points[i - 2], points[i - 1], points[i]) < -slack) return false;
  return true;
}

RegionBoundary upper_hull(std::vector<BoundaryPoint> points) {
  if (points.empty()) throw std::invalid_argument("upper_hull: empty point set");
  std::stable_sort(points.begin(), points.end(), [](const auto& a, const auto& b) {
    return a.r_b < b.r_b || (a.r_b == b.r_b && a.r_m > b.r_m);
  });
  std::vector<BoundaryPoint> hull;
  hull.reserve(points.size());
  for (auto& p : points) {
    if (!hull.empty() && hull.back().r_b == p.r_b) continue;  // tie: larger r_m came first
    while (hull.size() >= 2 &&
           height_above_chord(hull[hull.size() - 2], hull.back(), p) <= kTurnTol)
      hull.pop_back();
    hull.push_back(std::move(p));
  }
  return {std::move(hull), RegionSource::tdfd};
}

MixResult mix_for_target(const RegionBoundary& hull, double rb_star) {
  const auto& pts = hull.points;
  if (pts.empty()) throw std::invalid_argument("mix_for_target: empty hull");
  if (rb_star < pts.front().r_b || rb_star > pts.back().r_b)
    throw std::out_of_range("mix_for_target: rb_star outside the hull span");

  std::size_t i = bracket(pts, rb_star);
  MixResult out;
  auto vertex = [&](std::size_t j) {
    out.r_m = pts[j].r_m;
    out.plan.mode = OperatingMode::PureFD;
    out.plan.first = pts[j];
    out.plan.second = pts[j];
    out.plan.lambda = 1.0;
    return out;
  };
  if (i == 0 || pts[i].r_b == rb_star) return vertex(i);
  // Targets within solver noise of a vertex are that vertex.
  const double chord = pts[i].r_b - pts[i - 1].r_b;
  if (rb_star - pts[i - 1].r_b <= kVertexSnap * chord) return vertex(i - 1);
  if (pts[i].r_b - rb_star <= kVertexSnap * chord) return vertex(i);
  const BoundaryPoint& left = pts[i - 1];
  const BoundaryPoint& right = pts[i];
  const double lambda = (right.r_b - rb_star) / (right.r_b - left.r_b);
  out.r_m = lambda * left.r_m + (1.0 - lambda) * right.r_m;
  // A chord from the r_m axis to the r_b axis is plain TDD.
  const bool tdd = left.r_b == 0.0 && right.r_m == 0.0 && i == 1 && i + 1 == pts.size();
  out.plan.mode = tdd ? OperatingMode::PureTDD : OperatingMode::TimeShare;
  out.plan.first = left;
  out.plan.second = right;
  out.plan.lambda = lambda;
  return out;
}

double interpolate_rm(const RegionBoundary& boundary, double rb_star) {
  const auto& pts = boundary.points;
  if (pts.empty()) throw std::invalid_argument("interpolate_rm: empty boundary");
  if (rb_star <= pts.front().r_b) return pts.front().r_m;
  if (rb_star >= pts.back().r_b) return pts.back().r_m;
  std::size_t i = bracket(pts, rb_star);
  if (pts[i].r_b == rb_star) return pts[i].r_m;
  const auto& l = pts[i - 1];
  const auto& r = pts[i];
  const double lambda = (r.r_b - rb_star) / (r.r_b - l.r_b);
  return lambda * l.r_m + (1.0 - lambda) * r.r_m;
}

}  // namespace fdcap
