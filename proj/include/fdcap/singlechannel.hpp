#pragma once

// K = 1. The FD frontier is made of two segments meeting at the corner
// (s_b, s_m): S_b with the MS at full power and the BS swept, S_m with the BS
// at full power and the MS swept. S_m is S_b of the mirrored link with axes
// swapped, so most routines here are written once for S_b.

#include "fdcap/geometry.hpp"
#include "fdcap/linkmodel.hpp"

#include <optional>
#include <string>
#include <vector>

namespace fdcap {

struct CornerRates {
  double s_b = 0.0;
  double s_m = 0.0;
};

CornerRates corner_rates(const Gains& g);

struct FdPoint {
  double r_m = 0.0;
  Allocation alloc;
  int steps = 0;  // bisection steps (0 for the closed-form branch)
};

/// Largest r_m with r_b = rb_star on the FD region.
FdPoint fd_boundary_rm(const Gains& g, double rb_star, const Tolerances& tol = {});

/// r_m(r_b) concave on [0, s_b].
bool concave_rm_condition(const Gains& g);
/// r_b(r_m) concave on [0, s_m].
bool concave_rb_condition(const Gains& g);
bool region_is_convex(const Gains& g);

enum class ShapeKind { ConcaveAll, ConvexAll, ConcaveThenConvex };
std::string to_string(ShapeKind kind);

struct ShapeClass {
  ShapeKind kind = ShapeKind::ConcaveAll;
  std::optional<double> breakpoint_rb;     // in the segment's own rate axis
  std::optional<double> breakpoint_alpha;
};

/// Curvature type of r_m(r_b) on S_b.
ShapeClass classify_shape_rm(const Gains& g);
/// Curvature type of r_b(r_m) on S_m; the breakpoint is an r_m value.
ShapeClass classify_shape_rb(const Gains& g);

/// Right end (in r_b) of the concave part of S_b, 0 when there is none.
double concave_extent_rm(const Gains& g, const ShapeClass& shape);

struct TangentResult {
  double rb_touch = 0.0;
  double rm_touch = 0.0;
  double slope = 0.0;        // d r_m / d r_b of the touching line
  int steps = 0;
  bool degenerate = false;   // the point itself is the touching point
  double residual = 0.0;     // line value at the query r_b minus query r_m
};

/// Line through a point on the concave part of S_b that is tangent there and
/// passes through (s_b, s_m).
TangentResult tangent_from_corner(const Gains& g, const ShapeClass& shape,
                                  const Tolerances& tol = {});

/// Same for an arbitrary query point q with q.r_b >= every touch candidate.
TangentResult tangent_from_point(const Gains& g, const ShapeClass& shape, RatePair q,
                                 const Tolerances& tol = {});

struct TdfdResult {
  double r_m = 0.0;
  TdfdPlan plan;
};

/// TDFD region of one channel: the upper concave envelope of the FD frontier,
/// built once and then queried.
class ConvexifiedRegion {
 public:
  explicit ConvexifiedRegion(const Gains& g, const Tolerances& tol = {});

  TdfdResult evaluate(double rb_star) const;

  /// Hull breakpoints from (0, r_bar_m) to (r_bar_b, 0): chord endpoints and
  /// the ends of FD arcs.
  std::vector<BoundaryPoint> vertices() const;

  /// Cross-check against the hull of dense frontier samples; throws
  /// std::logic_error on disagreement beyond 2 eps_rate.
  void check_against_dense_hull(const std::vector<double>& rb_samples,
                                int n_samples = 10'000) const;

  bool corner_on_hull() const { return corner_on_hull_; }
  bool pure_fd() const;
  const ShapeClass& shape_rm() const { return shape_a_; }
  const ShapeClass& shape_rb() const { return shape_b_; }
  CornerRates corner() const { return corner_; }
  double r_bar_b() const { return r_bar_b_; }
  double r_bar_m() const { return r_bar_m_; }

 private:
  enum class PieceKind { ArcRm, ArcRb, Chord };
  struct Piece {
    PieceKind kind;
    BoundaryPoint left;
    BoundaryPoint right;
  };

  void add_arc(PieceKind kind, const BoundaryPoint& l, const BoundaryPoint& r);
  void add_chord(const BoundaryPoint& l, const BoundaryPoint& r);
  BoundaryPoint point_on_rm_arc(double rb) const;
  BoundaryPoint point_on_rb_arc(double rm) const;
  double fd_rm(double rb) const;

  Gains g_;
  Tolerances tol_;
  CornerRates corner_;
  double r_bar_b_ = 0.0;
  double r_bar_m_ = 0.0;
  ShapeClass shape_a_;
  ShapeClass shape_b_;
  bool corner_on_hull_ = true;
  std::vector<Piece> pieces_;
};

TdfdResult tdfd_boundary_rm(const Gains& g, double rb_star, const Tolerances& tol = {},
                            bool debug_hull_check = false);

}  // namespace fdcap
