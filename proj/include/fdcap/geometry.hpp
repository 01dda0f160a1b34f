#pragma once

#include "fdcap/linkmodel.hpp"

#include <optional>
#include <string>
#include <vector>

namespace fdcap {

enum class OperatingMode { PureFD, TimeShare, PureTDD };

std::string to_string(OperatingMode mode);

/// One sample of a region frontier. `alloc` is the allocation achieving the
/// pair when it is a single FD operating point.
struct BoundaryPoint {
  double r_b = 0.0;
  double r_m = 0.0;
  OperatingMode mode = OperatingMode::PureFD;
  std::optional<Allocation> alloc;
};

/// How a target rate is reached: directly, or by time sharing two FD points
/// with weight `lambda` on `first`.
struct TdfdPlan {
  OperatingMode mode = OperatingMode::PureFD;
  BoundaryPoint first;
  BoundaryPoint second;
  double lambda = 1.0;
};

enum class RegionSource { fd, tdfd };

struct RegionBoundary {
  std::vector<BoundaryPoint> points;
  RegionSource source = RegionSource::fd;

  bool r_b_strictly_increasing() const;
  bool r_m_non_increasing(double slack = 0.0) const;
  /// Chord slopes between consecutive points never increase (within slack).
  bool is_convex(double slack = 1e-12) const;
};

struct MixResult {
  double r_m = 0.0;
  TdfdPlan plan;
};

/// Upper convex hull by monotone chain. Input is sorted internally; equal r_b
/// keeps the larger r_m. Throws on empty input.
RegionBoundary upper_hull(std::vector<BoundaryPoint> points);

/// Time-sharing mix of the two hull vertices bracketing `rb_star`.
MixResult mix_for_target(const RegionBoundary& hull, double rb_star);

/// Piecewise-linear evaluation of a frontier at `rb_star` (no plan).
double interpolate_rm(const RegionBoundary& boundary, double rb_star);

}  // namespace fdcap
