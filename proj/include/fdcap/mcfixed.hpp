#pragma once

// K channels with the shape of each station's allocation held fixed. Any shape
// is folded into the gains with scale_gains first, so the solvers only ever
// see the uniform shape: alpha_b,k = x and alpha_m,k = y on every channel,
// with x, y in [0, 1/K].

#include "fdcap/geometry.hpp"
#include "fdcap/linkmodel.hpp"
#include "fdcap/singlechannel.hpp"

#include <vector>

namespace fdcap {

/// Rates at full uniform power on both sides.
CornerRates mc_corner_rates(const Gains& g);

/// Largest r_b with the uniform shape (MS silent).
double fixed_r_bar_b(const Gains& g);
/// Largest r_m with the uniform shape (BS silent).
double fixed_r_bar_m(const Gains& g);

struct McFindResult {
  double r_m = 0.0;
  Allocation alloc;
  int steps = 0;          // interval halvings
  int polish_steps = 0;
  bool swept_bs = true;   // false: BS at 1/K and the MS level was searched
};

/// Uniform-shape frontier point at r_b = rb_star.
McFindResult mcfind_rm(const Gains& g, double rb_star, const Tolerances& tol = {});

/// Frontier of an arbitrary fixed shape; `shape` rows must each sum to one.
McFindResult mcfind_rm_shaped(const Gains& g, const Allocation& shape, double rb_star,
                              const Tolerances& tol = {});

struct DiscretePowerGrid {
  std::vector<double> levels;  // total-power fractions, strictly increasing
  void validate() const;
};

struct FixedRegionOptions {
  bool refine = false;       // bisect intervals whose midpoint misses the chord
  int max_points = 4096;
};

RegionBoundary fd_region_fixed(const Gains& g, int n_points, const Tolerances& tol = {},
                               const FixedRegionOptions& opt = {});

RegionBoundary fd_region_fixed(const Gains& g, const std::vector<double>& rb_grid,
                               const Tolerances& tol = {});

/// Every FD pair reachable with the discrete levels (one side at 1/K, the
/// other at level/K) and its upper hull.
struct DiscreteRegion {
  std::vector<BoundaryPoint> fd_points;
  RegionBoundary hull;
};

DiscreteRegion tdfd_region_fixed(const Gains& g, const DiscretePowerGrid& grid,
                                 const Tolerances& tol = {});

}  // namespace fdcap
