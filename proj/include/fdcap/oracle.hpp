#pragma once

// Brute-force references for the solvers. Everything here evaluates the rate
// formulas directly on a grid; nothing calls into the solver modules.

#include "fdcap/linkmodel.hpp"
#include "fdcap/mcgeneral.hpp"

#include <cstdint>
#include <vector>

namespace fdcap {

struct GridSpec {
  double step = 1e-3;  // in (0, 0.1]
  int max_dim = 6;     // decision variables allowed

  void validate() const;
};

inline constexpr double kMaxGridPoints = 1e9;

enum class GridMode {
  per_channel,     // every alpha_{b,k}, alpha_{m,k} on its own simplex grid
  uniform_scalar,  // alpha_b,k = x, alpha_m,k = y with x, y in [0, 1/K]
};

struct GridResult {
  double value = 0.0;
  Allocation alloc;
  std::uint64_t evaluated = 0;
  bool found = false;
};

/// Largest r_m with r_b >= rb_star. One coordinate of each candidate is
/// solved from r_b = rb_star, the rest are gridded.
GridResult grid_max_rm(const Gains& g, double rb_star, const GridSpec& spec,
                       GridMode mode = GridMode::per_channel);

/// Largest r_b + r_m over the capped simplex pair, subject to the one-sided
/// rate constraint.
GridResult grid_max_sum_rate(const Gains& g, double rb_star, RateConstraint constraint,
                             const RestrictionBounds& bounds, const GridSpec& spec);

struct CurvatureSample {
  double r_b;
  double second_difference;
  int sign;  // -1, 0, +1
};

/// Second differences of r_m(r_b) along the K = 1 boundary below s_b, at
/// each interior point of `rb_grid`.
std::vector<CurvatureSample> curvature_samples(const Gains& g, const std::vector<double>& rb_grid);

}  // namespace fdcap
