#pragma once

// General per-channel power allocation. The frontier point at r_b = rb_star
// is approached through the sum-rate problem with a one-sided rate
// constraint (r_b <= rb_star below the sum-rate corner, r_b >= rb_star above
// it), restricted to the per-channel caps under which the sum rate is
// concave in each station's block. That problem is solved by alternating
// block maximization; a cheaper shape heuristic is provided alongside.

#include "fdcap/geometry.hpp"
#include "fdcap/linkmodel.hpp"
#include "fdcap/mcfixed.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace fdcap {

enum class Side { below_sb, above_sb };
enum class ForcedHd { none, bs_only, ms_only };

struct RestrictionBounds {
  ArrayXd A_b;  // caps on alpha_b,k
  ArrayXd A_m;  // caps on alpha_m,k
  std::vector<ForcedHd> forced_hd;

  Index channels() const { return A_b.size(); }
  static RestrictionBounds unrestricted(Index k);
};

RestrictionBounds restriction_bounds(const Gains& g, Side side);

/// True unless every channel satisfies both caps at full power.
bool c1c2_restrictive(const Gains& g);

enum class RateConstraint { None, AtMost, AtLeast };

struct SubproblemResult {
  ArrayXd alpha;
  bool feasible = true;
  double level = 0.0;        // common marginal of the free channels
  double multiplier = 0.0;   // rate-constraint multiplier (convex branch)
  Index k_star = -1;         // largest marginal at zero power
  double kkt_residual = 0.0;
  int iterations = 0;
};

/// Best alpha_b for fixed alpha_m.
SubproblemResult solve_sub_b(const Gains& g, const ArrayXd& alpha_m, double rb_star,
                             RateConstraint constraint, const RestrictionBounds& bounds,
                             const Tolerances& tol = {});

/// Best alpha_m for fixed alpha_b.
SubproblemResult solve_sub_m(const Gains& g, const ArrayXd& alpha_b, double rb_star,
                             RateConstraint constraint, const RestrictionBounds& bounds,
                             const Tolerances& tol = {});

enum class AltMaxStatus { Converged, IterationLimit, RestrictedInfeasible };

struct AltMaxOptions {
  int restarts = 8;
  std::uint64_t seed = 42;
  double alloc_change_eps = 1e-6;
  int max_iters = 500;
  bool shared_multiplier = true;  // joint refinement of the best run
};

struct Trajectory {
  Allocation allocation;
  RatePair rates;
  std::vector<double> objective_trace;
  int iterations = 0;
  AltMaxStatus status = AltMaxStatus::IterationLimit;
  bool warm_started = false;  // restarted from the uniform fixed-shape point
  double worst_kkt_b = 0.0;
};

struct AltMaxResult {
  Allocation allocation;
  RatePair rates;
  int iterations = 0;
  std::vector<double> objective_trace;
  bool converged = false;
  AltMaxStatus status = AltMaxStatus::IterationLimit;
  Side side = Side::below_sb;
  RateConstraint constraint = RateConstraint::None;
  bool refined = false;  // the joint refinement improved on the best run
  std::vector<Trajectory> trajectories;  // every start, in order
};

/// One alternating run from `start`.
Trajectory altmax_trajectory(const Gains& g, double rb_star, RateConstraint constraint,
                             const RestrictionBounds& bounds, const Allocation& start,
                             const Tolerances& tol, const AltMaxOptions& opt);

/// Starting points: all zeros, then restarts-1 seeded random feasible points.
std::vector<Allocation> altmax_starts(const Gains& g, double rb_star, RateConstraint constraint,
                                      const RestrictionBounds& bounds, const AltMaxOptions& opt);

AltMaxResult altmax(const Gains& g, double rb_star, RateConstraint constraint,
                    const RestrictionBounds& bounds, const Tolerances& tol = {},
                    const AltMaxOptions& opt = {});

struct SumRateResult {
  CornerRates corner;
  Allocation allocation;
  Side bounds_side = Side::below_sb;
  AltMaxResult detail;
};

SumRateResult sum_rate_max(const Gains& g, const Tolerances& tol = {},
                           const AltMaxOptions& opt = {});

/// Picks the constraint side from the sum-rate corner and runs altmax.
AltMaxResult altmax(const Gains& g, double rb_star, const SumRateResult& corner,
                    const Tolerances& tol = {}, const AltMaxOptions& opt = {});

AltMaxResult altmax(const Gains& g, double rb_star, const Tolerances& tol = {},
                    const AltMaxOptions& opt = {});

struct HeuristicResult {
  double r_m = 0.0;
  RatePair rates;
  Allocation shape;       // winning shape, each row sums to one
  Allocation allocation;  // actual per-channel fractions
  std::vector<Index> channels_off;
  bool mirrored_branch = false;
  double seed_rm[2] = {0.0, 0.0};  // mcfind on the unmodified seed shapes
};

HeuristicResult pa_heuristic(const Gains& g, double rb_star, const SumRateResult& corner,
                             const Tolerances& tol = {});

HeuristicResult pa_heuristic(const Gains& g, double rb_star, const Tolerances& tol = {},
                             const AltMaxOptions& opt = {});

enum class GeneralMethod { altmax, heuristic };

struct GeneralRegion {
  std::vector<BoundaryPoint> raw;
  RegionBoundary hull;
  SumRateResult corner;
  int infeasible_runs = 0;
  int nonconverged_runs = 0;
};

GeneralRegion tdfd_region_general(const Gains& g, const std::vector<double>& rb_grid,
                                  GeneralMethod method, const Tolerances& tol = {},
                                  const AltMaxOptions& opt = {});

/// Same, reusing a precomputed sum-rate corner; grid points run on `jobs`
/// threads.
GeneralRegion tdfd_region_general(const Gains& g, const std::vector<double>& rb_grid,
                                  GeneralMethod method, const SumRateResult& corner,
                                  const Tolerances& tol = {}, const AltMaxOptions& opt = {},
                                  int jobs = 1);

}  // namespace fdcap
