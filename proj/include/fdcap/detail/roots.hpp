#pragma once

#include <cmath>
#include <limits>

namespace fdcap::detail {

struct RootResult {
  double x = 0.0;
  double residual = 0.0;
  int bisection_steps = 0;
  int polish_steps = 0;
};

enum class StopRule { WidthAndResidual, WidthOrResidual };

/// Root of a monotone f on [lo, hi] that changes sign there. Plain halving
/// until the stop rule fires, then safeguarded Newton inside the final bracket
/// to push the residual to rounding level.
template <typename F, typename DF>
RootResult monotone_root(F&& f, DF&& df, double lo, double hi, double width_tol,
                         double resid_tol, StopRule rule, int max_iters) {
  double flo = f(lo);
  double fhi = f(hi);
  RootResult out;
  if (flo == 0.0) return {lo, 0.0, 0, 0};
  if (fhi == 0.0) return {hi, 0.0, 0, 0};
  const bool increasing = flo < fhi;
  double x = 0.5 * (lo + hi);
  double fx = f(x);
  for (;;) {
    ++out.bisection_steps;
    if ((fx < 0.0) == increasing) lo = x; else hi = x;
    const bool narrow = (hi - lo) <= width_tol;
    const bool close = std::abs(fx) <= resid_tol;
    const bool stop = rule == StopRule::WidthAndResidual ? (narrow && close) : (narrow || close);
    if (stop || out.bisection_steps >= max_iters) break;
    const double mid = 0.5 * (lo + hi);
    if (!(lo < mid && mid < hi)) break;
    x = mid;
    fx = f(x);
  }
  // x may sit on either side; keep it inside [lo, hi] for the polish
  for (int it = 0; it < 60 && fx != 0.0; ++it) {
    const double d = df(x);
    if (!(d != 0.0) || !std::isfinite(d)) break;
    double nx = x - fx / d;
    if (!(nx > lo && nx < hi)) nx = 0.5 * (lo + hi);
    const double fn = f(nx);
    ++out.polish_steps;
    if ((fn < 0.0) == increasing) lo = nx; else hi = nx;
    if (std::abs(fn) >= std::abs(fx) && std::abs(nx - x) <= 4 * std::numeric_limits<double>::epsilon() * std::abs(x))
      break;
    if (std::abs(fn) < std::abs(fx)) {
      x = nx;
      fx = fn;
    }
    if (hi - lo <= 2 * std::numeric_limits<double>::epsilon() * std::abs(x)) break;
  }
  out.x = x;
  out.residual = fx;
  return out;
}

}  // namespace fdcap::detail
