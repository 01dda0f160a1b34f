#include "fdcap/oracle.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace fdcap {

namespace {

constexpr int kMaxK = 3;
using Vec = std::array<double, kMaxK>;

struct Pair {
  double rb;
  double rm;
};

// Rates straight from the link model definition.
struct Evaluator {
  int k;
  Vec bm{}, mb{}, mm{}, bb{};

  explicit Evaluator(const Gains& g) : k(static_cast<int>(g.channels())) {
    for (int i = 0; i < k; ++i) {
      bm[i] = g.gamma_bm[i];
      mb[i] = g.gamma_mb[i];
      mm[i] = g.gamma_mm[i];
      bb[i] = g.gamma_bb[i];
    }
  }

  Pair operator()(const Vec& a, const Vec& b) const {
    Pair p{0.0, 0.0};
    for (int i = 0; i < k; ++i) {
      p.rb += std::log2(1.0 + a[i] * bm[i] / (1.0 + b[i] * mm[i]));
      p.rm += std::log2(1.0 + b[i] * mb[i] / (1.0 + a[i] * bb[i]));
    }
    return p;
  }
};

std::vector<double> axis(double step, double cap) {
  std::vector<double> v;
  if (cap < 0.0) return v;
  const long n = static_cast<long>(std::floor(cap / step + 1e-9));
  v.reserve(static_cast<std::size_t>(n) + 2);
  for (long i = 0; i <= n; ++i) v.push_back(std::min(cap, static_cast<double>(i) * step));
  if (cap - v.back() > 1e-12) v.push_back(cap);
  return v;
}

// Visits every point of the product of axes[0..n) whose entries sum to at
// most `budget`.
void enumerate(const std::vector<std::vector<double>>& axes, int n, double budget, Vec& cur,
               const std::function<void(const Vec&, double)>& visit, int i = 0,
               double used = 0.0) {
  if (i == n) {
    visit(cur, used);
    return;
  }
  for (double v : axes[static_cast<std::size_t>(i)]) {
    if (used + v > budget + 1e-12) break;
    cur[i] = v;
    enumerate(axes, n, budget, cur, visit, i + 1, used + v);
  }
  cur[i] = 0.0;
}

// upper bound: plain product of the axes
double count_points(const std::vector<std::vector<double>>& axes, int n) {
  double c = 1.0;
  for (int i = 0; i < n; ++i) c *= static_cast<double>(axes[static_cast<std::size_t>(i)].size());
  return c;
}

void refuse_if_large(double points) {
  if (points > kMaxGridPoints) {
    std::ostringstream os;
    os << "grid oracle: " << points << " points exceeds the cap of " << kMaxGridPoints;
    throw std::length_error(os.str());
  }
}

// Bisection for the crossing of a monotone function on [lo, hi]; returns
// the end of the final bracket on the side where `ok` holds.
template <class Ok>
double bisect(Ok ok, double lo, double hi, bool ok_at_hi) {
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (!(mid > lo && mid < hi)) break;
    if (ok(mid) == ok_at_hi) hi = mid; else lo = mid;
  }
  return ok_at_hi ? hi : lo;
}

Allocation to_allocation(const Vec& a, const Vec& b, int k) {
  Allocation out = Allocation::zeros(k);
  for (int i = 0; i < k; ++i) {
    out.alpha_b[i] = a[i];
    out.alpha_m[i] = b[i];
  }
  return out;
}

void keep_best(GridResult& r, double value, const Vec& a, const Vec& b, int k) {
  ++r.evaluated;
  if (!r.found || value > r.value) {
    r.found = true;
    r.value = value;
    r.alloc = to_allocation(a, b, k);
  }
}

// targets at the corner itself are met to rounding
double rate_floor(double rb_star) { return rb_star - 1e-12 * std::max(1.0, rb_star); }

GridResult per_channel_rm(const Gains& g, double rb_star, const GridSpec& spec) {
  const Evaluator ev(g);
  const double rb_min = rate_floor(rb_star);
  const int k = ev.k;
  std::vector<std::vector<double>> axes(static_cast<std::size_t>(k), axis(spec.step, 1.0));
  refuse_if_large(2.0 * count_points(axes, k) * count_points(axes, k - 1));
  GridResult r;
  Vec a{}, b{};

  // pass 1: MS gridded, BS gridded but the last channel solved from r_b
  enumerate(axes, k, 1.0, b, [&](const Vec& bv, double) {
    enumerate(axes, k - 1, 1.0, a, [&](const Vec& av, double used) {
      Vec x = av;
      const double rem = std::max(0.0, 1.0 - used);
      auto ok = [&](double t) {
        x[k - 1] = t;
        return ev(x, bv).rb >= rb_min;
      };
      if (!ok(rem)) return;
      const double t = ok(0.0) ? 0.0 : bisect(ok, 0.0, rem, true);
      x[k - 1] = t;
      keep_best(r, ev(x, bv).rm, x, bv, k);
    });
  });
  // pass 2: BS gridded, MS last channel as large as r_b allows
  enumerate(axes, k, 1.0, a, [&](const Vec& av, double) {
    enumerate(axes, k - 1, 1.0, b, [&](const Vec& bv, double used) {
      Vec y = bv;
      const double rem = std::max(0.0, 1.0 - used);
      auto ok = [&](double t) {
        y[k - 1] = t;
        return ev(av, y).rb >= rb_min;
      };
      if (!ok(0.0)) return;
      const double t = ok(rem) ? rem : bisect(ok, 0.0, rem, false);
      y[k - 1] = t;
      keep_best(r, ev(av, y).rm, av, y, k);
    });
  });
  return r;
}

GridResult uniform_rm(const Gains& g, double rb_star, const GridSpec& spec) {
  const Evaluator ev(g);
  const double rb_min = rate_floor(rb_star);
  const int k = ev.k;
  const double full = 1.0 / k;
  const std::vector<double> levels = axis(spec.step * full, full);
  refuse_if_large(2.0 * static_cast<double>(levels.size()));
  auto fill = [&](double v) {
    Vec out{};
    for (int i = 0; i < k; ++i) out[i] = v;
    return out;
  };
  GridResult r;
  for (double y : levels) {
    const Vec yv = fill(y);
    auto ok = [&](double x) { return ev(fill(x), yv).rb >= rb_min; };
    if (!ok(full)) continue;
    const double x = ok(0.0) ? 0.0 : bisect(ok, 0.0, full, true);
    keep_best(r, ev(fill(x), yv).rm, fill(x), yv, k);
  }
  for (double x : levels) {
    const Vec xv = fill(x);
    auto ok = [&](double y) { return ev(xv, fill(y)).rb >= rb_min; };
    if (!ok(0.0)) continue;
    const double y = ok(full) ? full : bisect(ok, 0.0, full, false);
    keep_best(r, ev(xv, fill(y)).rm, xv, fill(y), k);
  }
  return r;
}

bool meets(RateConstraint c, double rb, double rb_star) {
  switch (c) {
    case RateConstraint::None: return true;
    case RateConstraint::AtMost: return rb <= rb_star;
    case RateConstraint::AtLeast: return rb >= rb_star;
  }
  return true;
}

}  // namespace

void GridSpec::validate() const {
  if (!(step > 0.0 && step <= 0.1)) throw std::invalid_argument("GridSpec: step must lie in (0, 0.1]");
  if (max_dim < 1 || max_dim > 6) throw std::invalid_argument("GridSpec: max_dim must lie in [1, 6]");
}

GridResult grid_max_rm(const Gains& g, double rb_star, const GridSpec& spec, GridMode mode) {
  spec.validate();
  g.validate();
  const Index k = g.channels();
  if (mode == GridMode::uniform_scalar) return uniform_rm(g, rb_star, spec);
  if (2 * k > spec.max_dim || k > kMaxK)
    throw std::invalid_argument("grid_max_rm: 2K exceeds max_dim for the per-channel grid");
  return per_channel_rm(g, rb_star, spec);
}

GridResult grid_max_sum_rate(const Gains& g, double rb_star, RateConstraint constraint,
                             const RestrictionBounds& bounds, const GridSpec& spec) {
  spec.validate();
  g.validate();
  const Index kk = g.channels();
  if (2 * kk > spec.max_dim || kk > kMaxK)
    throw std::invalid_argument("grid_max_sum_rate: 2K exceeds max_dim");
  if (bounds.channels() != kk) throw std::invalid_argument("grid_max_sum_rate: bounds length");
  const Evaluator ev(g);
  const int k = ev.k;
  std::vector<std::vector<double>> ax_b, ax_m;
  for (int i = 0; i < k; ++i) {
    ax_b.push_back(axis(spec.step, std::clamp(bounds.A_b[i], 0.0, 1.0)));
    ax_m.push_back(axis(spec.step, std::clamp(bounds.A_m[i], 0.0, 1.0)));
  }
  refuse_if_large(2.0 * count_points(ax_b, k) * count_points(ax_m, k));
  GridResult r;
  Vec a{}, b{};

  // a fully gridded block, the other block with its last channel taking
  // every grid value plus the exact crossing of r_b = rb_star
  auto sweep = [&](bool bs_last) {
    const auto& outer = bs_last ? ax_m : ax_b;
    const auto& inner = bs_last ? ax_b : ax_m;
    Vec& o = bs_last ? b : a;
    Vec& in = bs_last ? a : b;
    enumerate(outer, k, 1.0, o, [&](const Vec& ov, double) {
      enumerate(inner, k - 1, 1.0, in, [&](const Vec& iv, double used) {
        Vec x = iv;
        const double cap = std::min(inner[static_cast<std::size_t>(k - 1)].back(),
                                    std::max(0.0, 1.0 - used));
        auto eval = [&](double t) {
          x[k - 1] = t;
          return bs_last ? ev(x, ov) : ev(ov, x);
        };
        auto consider = [&](double t) {
          const Pair p = eval(t);
          if (!meets(constraint, p.rb, rb_star)) return;
          if (bs_last) keep_best(r, p.rb + p.rm, x, ov, k);
          else keep_best(r, p.rb + p.rm, ov, x, k);
        };
        for (double t : inner[static_cast<std::size_t>(k - 1)]) {
          if (t > cap + 1e-12) break;
          consider(t);
        }
        consider(cap);
        if (constraint != RateConstraint::None) {
          // r_b rises with the BS entry and falls with the MS entry
          auto ok = [&](double t) { return meets(constraint, eval(t).rb, rb_star); };
          const bool lo_ok = ok(0.0), hi_ok = ok(cap);
          if (lo_ok != hi_ok) consider(bisect(ok, 0.0, cap, hi_ok));
        }
      });
    });
  };
  sweep(true);
  sweep(false);
  return r;
}

std::vector<CurvatureSample> curvature_samples(const Gains& g, const std::vector<double>& rb_grid) {
  g.validate();
  if (g.channels() != 1) throw std::invalid_argument("curvature_samples: K must be 1");
  if (rb_grid.size() < 3) throw std::invalid_argument("curvature_samples: need at least 3 points");
  const long double bm = g.gamma_bm[0], mb = g.gamma_mb[0], mm = g.gamma_mm[0], bb = g.gamma_bb[0];
  const long double s_b = std::log2(1.0L + bm / (1.0L + mm));
  for (std::size_t i = 0; i < rb_grid.size(); ++i) {
    if (rb_grid[i] < 0.0 || rb_grid[i] > static_cast<double>(s_b) * (1 + 1e-12))
      throw std::invalid_argument("curvature_samples: rb_grid must lie in [0, s_b]");
    if (i > 0 && !(rb_grid[i] > rb_grid[i - 1]))
      throw std::invalid_argument("curvature_samples: rb_grid must be strictly increasing");
  }
  // MS at full power, BS power from r_b
  auto rm_of = [&](long double rb) {
    const long double ab = std::expm1(rb * std::log(2.0L)) * (1.0L + mm) / bm;
    return std::log2(1.0L + mb / (1.0L + ab * bb));
  };
  std::vector<long double> f(rb_grid.size());
  long double fmax = 0.0L;
  for (std::size_t i = 0; i < rb_grid.size(); ++i) {
    f[i] = rm_of(rb_grid[i]);
    fmax = std::max(fmax, std::abs(f[i]));
  }
  std::vector<CurvatureSample> out;
  out.reserve(rb_grid.size() - 2);
  for (std::size_t i = 1; i + 1 < rb_grid.size(); ++i) {
    const long double h1 = rb_grid[i] - rb_grid[i - 1];
    const long double h2 = rb_grid[i + 1] - rb_grid[i];
    const long double d2 = 2.0L * ((f[i + 1] - f[i]) / h2 - (f[i] - f[i - 1]) / h1) / (h1 + h2);
    const long double noise = 64.0L * std::numeric_limits<long double>::epsilon() * fmax / (h1 * h2);
    const int sign = std::abs(d2) <= noise ? 0 : (d2 > 0 ? 1 : -1);
    out.push_back({rb_grid[i], static_cast<double>(d2), sign});
  }
  return out;
}

}  // namespace fdcap
