#include "fdcap/mcgeneral.hpp"

#include "fdcap/detail/parallel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>

namespace fdcap {

namespace {

constexpr double kLn = std::numbers::ln2;
constexpr double kEps = std::numeric_limits<double>::epsilon();

// One channel's contribution to a rate as a function of the free variable v:
// log2((a1 + b1 v) / (a2 + b2 v)) = log2(1 + (n0 + nb v) / (a2 + b2 v)),
// with c = b1 a2 - b2 a1 kept in closed form to avoid cancellation.
struct Term {
  double a1, b1, a2, b2, n0, nb, c;

  double value(double v) const { return std::log1p((n0 + nb * v) / (a2 + b2 * v)) / kLn; }
  double d1(double v) const { return c / ((a1 + b1 * v) * (a2 + b2 * v) * kLn); }
  double d2(double v) const {
    const double p = a1 + b1 * v;
    const double q = a2 + b2 * v;
    return -c * (b1 * q + b2 * p) / (p * p * q * q * kLn);
  }
};

struct Channel {
  Term rb;
  Term rm;
  double cap;
};

// Coefficients, lowest degree first.
struct Poly {
  std::array<double, 5> c{};
  int deg = 0;

  double operator()(double v) const {
    double s = 0.0;
    for (int i = deg; i >= 0; --i) s = s * v + c[i];
    return s;
  }
  Poly times(double a, double b) const {
    Poly out;
    out.deg = deg + 1;
    for (int i = 0; i <= deg; ++i) {
      out.c[i] += a * c[i];
      out.c[i + 1] += b * c[i];
    }
    return out;
  }
  Poly derivative() const {
    Poly out;
    out.deg = std::max(0, deg - 1);
    for (int i = 1; i <= deg; ++i) out.c[i - 1] = i * c[i];
    return out;
  }
  void trim() {
    double scale = 0.0;
    for (int i = 0; i <= deg; ++i) scale = std::max(scale, std::abs(c[i]));
    while (deg > 0 && std::abs(c[deg]) <= 1e-15 * scale) c[deg--] = 0.0;
  }
};

Poly linear(double a, double b) {
  Poly p;
  p.deg = 1;
  p.c[0] = a;
  p.c[1] = b;
  return p;
}

Poly operator+(Poly a, const Poly& b) {
  a.deg = std::max(a.deg, b.deg);
  for (int i = 0; i <= b.deg; ++i) a.c[i] += b.c[i];
  return a;
}

Poly scaled(Poly p, double s) {
  for (int i = 0; i <= p.deg; ++i) p.c[i] *= s;
  return p;
}

// Real roots of p in [lo, hi], split at the roots of p'.
void real_roots(Poly p, double lo, double hi, std::vector<double>& out) {
  p.trim();
  if (p.deg == 0) return;
  if (p.deg == 1) {
    const double r = -p.c[0] / p.c[1];
    if (r >= lo && r <= hi) out.push_back(r);
    return;
  }
  std::vector<double> pts{lo};
  real_roots(p.derivative(), lo, hi, pts);
  pts.push_back(hi);
  std::sort(pts.begin(), pts.end());
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    double a = pts[i], b = pts[i + 1];
    double fa = p(a), fb = p(b);
    if (fa == 0.0) {
      out.push_back(a);
      continue;
    }
    if ((fa < 0.0) == (fb < 0.0)) continue;
    for (int it = 0; it < 200; ++it) {
      const double m = 0.5 * (a + b);
      if (!(m > a && m < b)) break;
      const double fm = p(m);
      if ((fm < 0.0) == (fa < 0.0)) {
        a = m;
        fa = fm;
      } else {
        b = m;
      }
    }
    out.push_back(0.5 * (a + b));
  }
}

// The sum rate restricted to one station's block; the other block is fixed.
class Block {
 public:
  Block(const Gains& g, const ArrayXd& fixed, bool bs_free, const ArrayXd& caps)
      : bs_free_(bs_free) {
    const Index k = g.channels();
    if (fixed.size() != k || caps.size() != k)
      throw std::invalid_argument("subproblem: fixed block or caps have the wrong length");
    ch_.reserve(static_cast<std::size_t>(k));
    for (Index i = 0; i < k; ++i) {
      const double bm = g.gamma_bm[i], mb = g.gamma_mb[i], mm = g.gamma_mm[i], bb = g.gamma_bb[i];
      const double o = fixed[i];
      Channel c{};
      if (bs_free) {
        const double a = 1.0 + o * mm;
        c.rb = {a, bm, a, 0.0, 0.0, bm, bm * a};
        c.rm = {1.0 + o * mb, bb, 1.0, bb, o * mb, 0.0, -bb * o * mb};
      } else {
        const double a = 1.0 + o * bb;
        c.rb = {1.0 + o * bm, mm, 1.0, mm, o * bm, 0.0, -mm * o * bm};
        c.rm = {a, mb, a, 0.0, 0.0, mb, mb * a};
      }
      c.cap = std::clamp(caps[i], 0.0, 1.0);
      ch_.push_back(c);
    }
  }

  Index size() const { return static_cast<Index>(ch_.size()); }
  const Channel& channel(Index i) const { return ch_[static_cast<std::size_t>(i)]; }

  double slope(Index i, double v, double w) const {
    const Channel& c = channel(i);
    return w * c.rb.d1(v) + c.rm.d1(v);
  }
  double curvature(Index i, double v, double w) const {
    const Channel& c = channel(i);
    return w * c.rb.d2(v) + c.rm.d2(v);
  }
  double value(Index i, double v, double w) const {
    const Channel& c = channel(i);
    return w * c.rb.value(v) + c.rm.value(v);
  }

  double rb(const ArrayXd& v) const {
    double s = 0.0;
    for (Index i = 0; i < size(); ++i) s += channel(i).rb.value(v[i]);
    return s;
  }
  double objective(const ArrayXd& v) const {
    double s = 0.0;
    for (Index i = 0; i < size(); ++i) s += channel(i).rb.value(v[i]) + channel(i).rm.value(v[i]);
    return s;
  }

  // Under the caps the block objective is concave for w = 1. Extra weight on
  // r_b keeps it so in the BS block (r_b concave there); less weight keeps it
  // so in the MS block (r_b convex there).
  bool concave_for(double w) const { return bs_free_ ? w >= 1.0 : w <= 1.0; }

  // Per-channel maximizer of w r_b + r_m - nu v on [0, cap]; v is a warm start.
  double respond(Index i, double nu, double w, double v) const {
    const double cap = channel(i).cap;
    if (cap <= 0.0) return 0.0;
    if (!concave_for(w)) return respond_global(i, nu, w);
    if (slope(i, 0.0, w) <= nu) return 0.0;
    if (slope(i, cap, w) >= nu) return cap;
    double lo = 0.0, hi = cap;
    if (!(v > lo && v < hi)) v = 0.5 * cap;
    for (int it = 0; it < 200; ++it) {
      const double f = slope(i, v, w) - nu;
      if (f > 0.0) lo = v; else hi = v;
      const Channel& c = channel(i);
      const double scale = std::abs(w * c.rb.d1(v)) + std::abs(c.rm.d1(v)) + std::abs(nu);
      if (std::abs(f) <= 1e-14 * scale) break;
      const double dd = curvature(i, v, w);
      if (!(dd < 0.0)) return respond_global(i, nu, w);
      double next = v - f / dd;
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      v = next;
      if (hi - lo <= 4 * kEps * hi) break;
    }
    return v;
  }

  // Global maximum over [0, cap] from the stationary points: clearing the
  // denominators of slope = nu leaves a polynomial of degree at most four.
  double respond_global(Index i, double nu, double w) const {
    const Channel& c = channel(i);
    const Term& b = c.rb;
    const Term& m = c.rm;
    const Poly pb = linear(b.a1, b.b1).times(b.a2, b.b2);
    const Poly pm = linear(m.a1, m.b1).times(m.a2, m.b2);
    Poly eq = scaled(pm, w * b.c) + scaled(pb, m.c);
    Poly both = pb.times(m.a1, m.b1).times(m.a2, m.b2);
    eq = eq + scaled(both, -nu * kLn);
    std::vector<double> cand{0.0, c.cap};
    real_roots(eq, 0.0, c.cap, cand);
    double best = 0.0, best_val = -std::numeric_limits<double>::infinity();
    for (double v : cand) {
      const double val = value(i, v, w) - nu * v;
      if (val > best_val) {
        best_val = val;
        best = v;
      }
    }
    return best;
  }

  void respond_all(double nu, double w, ArrayXd& v) const {
    for (Index i = 0; i < size(); ++i) v[i] = respond(i, nu, w, v[i]);
  }

  // d sum(v) / d nu at the current response, from the active channels
  double budget_sensitivity(const ArrayXd& v, double w) const {
    double d = 0.0;
    for (Index i = 0; i < size(); ++i) {
      if (!(v[i] > 0.0 && v[i] < channel(i).cap)) continue;
      const double dd = curvature(i, v[i], w);
      if (dd < 0.0) d += 1.0 / dd;
    }
    return d;
  }

  // A level at which every channel is off for the concave case; a starting
  // guess otherwise.
  double level_ceiling(double w) const {
    double hi = 0.0;
    for (Index i = 0; i < size(); ++i) {
      if (channel(i).cap <= 0.0) continue;
      hi = std::max({hi, slope(i, 0.0, w), slope(i, channel(i).cap, w)});
    }
    return hi;
  }

  double kkt_residual(const ArrayXd& v, double nu, double w) const {
    double worst = 0.0;
    for (Index i = 0; i < size(); ++i) {
      const double cap = channel(i).cap;
      if (cap <= 0.0) continue;
      double r;
      if (v[i] <= 0.0) r = std::max(0.0, slope(i, 0.0, w) - nu);
      else if (v[i] >= cap) r = std::max(0.0, nu - slope(i, cap, w));
      else r = std::abs(slope(i, v[i], w) - nu);
      worst = std::max(worst, r);
    }
    return worst;
  }

  Index k_star() const {
    Index best = -1;
    double val = -std::numeric_limits<double>::infinity();
    for (Index i = 0; i < size(); ++i) {
      if (channel(i).cap <= 0.0) continue;
      const double s = slope(i, 0.0, 1.0);
      if (s > val) {
        val = s;
        best = i;
      }
    }
    return best;
  }

 private:
  bool bs_free_;
  std::vector<Channel> ch_;
};

struct Response {
  ArrayXd v;
  double nu = 0.0;
};

// Smallest budget level nu >= 0 whose response fits sum(v) <= 1. The sum
// can jump where a channel's global maximizer switches; the returned point
// is always on the feasible side.
Response budget_response(const Block& blk, double w, double tol_simplex, ArrayXd warm,
                         int& evals) {
  Response out;
  out.v = std::move(warm);
  blk.respond_all(0.0, w, out.v);
  ++evals;
  if (out.v.sum() <= 1.0 + tol_simplex) return out;

  double lo = 0.0;
  double hi = std::max(blk.level_ceiling(w), 1e-12);
  ArrayXd v_hi = out.v;
  blk.respond_all(hi, w, v_hi);
  ++evals;
  while (v_hi.sum() > 1.0 + tol_simplex) {
    lo = hi;
    hi *= 2.0;
    blk.respond_all(hi, w, v_hi);
    ++evals;
  }
  ArrayXd v = out.v;
  double nu = hi;
  for (int it = 0; it < 300; ++it) {
    const double s = v_hi.sum();
    if (s >= 1.0 - tol_simplex) break;
    if (hi - lo <= 4 * kEps * hi) break;
    // Newton from the feasible end, bisection when it leaves the bracket
    const double d = blk.budget_sensitivity(v_hi, w);
    double next = d < 0.0 ? hi - (s - 1.0) / d : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    nu = next;
    v = v_hi;
    blk.respond_all(nu, w, v);
    ++evals;
    if (v.sum() > 1.0 + tol_simplex) {
      lo = nu;
      // plain halving next time from this side to avoid creeping
      const double mid = 0.5 * (lo + hi);
      ArrayXd vm = v;
      blk.respond_all(mid, w, vm);
      ++evals;
      if (vm.sum() > 1.0 + tol_simplex) lo = mid;
      else {
        hi = mid;
        v_hi = std::move(vm);
      }
    } else {
      hi = nu;
      v_hi = v;
    }
  }
  out.v = std::move(v_hi);
  out.nu = hi;
  const double s = out.v.sum();
  if (s > 1.0) out.v /= s;
  return out;
}

struct BlockSolve {
  ArrayXd v;
  double nu = 0.0;
  double mu = 0.0;
  double w = 1.0;
  bool feasible = true;
  int evals = 0;
};

// Lagrangian in the rate constraint: w = 1 - mu for r_b <= rb*, w = 1 + mu
// for r_b >= rb*. r_b of the response is monotone in mu; the best feasible
// response seen along the search is returned.
BlockSolve solve_lagrangian(const Block& blk, RateConstraint c, double rb_star, double tol_simplex,
                            double rate_tol) {
  BlockSolve out;
  const double sign = c == RateConstraint::AtLeast ? 1.0 : -1.0;
  ArrayXd warm = ArrayXd::Zero(blk.size());
  double best_obj = -std::numeric_limits<double>::infinity();
  bool have = false;

  auto run = [&](double mu) {
    const double w = 1.0 + sign * mu;
    Response r = budget_response(blk, w, tol_simplex, warm, out.evals);
    warm = r.v;
    const double h = c == RateConstraint::None ? 0.0 : sign * (blk.rb(r.v) - rb_star);
    if (h >= -rate_tol) {
      const double obj = blk.objective(r.v);
      if (obj > best_obj) {
        best_obj = obj;
        have = true;
        out.v = r.v;
        out.nu = r.nu;
        out.mu = mu;
        out.w = w;
      }
    }
    return h;
  };

  double h_lo = run(0.0);
  if (h_lo >= 0.0 || c == RateConstraint::None) return out;
  double mu_lo = 0.0, mu_hi = 1.0;
  double h_hi = run(mu_hi);
  while (h_hi < 0.0 && mu_hi < 1e12) {
    mu_lo = mu_hi;
    h_lo = h_hi;
    mu_hi *= 4.0;
    h_hi = run(mu_hi);
  }
  if (h_hi < 0.0) {
    out.feasible = have;
    if (!have) {
      out.v = warm;
      out.mu = mu_hi;
      out.w = 1.0 + sign * mu_hi;
    }
    return out;
  }
  int side = 0;
  for (int it = 0; it < 200; ++it) {
    if (h_hi <= rate_tol) break;
    if (mu_hi - mu_lo <= 4 * kEps * mu_hi) break;
    double mu = (mu_lo * h_hi - mu_hi * h_lo) / (h_hi - h_lo);
    if (!(mu > mu_lo && mu < mu_hi)) mu = 0.5 * (mu_lo + mu_hi);
    const double h = run(mu);
    if (h >= 0.0) {
      mu_hi = mu;
      h_hi = h;
      if (side == 1) h_lo *= 0.5;
      side = 1;
    } else {
      mu_lo = mu;
      h_lo = h;
      if (side == -1) h_hi *= 0.5;
      side = -1;
    }
  }
  out.feasible = have;
  return out;
}

SubproblemResult solve_block(const Gains& g, const ArrayXd& fixed, bool bs_free, double rb_star,
                             RateConstraint c, const RestrictionBounds& bounds,
                             const Tolerances& tol) {
  tol.validate();
  g.validate();
  if (bounds.channels() != g.channels())
    throw std::invalid_argument("subproblem: bounds have the wrong length");
  const Block blk(g, fixed, bs_free, bs_free ? bounds.A_b : bounds.A_m);
  SubproblemResult out;
  out.k_star = blk.k_star();
  const double rate_tol = 1e-3 * tol.eps_rate;
  // the MS block cannot push r_b above its value with the MS silent
  if (!bs_free && c == RateConstraint::AtLeast &&
      blk.rb(ArrayXd::Zero(blk.size())) < rb_star - rate_tol) {
    out.alpha = ArrayXd::Zero(blk.size());
    out.feasible = false;
    return out;
  }
  BlockSolve s = solve_lagrangian(blk, c, rb_star, tol.tol_simplex, rate_tol);
  out.alpha = std::move(s.v);
  out.level = s.nu;
  out.multiplier = s.mu;
  out.feasible = s.feasible;
  out.iterations = s.evals;
  out.kkt_residual = blk.kkt_residual(out.alpha, out.level, s.w);
  return out;
}

double sum_rate(const Gains& g, const Allocation& a) { return rate_dl(g, a) + rate_ul(g, a); }

bool satisfies(RateConstraint c, double rb, double rb_star, double slack) {
  switch (c) {
    case RateConstraint::None: return true;
    case RateConstraint::AtMost: return rb <= rb_star + slack;
    case RateConstraint::AtLeast: return rb >= rb_star - slack;
  }
  return true;
}

Allocation clip_to(const Allocation& a, const RestrictionBounds& b) {
  Allocation out{a.alpha_b.min(b.A_b).max(0.0), a.alpha_m.min(b.A_m).max(0.0)};
  return out;
}

// Alternating ascent on w r_b + r_m under the budgets alone.
Allocation weighted_ascent(const Gains& g, double w, const RestrictionBounds& bounds, Allocation a,
                           const Tolerances& tol, const AltMaxOptions& opt) {
  int evals = 0;
  for (int n = 0; n < opt.max_iters; ++n) {
    const Block bs(g, a.alpha_m, true, bounds.A_b);
    ArrayXd nb = budget_response(bs, w, tol.tol_simplex, a.alpha_b, evals).v;
    const Block ms(g, nb, false, bounds.A_m);
    ArrayXd nm = budget_response(ms, w, tol.tol_simplex, a.alpha_m, evals).v;
    const double change = ((nb - a.alpha_b).abs() + (nm - a.alpha_m).abs()).maxCoeff();
    a = {std::move(nb), std::move(nm)};
    if (change < opt.alloc_change_eps) break;
  }
  return a;
}

// Block updates with the rate condition stall where the two blocks would
// need different multipliers. Searching one shared weight w over the joint
// ascent moves off such points.
std::optional<Allocation> shared_multiplier_refine(const Gains& g, double rb_star,
                                                   RateConstraint c,
                                                   const RestrictionBounds& bounds,
                                                   const Allocation& base, const Tolerances& tol,
                                                   const AltMaxOptions& opt) {
  if (c == RateConstraint::None) return std::nullopt;
  const double sign = c == RateConstraint::AtLeast ? 1.0 : -1.0;
  const double rate_tol = 1e-3 * tol.eps_rate;
  double best_obj = sum_rate(g, base);
  std::optional<Allocation> best;
  auto run = [&](double mu) {
    Allocation a = weighted_ascent(g, 1.0 + sign * mu, bounds, base, tol, opt);
    const double h = sign * (rate_dl(g, a) - rb_star);
    if (h >= -rate_tol && sum_rate(g, a) > best_obj) {
      best_obj = sum_rate(g, a);
      best = a;
    }
    return h;
  };
  double mu_lo = 0.0;
  double h_lo = run(0.0);
  if (h_lo >= 0.0) return best;
  double mu_hi = 1.0;
  double h_hi = run(mu_hi);
  while (h_hi < 0.0 && mu_hi < 1e8) {
    mu_lo = mu_hi;
    h_lo = h_hi;
    mu_hi *= 4.0;
    h_hi = run(mu_hi);
  }
  if (h_hi < 0.0) return best;
  int side = 0;
  for (int it = 0; it < 100; ++it) {
    if (h_hi <= rate_tol || mu_hi - mu_lo <= 4 * kEps * mu_hi) break;
    double mu = (mu_lo * h_hi - mu_hi * h_lo) / (h_hi - h_lo);
    if (!(mu > mu_lo && mu < mu_hi)) mu = 0.5 * (mu_lo + mu_hi);
    const double h = run(mu);
    if (h >= 0.0) {
      mu_hi = mu;
      h_hi = h;
      if (side == 1) h_lo *= 0.5;
      side = 1;
    } else {
      mu_lo = mu;
      h_lo = h;
      if (side == -1) h_hi *= 0.5;
      side = -1;
    }
  }
  return best;
}

}  // namespace

// ---------------------------------------------------------------------------

RestrictionBounds RestrictionBounds::unrestricted(Index k) {
  return {ArrayXd::Ones(k), ArrayXd::Ones(k), std::vector<ForcedHd>(static_cast<std::size_t>(k), ForcedHd::none)};
}

RestrictionBounds restriction_bounds(const Gains& g, Side side) {
  g.validate();
  const Index k = g.channels();
  RestrictionBounds out = RestrictionBounds::unrestricted(k);
  for (Index i = 0; i < k; ++i) {
    const double bm = g.gamma_bm[i], mb = g.gamma_mb[i], mm = g.gamma_mm[i], bb = g.gamma_bb[i];
    // A_b from (C2), A_m from (C1); zero XINRs leave the matching cap open
    double ab, am;
    if (mm == 0.0) ab = 1.0;
    else if (bb == 0.0) ab = mb >= mm ? 1.0 : -1.0;
    else ab = (mb / mm - 1.0) / bb;
    if (bb == 0.0) am = 1.0;
    else if (mm == 0.0) am = bm >= bb ? 1.0 : -1.0;
    else am = (bm / bb - 1.0) / mm;

    ForcedHd forced = ForcedHd::none;
    auto bs_off = [&] { ab = 0.0; am = 1.0; forced = ForcedHd::ms_only; };
    auto ms_off = [&] { am = 0.0; ab = 1.0; forced = ForcedHd::bs_only; };
    if (side == Side::below_sb) {
      if (ab <= 0.0) bs_off();
      if (am <= 0.0) ms_off();
    } else {
      if (am <= 0.0) ms_off();
      if (ab <= 0.0) bs_off();
    }
    out.A_b[i] = std::min(ab, 1.0);
    out.A_m[i] = std::min(am, 1.0);
    out.forced_hd[static_cast<std::size_t>(i)] = forced;
  }
  return out;
}

bool c1c2_restrictive(const Gains& g) {
  g.validate();
  const auto ok = (g.gamma_bm >= g.gamma_bb * (1.0 + g.gamma_mm)) &&
                  (g.gamma_mb >= g.gamma_mm * (1.0 + g.gamma_bb));
  return !ok.all();
}

SubproblemResult solve_sub_b(const Gains& g, const ArrayXd& alpha_m, double rb_star,
                             RateConstraint constraint, const RestrictionBounds& bounds,
                             const Tolerances& tol) {
  return solve_block(g, alpha_m, true, rb_star, constraint, bounds, tol);
}

SubproblemResult solve_sub_m(const Gains& g, const ArrayXd& alpha_b, double rb_star,
                             RateConstraint constraint, const RestrictionBounds& bounds,
                             const Tolerances& tol) {
  return solve_block(g, alpha_b, false, rb_star, constraint, bounds, tol);
}

Trajectory altmax_trajectory(const Gains& g, double rb_star, RateConstraint constraint,
                             const RestrictionBounds& bounds, const Allocation& start,
                             const Tolerances& tol, const AltMaxOptions& opt) {
  check_dimensions(g, start);
  Trajectory t;
  Allocation a = clip_to(start, bounds);
  const double slack = tol.eps_rate;
  auto feasible_point = [&](const Allocation& x) {
    return x.alpha_b.sum() <= 1.0 + tol.tol_simplex && x.alpha_m.sum() <= 1.0 + tol.tol_simplex &&
           satisfies(constraint, rate_dl(g, x), rb_star, slack);
  };
  if (feasible_point(a)) t.objective_trace.push_back(sum_rate(g, a));

  auto warm_start = [&]() {
    const double r_bar = fixed_r_bar_b(g);
    const McFindResult u = mcfind_rm(g, std::clamp(rb_star, 0.0, r_bar), tol);
    return clip_to(u.alloc, bounds);
  };

  t.status = AltMaxStatus::IterationLimit;
  for (int n = 1; n <= opt.max_iters; ++n) {
    SubproblemResult sb = solve_sub_b(g, a.alpha_m, rb_star, constraint, bounds, tol);
    SubproblemResult sm;
    if (sb.feasible) sm = solve_sub_m(g, sb.alpha, rb_star, constraint, bounds, tol);
    if (!sb.feasible || !sm.feasible) {
      if (t.warm_started) {
        t.status = AltMaxStatus::RestrictedInfeasible;
        break;
      }
      t.warm_started = true;
      a = warm_start();
      t.objective_trace.clear();
      if (feasible_point(a)) t.objective_trace.push_back(sum_rate(g, a));
      continue;
    }
    t.worst_kkt_b = std::max(t.worst_kkt_b, sb.kkt_residual);
    // a block update that would lower the objective (rounding at the rate
    // boundary) is dropped
    Allocation next{sb.alpha, a.alpha_m};
    const bool was_feasible = feasible_point(a);
    if (was_feasible && sum_rate(g, next) < sum_rate(g, a)) {
      next.alpha_b = a.alpha_b;
      sm = solve_sub_m(g, a.alpha_b, rb_star, constraint, bounds, tol);
    }
    Allocation after{next.alpha_b, sm.alpha};
    if (was_feasible && sum_rate(g, after) < sum_rate(g, next)) after.alpha_m = next.alpha_m;
    const double change =
        ((after.alpha_b - a.alpha_b).abs() + (after.alpha_m - a.alpha_m).abs()).maxCoeff();
    a = std::move(after);
    t.objective_trace.push_back(sum_rate(g, a));
    t.iterations = n;
    if (change < opt.alloc_change_eps) {
      t.status = AltMaxStatus::Converged;
      break;
    }
  }
  t.allocation = a;
  t.rates = rates(g, a);
  return t;
}

std::vector<Allocation> altmax_starts(const Gains& g, double rb_star, RateConstraint constraint,
                                      const RestrictionBounds& bounds, const AltMaxOptions& opt) {
  const Index k = g.channels();
  std::vector<Allocation> starts;
  starts.push_back(Allocation::zeros(k));
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  auto draw = [&](const ArrayXd& cap) {
    ArrayXd e(k);
    for (Index i = 0; i < k; ++i) e[i] = -std::log1p(-unif(rng));
    const double total = unif(rng);
    const double s = e.sum();
    ArrayXd x = s > 0.0 ? ArrayXd(total * e / s) : ArrayXd::Zero(k);
    return ArrayXd(x.min(cap));
  };
  for (int r = 1; r < opt.restarts; ++r) {
    Allocation a{draw(bounds.A_b), draw(bounds.A_m)};
    // shrink one block until the rate condition holds
    if (constraint == RateConstraint::AtMost && rate_dl(g, a) > rb_star) {
      double lo = 0.0, hi = 1.0;
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        const Allocation t{mid * a.alpha_b, a.alpha_m};
        (rate_dl(g, t) <= rb_star ? lo : hi) = mid;
      }
      a.alpha_b *= lo;
    } else if (constraint == RateConstraint::AtLeast && rate_dl(g, a) < rb_star) {
      const Allocation silent{a.alpha_b, ArrayXd::Zero(k)};
      if (rate_dl(g, silent) >= rb_star) {
        double lo = 0.0, hi = 1.0;
        for (int it = 0; it < 60; ++it) {
          const double mid = 0.5 * (lo + hi);
          const Allocation t{a.alpha_b, mid * a.alpha_m};
          (rate_dl(g, t) >= rb_star ? lo : hi) = mid;
        }
        a.alpha_m *= lo;
      }
    }
    starts.push_back(std::move(a));
  }
  return starts;
}

AltMaxResult altmax(const Gains& g, double rb_star, RateConstraint constraint,
                    const RestrictionBounds& bounds, const Tolerances& tol,
                    const AltMaxOptions& opt) {
  g.validate();
  tol.validate();
  if (opt.restarts < 1) throw std::invalid_argument("altmax: restarts must be >= 1");
  AltMaxResult out;
  out.constraint = constraint;
  const auto starts = altmax_starts(g, rb_star, constraint, bounds, opt);
  int best = -1;
  double best_obj = -std::numeric_limits<double>::infinity();
  for (const auto& s : starts) {
    Trajectory t = altmax_trajectory(g, rb_star, constraint, bounds, s, tol, opt);
    const double obj = t.rates.r_b + t.rates.r_m;
    if (t.status != AltMaxStatus::RestrictedInfeasible && obj > best_obj) {
      best_obj = obj;
      best = static_cast<int>(out.trajectories.size());
    }
    out.trajectories.push_back(std::move(t));
  }
  if (best < 0) {
    // every start failed; report the uniform fixed-shape point
    const double r_bar = fixed_r_bar_b(g);
    const McFindResult u = mcfind_rm(g, std::clamp(rb_star, 0.0, r_bar), tol);
    out.allocation = u.alloc;
    out.rates = rates(g, u.alloc);
    out.status = AltMaxStatus::RestrictedInfeasible;
    return out;
  }
  const Trajectory& t = out.trajectories[static_cast<std::size_t>(best)];
  out.allocation = t.allocation;
  out.rates = t.rates;
  out.iterations = t.iterations;
  out.objective_trace = t.objective_trace;
  out.status = t.status;
  out.converged = t.status == AltMaxStatus::Converged;
  if (opt.shared_multiplier) {
    if (auto r = shared_multiplier_refine(g, rb_star, constraint, bounds, out.allocation, tol, opt)) {
      out.allocation = *r;
      out.rates = rates(g, *r);
      out.objective_trace.push_back(out.rates.r_b + out.rates.r_m);
      out.refined = true;
    }
  }
  return out;
}

SumRateResult sum_rate_max(const Gains& g, const Tolerances& tol, const AltMaxOptions& opt) {
  SumRateResult out;
  const RestrictionBounds below = restriction_bounds(g, Side::below_sb);
  const RestrictionBounds above = restriction_bounds(g, Side::above_sb);
  out.detail = altmax(g, 0.0, RateConstraint::None, below, tol, opt);
  out.bounds_side = Side::below_sb;
  const bool same = (below.A_b == above.A_b).all() && (below.A_m == above.A_m).all();
  if (!same) {
    AltMaxResult alt = altmax(g, 0.0, RateConstraint::None, above, tol, opt);
    if (alt.rates.r_b + alt.rates.r_m > out.detail.rates.r_b + out.detail.rates.r_m) {
      out.detail = std::move(alt);
      out.bounds_side = Side::above_sb;
    }
  }
  out.allocation = out.detail.allocation;
  out.corner = {out.detail.rates.r_b, out.detail.rates.r_m};
  return out;
}

AltMaxResult altmax(const Gains& g, double rb_star, const SumRateResult& corner,
                    const Tolerances& tol, const AltMaxOptions& opt) {
  const double r_bar = max_rates(g, tol).r_bar_b;
  if (!(rb_star >= 0.0) || rb_star > r_bar * (1.0 + 1e-12) + 1e-15) {
    std::ostringstream os;
    os << "altmax: rb_star = " << rb_star << " outside [0, " << r_bar << "]";
    throw std::out_of_range(os.str());
  }
  const Side side = rb_star <= corner.corner.s_b ? Side::below_sb : Side::above_sb;
  const RateConstraint c = side == Side::below_sb ? RateConstraint::AtMost : RateConstraint::AtLeast;
  AltMaxResult out = altmax(g, std::min(rb_star, r_bar), c, restriction_bounds(g, side), tol, opt);
  out.side = side;
  return out;
}

AltMaxResult altmax(const Gains& g, double rb_star, const Tolerances& tol,
                    const AltMaxOptions& opt) {
  return altmax(g, rb_star, sum_rate_max(g, tol, opt), tol, opt);
}

// ---------------------------------------------------------------------------

namespace {

ArrayXd normalized(const ArrayXd& x) {
  const double s = x.sum();
  return s > 0.0 ? ArrayXd(x / s) : ArrayXd(x);
}

struct Candidate {
  double r_m = -std::numeric_limits<double>::infinity();
  McFindResult fit;
};

Candidate evaluate_shape(const Gains& g, const Allocation& shape, double rb_star,
                         const Tolerances& tol) {
  Candidate c;
  if (shape.alpha_b.sum() <= 0.0 && rb_star > 0.0) return c;
  const Gains folded = scale_gains(g, shape);
  const double top = fixed_r_bar_b(folded);
  if (rb_star > top * (1.0 + 1e-12) + 1e-15) return c;
  c.fit = mcfind_rm_shaped(g, shape, std::min(rb_star, top), tol);
  c.r_m = c.fit.r_m;
  return c;
}

}  // namespace

HeuristicResult pa_heuristic(const Gains& g, double rb_star, const SumRateResult& corner,
                             const Tolerances& tol) {
  g.validate();
  tol.validate();
  const Index k = g.channels();
  const auto hd = max_rates(g, tol);
  if (!(rb_star >= 0.0) || rb_star > hd.r_bar_b * (1.0 + 1e-12) + 1e-15) {
    std::ostringstream os;
    os << "pa_heuristic: rb_star = " << rb_star << " outside [0, " << hd.r_bar_b << "]";
    throw std::out_of_range(os.str());
  }
  rb_star = std::min(rb_star, hd.r_bar_b);
  const ArrayXd bl = normalized(hd.alloc_b.alpha_b);
  const ArrayXd ml = normalized(hd.alloc_m.alpha_m);
  ArrayXd bh = normalized(corner.allocation.alpha_b);
  ArrayXd mh = normalized(corner.allocation.alpha_m);
  if (bh.sum() <= 0.0) bh = bl;
  if (mh.sum() <= 0.0) mh = ml;

  HeuristicResult out;
  out.mirrored_branch = rb_star > corner.corner.s_b;
  // seed 1 starts from the half-duplex shapes, seed 2 from the sum-rate shape
  Allocation seed[2] = {{bl, ml}, {bh, mh}};
  std::vector<Index> off[2];
  Candidate c1 = evaluate_shape(g, seed[0], rb_star, tol);
  Candidate c2 = evaluate_shape(g, seed[1], rb_star, tol);
  out.seed_rm[0] = c1.r_m;
  out.seed_rm[1] = c2.r_m;
  int winner = c2.r_m > c1.r_m ? 1 : 0;
  Candidate best = winner == 1 ? c2 : c1;
  Allocation best_shape = seed[winner];
  std::vector<Index> best_off;

  bool active[2] = {true, true};
  for (Index j = 1; j <= k / 2 && (active[0] || active[1]); ++j) {
    for (int s = 0; s < 2; ++s) {
      if (!active[s]) continue;
      const Index ch = s == 0 ? j - 1 : k - j;
      Allocation trial = seed[s];
      ArrayXd& row = out.mirrored_branch ? trial.alpha_m : trial.alpha_b;
      row[ch] = 0.0;
      row = normalized(row);
      bool pre;
      if (!out.mirrored_branch) {
        pre = row.sum() > 0.0 && rate_dl(g, Allocation{row, ml}) >= rb_star;
      } else {
        pre = rate_dl(g, Allocation{bl, row}) <= rb_star;
      }
      Candidate c;
      if (pre) c = evaluate_shape(g, trial, rb_star, tol);
      if (pre && c.r_m > best.r_m) {
        best = c;
        seed[s] = trial;
        off[s].push_back(ch);
        best_shape = trial;
        best_off = off[s];
      } else {
        active[s] = false;
      }
    }
  }
  if (!std::isfinite(best.r_m)) {
    // neither seed can reach rb_star at its full-power shape; fall back to
    // the BS half-duplex shape, which always can
    best = evaluate_shape(g, {bl, ml}, rb_star, tol);
    best_shape = {bl, ml};
  }
  out.r_m = best.r_m;
  out.shape = best_shape;
  out.allocation = best.fit.alloc;
  out.rates = rates(g, out.allocation);
  out.channels_off = best_off;
  std::sort(out.channels_off.begin(), out.channels_off.end());
  return out;
}

HeuristicResult pa_heuristic(const Gains& g, double rb_star, const Tolerances& tol,
                             const AltMaxOptions& opt) {
  return pa_heuristic(g, rb_star, sum_rate_max(g, tol, opt), tol);
}

GeneralRegion tdfd_region_general(const Gains& g, const std::vector<double>& rb_grid,
                                  GeneralMethod method, const SumRateResult& corner,
                                  const Tolerances& tol, const AltMaxOptions& opt, int jobs) {
  for (std::size_t i = 1; i < rb_grid.size(); ++i)
    if (rb_grid[i] < rb_grid[i - 1])
      throw std::invalid_argument("tdfd_region_general: rb_grid must be sorted");
  GeneralRegion out;
  out.corner = corner;
  const auto hd = max_rates(g, tol);
  std::vector<BoundaryPoint> pts(rb_grid.size());
  std::vector<AltMaxStatus> status(rb_grid.size(), AltMaxStatus::Converged);
  detail::parallel_for(rb_grid.size(), jobs, [&](std::size_t i) {
    const double rb = rb_grid[i];
    if (method == GeneralMethod::altmax) {
      const AltMaxResult r = altmax(g, rb, corner, tol, opt);
      status[i] = r.status;
      pts[i] = {r.rates.r_b, r.rates.r_m, OperatingMode::PureFD, r.allocation};
    } else {
      const HeuristicResult r = pa_heuristic(g, rb, corner, tol);
      pts[i] = {r.rates.r_b, r.rates.r_m, OperatingMode::PureFD, r.allocation};
    }
  });
  for (AltMaxStatus s : status) {
    if (s == AltMaxStatus::RestrictedInfeasible) ++out.infeasible_runs;
    if (s == AltMaxStatus::IterationLimit) ++out.nonconverged_runs;
  }
  out.raw.push_back({0.0, hd.r_bar_m, OperatingMode::PureFD, hd.alloc_m});
  out.raw.insert(out.raw.end(), pts.begin(), pts.end());
  out.raw.push_back({corner.corner.s_b, corner.corner.s_m, OperatingMode::PureFD, corner.allocation});
  out.raw.push_back({hd.r_bar_b, 0.0, OperatingMode::PureFD, hd.alloc_b});
  out.hull = upper_hull(out.raw);
  return out;
}

GeneralRegion tdfd_region_general(const Gains& g, const std::vector<double>& rb_grid,
                                  GeneralMethod method, const Tolerances& tol,
                                  const AltMaxOptions& opt) {
  return tdfd_region_general(g, rb_grid, method, sum_rate_max(g, tol, opt), tol, opt);
}

}  // namespace fdcap
