#pragma once

// Physical link description and Shannon-rate evaluation for a full-duplex
// BS <-> MS link over K orthogonal channels.
//
// All powers are normalized: a station's per-channel transmit fractions sum
// to at most one. Gains are linear (not dB) and are the SNR / XINR observed
// when the whole power budget sits on that channel.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace fdcap {

template <typename Scalar>
using ChannelArray = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

using ArrayXd = ChannelArray<double>;
using Eigen::Index;

template <typename Scalar>
inline Scalar db_to_linear(Scalar db) {
  using std::pow;
  return pow(Scalar(10), db / Scalar(10));
}

template <typename Scalar>
inline Scalar linear_to_db(Scalar linear) {
  using std::log10;
  return Scalar(10) * log10(linear);
}

template <typename Scalar>
inline constexpr Scalar kLn2 = std::numbers::ln2_v<Scalar>;

/// Per-channel maximum SNRs and residual self-interference-to-noise ratios.
template <typename Scalar>
struct LinkGains {
  ChannelArray<Scalar> gamma_bm;   // BS -> MS
  ChannelArray<Scalar> gamma_mb;   // MS -> BS
  ChannelArray<Scalar> gamma_mm;  // SI at the MS receiver, MS at full power
  ChannelArray<Scalar> gamma_bb;  // SI at the BS receiver, BS at full power

  Index channels() const { return gamma_bm.size(); }

  static LinkGains single(Scalar gamma_bm, Scalar gamma_mb, Scalar gamma_mm,
                          Scalar gamma_bb) {
    return uniform(1, gamma_bm, gamma_mb, gamma_mm, gamma_bb);
  }

  static LinkGains uniform(Index k, Scalar gamma_bm, Scalar gamma_mb,
                           Scalar gamma_mm, Scalar gamma_bb) {
    LinkGains g;
    g.gamma_bm = ChannelArray<Scalar>::Constant(k, gamma_bm);
    g.gamma_mb = ChannelArray<Scalar>::Constant(k, gamma_mb);
    g.gamma_mm = ChannelArray<Scalar>::Constant(k, gamma_mm);
    g.gamma_bb = ChannelArray<Scalar>::Constant(k, gamma_bb);
    return g;
  }

  static LinkGains from_db(const ChannelArray<Scalar>& gamma_bm_db,
                           const ChannelArray<Scalar>& gamma_mb_db,
                           const ChannelArray<Scalar>& gamma_mm_db,
                           const ChannelArray<Scalar>& gamma_bb_db) {
    auto conv = [](const ChannelArray<Scalar>& db) {
      return db.unaryExpr([](Scalar v) { return db_to_linear(v); }).eval();
    };
    LinkGains g{conv(gamma_bm_db), conv(gamma_mb_db), conv(gamma_mm_db),
                conv(gamma_bb_db)};
    g.validate();
    return g;
  }

  /// The same link seen with the roles of BS and MS exchanged. Rates of the
  /// mirrored link at the swapped allocation are the original rates swapped.
  LinkGains mirrored() const { return {gamma_mb, gamma_bm, gamma_bb, gamma_mm}; }

  void validate() const {
    const Index k = channels();
    if (k < 1) throw std::invalid_argument("LinkGains: need at least one channel");
    if (gamma_mb.size() != k || gamma_mm.size() != k || gamma_bb.size() != k)
      throw std::invalid_argument("LinkGains: gain families differ in length");
    auto check = [](const ChannelArray<Scalar>& a, const char* name) {
      if (!a.isFinite().all() || (a < Scalar(0)).any())
        throw std::invalid_argument(std::string("LinkGains: ") + name +
                                    " must be finite and nonnegative");
    };
    check(gamma_bm, "gamma_bm");
    check(gamma_mb, "gamma_mb");
    check(gamma_mm, "gamma_mm");
    check(gamma_bb, "gamma_bb");
  }
};

/// Normalized per-channel transmit fractions of the two stations.
template <typename Scalar>
struct PowerAllocation {
  ChannelArray<Scalar> alpha_b;  // BS, downlink transmitter
  ChannelArray<Scalar> alpha_m;  // MS, uplink transmitter

  Index channels() const { return alpha_b.size(); }

  static PowerAllocation zeros(Index k) {
    return {ChannelArray<Scalar>::Zero(k), ChannelArray<Scalar>::Zero(k)};
  }
  static PowerAllocation constant(Index k, Scalar bs_level, Scalar ms_level) {
    return {ChannelArray<Scalar>::Constant(k, bs_level),
            ChannelArray<Scalar>::Constant(k, ms_level)};
  }
  /// Full power at both stations, spread evenly.
  static PowerAllocation uniform(Index k) {
    return constant(k, Scalar(1) / Scalar(k), Scalar(1) / Scalar(k));
  }

  PowerAllocation mirrored() const { return {alpha_m, alpha_b}; }
};

struct RatePair {
  double r_b = 0.0;  // b/s/Hz, downlink
  double r_m = 0.0;  // b/s/Hz, uplink
};

struct Tolerances {
  double eps_rate = 1e-6;
  double eps_alpha = 1e-9;
  double tol_simplex = 1e-12;
  int max_iters = 10'000;

  void validate() const {
    if (!(eps_rate > 0) || !(eps_alpha > 0) || !(tol_simplex >= 0) || max_iters < 1)
      throw std::invalid_argument("Tolerances: eps must be positive, max_iters >= 1");
  }
};

using Gains = LinkGains<double>;
using Allocation = PowerAllocation<double>;

template <typename Scalar>
void check_dimensions(const LinkGains<Scalar>& g, const PowerAllocation<Scalar>& a) {
  if (a.alpha_b.size() != g.channels() || a.alpha_m.size() != g.channels()) {
    std::ostringstream os;
    os << "allocation has " << a.alpha_b.size() << "/" << a.alpha_m.size()
       << " channels, gains have " << g.channels();
    throw std::invalid_argument(os.str());
  }
}

template <typename Scalar>
void validate_allocation(const LinkGains<Scalar>& g, const PowerAllocation<Scalar>& a,
                         Scalar tol_simplex = Scalar(1e-12)) {
  check_dimensions(g, a);
  auto check = [&](const ChannelArray<Scalar>& x, const char* name) {
    if (!x.isFinite().all() || (x < Scalar(0)).any() || (x > Scalar(1)).any())
      throw std::invalid_argument(std::string(name) + " entries must lie in [0, 1]");
    if (x.sum() > Scalar(1) + tol_simplex)
      throw std::invalid_argument(std::string(name) + " exceeds the power budget");
  };
  check(a.alpha_b, "alpha_b");
  check(a.alpha_m, "alpha_m");
}

/// Per-channel downlink rates (b/s/Hz).
template <typename Scalar>
ChannelArray<Scalar> channel_rates_b(const LinkGains<Scalar>& g,
                                      const PowerAllocation<Scalar>& a) {
  check_dimensions(g, a);
  return (a.alpha_b * g.gamma_bm / (Scalar(1) + a.alpha_m * g.gamma_mm)).log1p() / kLn2<Scalar>;
}

template <typename Scalar>
ChannelArray<Scalar> channel_rates_m(const LinkGains<Scalar>& g,
                                      const PowerAllocation<Scalar>& a) {
  check_dimensions(g, a);
  return (a.alpha_m * g.gamma_mb / (Scalar(1) + a.alpha_b * g.gamma_bb)).log1p() / kLn2<Scalar>;
}

template <typename Scalar>
Scalar rate_dl(const LinkGains<Scalar>& g, const PowerAllocation<Scalar>& a) {
  return channel_rates_b(g, a).sum();
}

template <typename Scalar>
Scalar rate_ul(const LinkGains<Scalar>& g, const PowerAllocation<Scalar>& a) {
  return channel_rates_m(g, a).sum();
}

inline RatePair rates(const Gains& g, const Allocation& a) {
  return {rate_dl(g, a), rate_ul(g, a)};
}

/// Maximizes sum_k log2(1 + x_k * gain_k) over the unit simplex. Channels with
/// zero gain get zero power. The active set is read off the sorted noise
/// levels 1/gain_k, so the water level is exact.
template <typename Scalar>
ChannelArray<Scalar> water_fill(const ChannelArray<Scalar>& gain) {
  const Index k = gain.size();
  ChannelArray<Scalar> x = ChannelArray<Scalar>::Zero(k);
  std::vector<Index> order;
  for (Index i = 0; i < k; ++i)
    if (gain[i] > Scalar(0)) order.push_back(i);
  if (order.empty()) return x;
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return gain[a] > gain[b]; });
  Scalar floor_sum = 0;
  Scalar level = 0;
  std::size_t n = 0;
  for (std::size_t j = 0; j < order.size(); ++j) {
    const Scalar inv = Scalar(1) / gain[order[j]];
    const Scalar candidate = (Scalar(1) + floor_sum + inv) / static_cast<Scalar>(j + 1);
    if (j > 0 && !(candidate > inv)) break;
    floor_sum += inv;
    level = candidate;
    n = j + 1;
  }
  for (std::size_t j = 0; j < n; ++j) {
    const Index i = order[j];
    x[i] = std::max(Scalar(0), level - Scalar(1) / gain[i]);
  }
  return x / x.sum();
}

template <typename Scalar>
struct HdMaxima {
  Scalar r_bar_b = 0;
  Scalar r_bar_m = 0;
  PowerAllocation<Scalar> alloc_b;  // BS water-filled, MS silent
  PowerAllocation<Scalar> alloc_m;  // MS water-filled, BS silent
};

/// Half-duplex maxima: each direction at its water-filling optimum with the
/// other station silent.
template <typename Scalar>
HdMaxima<Scalar> max_rates(const LinkGains<Scalar>& g, const Tolerances& tol = {}) {
  g.validate();
  tol.validate();
  const Index k = g.channels();
  HdMaxima<Scalar> out;
  out.alloc_b = {water_fill<Scalar>(g.gamma_bm), ChannelArray<Scalar>::Zero(k)};
  out.alloc_m = {ChannelArray<Scalar>::Zero(k),
                  water_fill<Scalar>(g.gamma_mb)};
  out.r_bar_b = rate_dl(g, out.alloc_b);
  out.r_bar_m = rate_ul(g, out.alloc_m);
  return out;
}

/// p = r_b / r_bar_b + r_m / r_bar_m; p = 1 on the TDD time-sharing line.
inline double rate_improvement(const RatePair& p, double r_bar_b, double r_bar_m) {
  if (!(r_bar_b > 0) || !(r_bar_m > 0))
    throw std::domain_error("rate_improvement: half-duplex maxima must be positive");
  return p.r_b / r_bar_b + p.r_m / r_bar_m;
}

/// Folds an allocation into the gains: the uniform allocation 1/K on the
/// result reproduces the rates of `a` on `g`.
template <typename Scalar>
LinkGains<Scalar> scale_gains(const LinkGains<Scalar>& g, const PowerAllocation<Scalar>& a) {
  check_dimensions(g, a);
  const Scalar k = static_cast<Scalar>(g.channels());
  LinkGains<Scalar> s;
  s.gamma_bm = k * a.alpha_b * g.gamma_bm;
  s.gamma_mb = k * a.alpha_m * g.gamma_mb;
  s.gamma_mm = k * a.alpha_m * g.gamma_mm;
  s.gamma_bb = k * a.alpha_b * g.gamma_bb;
  return s;
}

}  // namespace fdcap
