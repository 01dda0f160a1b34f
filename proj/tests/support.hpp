#pragma once

#include "fdcap/linkmodel.hpp"

#include <cmath>
#include <random>
#include <vector>

namespace fdcap::test {

class Random {
 public:
  explicit Random(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  double db(double lo, double hi) { return db_to_linear(uniform(lo, hi)); }

  Gains single(double lo = -10.0, double hi = 50.0) {
    return Gains::single(db(lo, hi), db(lo, hi), db(lo, hi), db(lo, hi));
  }

  Gains channels(Index k, double lo = -10.0, double hi = 50.0) {
    Gains g = Gains::uniform(k, 0, 0, 0, 0);
    for (Index i = 0; i < k; ++i) {
      g.gamma_bm[i] = db(lo, hi);
      g.gamma_mb[i] = db(lo, hi);
      g.gamma_mm[i] = db(lo, hi);
      g.gamma_bb[i] = db(lo, hi);
    }
    return g;
  }

  // Random point of the simplex pair, total power drawn in [0, 1].
  Allocation allocation(Index k) {
    Allocation a = Allocation::zeros(k);
    for (auto* row : {&a.alpha_b, &a.alpha_m}) {
      for (Index i = 0; i < k; ++i) (*row)[i] = -std::log(1.0 - uniform(0.0, 1.0));
      *row *= uniform(0.0, 1.0) / row->sum();
    }
    return a;
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

inline std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = a + (b - a) * i / (n - 1);
  return v;
}

inline double log2_1p(double x) { return std::log2(1.0 + x); }

}  // namespace fdcap::test
