#include "fdcap/mcfixed.hpp"

#include "fdcap/oracle.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

namespace fdcap {
namespace {

using test::linspace;
using test::log2_1p;

TEST(McCorner, IdenticalChannelsAddUp) {
  const CornerRates one = corner_rates(Gains::single(60.0, 25.0, 2.0, 3.0));
  const CornerRates two = mc_corner_rates(Gains::uniform(2, 120.0, 50.0, 4.0, 6.0));
  EXPECT_NEAR(two.s_b, 2.0 * one.s_b, 1e-12);
  EXPECT_NEAR(two.s_m, 2.0 * one.s_m, 1e-12);
}

TEST(McCorner, DirectSum) {
  Gains g = Gains::uniform(2, 0, 0, 0, 0);
  g.gamma_bm << 100.0, 10.0;
  g.gamma_mb << 30.0, 5.0;
  g.gamma_mm << 1.0, 2.0;
  g.gamma_bb << 3.0, 0.5;
  const CornerRates c = mc_corner_rates(g);
  EXPECT_NEAR(c.s_b, log2_1p(50.0 / 1.5) + log2_1p(5.0 / 2.0), 1e-12);
  EXPECT_NEAR(c.s_m, log2_1p(15.0 / 2.5) + log2_1p(2.5 / 1.25), 1e-12);
}

TEST(McFind, Endpoints) {
  Gains g = Gains::uniform(3, 0, 0, 0, 0);
  g.gamma_bm << 80, 20, 5;
  g.gamma_mb << 40, 60, 7;
  g.gamma_mm << 1, 3, 9;
  g.gamma_bb << 2, 2, 2;
  const McFindResult lo = mcfind_rm(g, 0.0);
  EXPECT_TRUE((lo.alloc.alpha_b == 0.0).all());
  EXPECT_NEAR(lo.r_m, log2_1p(40.0 / 3) + log2_1p(20.0) + log2_1p(7.0 / 3), 1e-12);
  const McFindResult hi = mcfind_rm(g, fixed_r_bar_b(g));
  EXPECT_NEAR(hi.r_m, 0.0, 1e-9);
  EXPECT_NEAR(hi.alloc.alpha_m.sum(), 0.0, 1e-9);
  EXPECT_THROW(mcfind_rm(g, fixed_r_bar_b(g) * 1.01), std::out_of_range);
}

TEST(McFind, AgreesWithUniformGrid) {
  const Gains g = Gains::uniform(2, 200.0, 200.0, 2.0, 2.0);
  const double rb = mc_corner_rates(g).s_b / 2.0;
  const GridResult o = grid_max_rm(g, rb, {1e-4, 6}, GridMode::uniform_scalar);
  EXPECT_NEAR(mcfind_rm(g, rb).r_m, o.value, 1e-3);
}

TEST(McFind, FullPowerOnOneSide) {
  test::Random rnd(41);
  for (int n = 0; n < 20; ++n) {
    const Index k = 2 + n % 3;
    const Gains g = rnd.channels(k, -10.0, 40.0);
    const double s_b = mc_corner_rates(g).s_b;
    for (double f : {0.2, 0.6, 0.9}) {
      const double rb = f * fixed_r_bar_b(g);
      const McFindResult m = mcfind_rm(g, rb);
      const double full = 1.0 / static_cast<double>(k);
      if (rb <= s_b) {
        EXPECT_NEAR(m.alloc.alpha_m[0], full, 1e-12);
      } else {
        EXPECT_NEAR(m.alloc.alpha_b[0], full, 1e-12);
      }
      EXPECT_NEAR(rate_dl(g, m.alloc), rb, 1e-6);
      EXPECT_NEAR(rate_ul(g, m.alloc), m.r_m, 1e-9);
    }
  }
}

TEST(McFind, StepBound) {
  test::Random rnd(42);
  Tolerances tol;
  for (int n = 0; n < 50; ++n) {
    const Index k = 1 + n % 6;
    const Gains g = rnd.channels(k);
    const int bound = static_cast<int>(std::ceil(std::log2(1.0 / (k * tol.eps_alpha))));
    for (double f : {0.1, 0.5, 0.9}) {
      const McFindResult m = mcfind_rm(g, f * fixed_r_bar_b(g), tol);
      EXPECT_LE(m.steps, bound);
    }
  }
}

TEST(McFind, SingleChannelMatchesSingleChannelSolver) {
  test::Random rnd(43);
  for (int n = 0; n < 30; ++n) {
    const Gains g = rnd.single();
    for (double rb : linspace(0.0, max_rates(g).r_bar_b, 13))
      EXPECT_NEAR(mcfind_rm(g, rb).r_m, fd_boundary_rm(g, rb).r_m, 1e-6);
  }
}

TEST(McFind, UniformShapeEqualsPlainSolver) {
  test::Random rnd(44);
  const Gains g = rnd.channels(4);
  Allocation shape = Allocation::uniform(4);
  for (double f : {0.1, 0.5, 0.8}) {
    const double rb = f * fixed_r_bar_b(g);
    EXPECT_NEAR(mcfind_rm_shaped(g, shape, rb).r_m, mcfind_rm(g, rb).r_m, 1e-12);
  }
}

TEST(McFind, ShapedAllocationIsAchievable) {
  test::Random rnd(45);
  for (int n = 0; n < 20; ++n) {
    const Gains g = rnd.channels(5);
    Allocation shape = rnd.allocation(5);
    shape.alpha_b /= shape.alpha_b.sum();
    shape.alpha_m /= shape.alpha_m.sum();
    const double top = fixed_r_bar_b(scale_gains(g, shape));
    const McFindResult m = mcfind_rm_shaped(g, shape, 0.5 * top);
    EXPECT_NEAR(rate_dl(g, m.alloc), 0.5 * top, 1e-6);
    EXPECT_NEAR(rate_ul(g, m.alloc), m.r_m, 1e-9);
    EXPECT_LE(m.alloc.alpha_b.sum(), 1.0 + 1e-12);
    EXPECT_LE(m.alloc.alpha_m.sum(), 1.0 + 1e-12);
  }
}

TEST(FixedRegion, SamplesAreAchievable) {
  test::Random rnd(46);
  for (int n = 0; n < 10; ++n) {
    const Gains g = rnd.channels(3);
    for (bool refine : {false, true}) {
      const RegionBoundary b = fd_region_fixed(g, 33, {}, {refine, 256});
      EXPECT_TRUE(b.r_b_strictly_increasing());
      EXPECT_EQ(b.points.front().r_b, 0.0);
      EXPECT_NEAR(b.points.back().r_b, fixed_r_bar_b(g), 1e-12);
      for (const auto& p : b.points) {
        ASSERT_TRUE(p.alloc.has_value());
        EXPECT_NEAR(rate_dl(g, *p.alloc), p.r_b, 1e-9);
        EXPECT_NEAR(rate_ul(g, *p.alloc), p.r_m, 1e-9);
      }
    }
  }
}

TEST(FixedRegion, ExplicitGrid) {
  const Gains g = Gains::uniform(2, 50.0, 50.0, 1.0, 1.0);
  const auto grid = linspace(0.0, fixed_r_bar_b(g), 5);
  const RegionBoundary b = fd_region_fixed(g, grid);
  ASSERT_EQ(b.points.size(), grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) EXPECT_EQ(b.points[i].r_b, grid[i]);
  EXPECT_EQ(b.source, RegionSource::fd);
}

TEST(DiscreteRegion, SingleLevel) {
  const Gains g = Gains::uniform(2, 50.0, 40.0, 3.0, 2.0);
  const DiscreteRegion d = tdfd_region_fixed(g, {{1.0}});
  EXPECT_LE(d.hull.points.size(), 3u);
  EXPECT_EQ(d.hull.points.front().r_b, 0.0);
  EXPECT_NEAR(d.hull.points.front().r_m, fixed_r_bar_m(g), 1e-12);
  EXPECT_NEAR(d.hull.points.back().r_b, fixed_r_bar_b(g), 1e-12);
  bool has_corner = false;
  const CornerRates c = mc_corner_rates(g);
  for (const auto& p : d.fd_points) has_corner |= p.r_b == c.s_b && p.r_m == c.s_m;
  EXPECT_TRUE(has_corner);
}

TEST(DiscreteRegion, ConvexAndDominating) {
  test::Random rnd(47);
  DiscretePowerGrid grid;
  for (int l = 1; l <= 10; ++l) grid.levels.push_back(l / 10.0);
  for (int n = 0; n < 20; ++n) {
    const Gains g = rnd.channels(4);
    const DiscreteRegion d = tdfd_region_fixed(g, grid);
    EXPECT_TRUE(d.hull.is_convex(1e-12));
    for (const auto& p : d.fd_points) EXPECT_GE(mix_for_target(d.hull, p.r_b).r_m, p.r_m - 1e-12);
  }
}

TEST(DiscreteRegion, GridValidation) {
  const Gains g = Gains::uniform(2, 5, 5, 1, 1);
  EXPECT_THROW(tdfd_region_fixed(g, {{}}), std::invalid_argument);
  EXPECT_THROW(tdfd_region_fixed(g, {{0.5, 0.5}}), std::invalid_argument);
  EXPECT_THROW(tdfd_region_fixed(g, {{0.5, 1.5}}), std::invalid_argument);
}

}  // namespace
}  // namespace fdcap
