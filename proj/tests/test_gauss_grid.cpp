#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "hmx/gauss_grid.hpp"
#include "hmx/rng.hpp"

using namespace hmx;

namespace {

// Independent enumeration: a side-2^-l cube with integer index is in layer l
// iff it lies inside [-2^l, 2^l)^d but not inside [-2^(l-1), 2^(l-1))^d.
std::vector<GCube> enumerate_layer(int dim, int l) {
  const double outer = std::ldexp(1.0, l);
  const double inner = l == 0 ? 0.0 : std::ldexp(1.0, l - 1);
  const double side = std::ldexp(1.0, -l);
  const std::int64_t n = std::int64_t{1} << (2 * l);
  std::vector<GCube> out;
  std::vector<std::int64_t> idx(static_cast<std::size_t>(dim), -n);
  for (;;) {
    bool in_outer = true, in_inner = l > 0;
    for (auto i : idx) {
      const double lo = static_cast<double>(i) * side, hi = lo + side;
      in_outer = in_outer && lo >= -outer && hi <= outer;
      in_inner = in_inner && lo >= -inner && hi <= inner;
    }
    if (in_outer && !in_inner) out.push_back({l, 0, idx});
    std::size_t a = 0;
    while (a < idx.size() && ++idx[a] == n) idx[a++] = -n;
    if (a == idx.size()) break;
  }
  return out;
}

double dist(const Box& a, const Box& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    const double gap = std::max({0.0, a.lo[i] - b.hi(i), b.lo[i] - a.hi(i)});
    s += gap * gap;
  }
  return std::sqrt(s);
}

}  // namespace

TEST(GaussGrid, CubeCountsMatchEnumeration) {
  for (int dim : {1, 2})
    for (int L = 1; L <= (dim == 1 ? 4 : 2); ++L) {
      std::size_t expect = 0;
      for (int l = 0; l <= L; ++l) expect += enumerate_layer(dim, l).size();
      const GaussGrid g({dim, L});
      EXPECT_EQ(g.cube_count(), expect) << "d=" << dim << " L=" << L;
      EXPECT_EQ(g.all_cubes().size(), expect);
    }
  EXPECT_EQ(GaussGrid({1, 2}).cube_count(), 22u);
  EXPECT_EQ(GaussGrid({1, 3}).cube_count(), 86u);
  EXPECT_EQ(GaussGrid({2, 1}).cube_count(), 52u);
  EXPECT_THROW(GaussGrid({1, 0}), DomainError);
}

TEST(GaussGrid, CubesTileTheTruncationBox) {
  const GaussGrid g({2, 2});
  EXPECT_DOUBLE_EQ(g.grid_region().volume(), g.truncation_box().volume());
}

TEST(GaussGrid, CubeContainingExamples) {
  const double x[] = {-1.7};
  const GCube c = GaussGrid::cube_containing(x);
  EXPECT_EQ(c.layer, 1);
  EXPECT_DOUBLE_EQ(c.box().lo[0], -2.0);
  EXPECT_DOUBLE_EQ(c.box().side, 0.5);
  const double y[] = {0.25};
  EXPECT_EQ(GaussGrid::cube_containing(y).layer, 0);
  const double z[] = {-1.0};
  EXPECT_EQ(GaussGrid::cube_containing(z).layer, 0);
  const double w[] = {1.0};
  EXPECT_EQ(GaussGrid::cube_containing(w).layer, 1);
}

TEST(GaussGrid, CubeAtOutsideTruncationThrows) {
  const GaussGrid g({1, 2});
  const double x[] = {4.0};
  EXPECT_THROW(g.cube_at(x), OutOfDomain);
}

TEST(GaussGrid, RandomPointsLandInTheirCube) {
  Rng rng(7);
  for (int i = 0; i < 2000; ++i) {
    Point x{rng.uniform(-50, 50), rng.uniform(-50, 50)};
    const GCube c = GaussGrid::cube_containing(x);
    EXPECT_TRUE(c.box().contains(x));
    EXPECT_EQ(c.layer, layer_index(x));
    EXPECT_TRUE(GaussGrid::belongs_to_layer(c.layer, c.index));
  }
}

TEST(GaussGrid, NearRegionExamples) {
  const GaussGrid g({1, 3});
  const NearRegion n0 = g.near_region_clipped(GCube{0, 0, {0}});
  EXPECT_DOUBLE_EQ(n0.cube.lo[0], -1.5);
  EXPECT_DOUBLE_EQ(n0.cube.side, 4.0);
  EXPECT_EQ(n0.region.size(), 7u);
  EXPECT_FALSE(n0.truncated);

  const NearRegion n1 = g.near_region_clipped(GCube{1, 0, {3}});  // [1.5, 2)
  EXPECT_DOUBLE_EQ(n1.cube.lo[0], 1.0);
  EXPECT_DOUBLE_EQ(n1.cube.side, 2.0);

  EXPECT_EQ(g.far_collection(GCube{0, 0, {0}}).size(), g.cube_count() - 7);
}

TEST(GaussGrid, NearRegionProperties) {
  for (int dim : {1, 2}) {
    const int L = dim == 1 ? 5 : 2;
    const GaussGrid g({dim, L});
    const auto all = g.all_cubes();
    for (const auto& r : all) {
      const NearRegion nr = g.near_region_clipped(r);
      const Box rb = r.box();
      EXPECT_DOUBLE_EQ(nr.cube.side, 4.0 * rb.side);
      EXPECT_TRUE(GaussGrid::decomposable(nr.cube));
      EXPECT_TRUE(nr.cube.contains(rb));
      EXPECT_TRUE(nr.region.contains(r));
      // every cube within distance l(R) is inside N(R)
      for (const auto& c : all)
        if (dist(rb, c.box()) < rb.side) {
          EXPECT_TRUE(nr.region.contains(c));
        }
      if (!nr.truncated) {
        double vol = 0;
        for (const auto& c : nr.region) vol += c.box().volume();
        EXPECT_NEAR(vol, nr.cube.volume(), 1e-12);
      }
    }
  }
}

TEST(GaussGrid, NearRegionTruncationThrows) {
  const GaussGrid g({1, 1});
  const GCube edge{1, 0, {3}};  // [1.5, 2)
  EXPECT_TRUE(g.near_region_clipped(edge).truncated);
  EXPECT_THROW(g.near_region(edge), Truncated);
}

TEST(GaussGrid, OriginBiasedRuleChoosesInnerCandidate) {
  const GaussGrid centred({1, 4, NeighbourhoodRule::cube_centred});
  const GaussGrid inward({1, 4, NeighbourhoodRule::origin_biased});
  for (const auto& r : centred.all_cubes()) {
    const Box a = centred.near_cube(r), b = inward.near_cube(r);
    EXPECT_LE(std::abs(b.center()[0]), std::abs(a.center()[0]) + 1e-15);
  }
}

TEST(GaussGrid, RingCollectionMatchesDistanceEnumeration) {
  const GaussGrid g({1, 4});
  const GCube r{0, 0, {0}};
  const RingCollection rc = g.ring_collection(r, 2);
  std::vector<GCube> expect;
  for (const auto& c : g.all_cubes()) {
    const Box b = c.box();
    if (b.hi(0) > -4.0 && b.lo[0] < 5.0) expect.push_back(c);
  }
  EXPECT_EQ(rc.region, Region(expect));
  for (int k = 1; k <= 3; ++k) {
    const RingCollection ring = g.ring_collection(GCube{1, 0, {2}}, k);
    const double l = 0.5;
    EXPECT_LE(ring.enclosing.side, (std::ldexp(1.0, k + 1) + 1) * l + 2 * std::ldexp(1.0, k) * l);
  }
}

TEST(GaussGrid, CubeDecompose) {
  const GaussGrid g({1, 3});
  const Region r = g.cube_decompose(Box{{-1.0}, 2.0});
  EXPECT_EQ(r, Region({GCube{0, 0, {-1}}, GCube{0, 0, {0}}}));
  EXPECT_EQ(g.cube_decompose(Box{{0.0}, 1.0}).size(), 1u);
  EXPECT_TRUE(g.cube_decompose(Box{{0.0}, 0.5}).empty());
  EXPECT_FALSE(GaussGrid::decomposable(Box{{-0.5}, 2.0}));
}

TEST(GaussGrid, QCubeExponents) {
  const GaussGrid g({1, 3});
  // t <= 16 d^2: 2^m >= 2^16 d^4 2^j
  EXPECT_EQ(g.q_cube(GCube{0, 0, {0}}, 1.0).exponent, 16);
  EXPECT_EQ(g.q_cube(GCube{2, 0, {8}}, 1.0).exponent, 18);
  // t > 16: 2^m >= 2^8 t^2 2^j ; t = 100 gives 2.56e6 -> 2^22
  EXPECT_EQ(g.q_cube(GCube{0, 0, {0}}, 100.0).exponent, 22);
  EXPECT_EQ(q_cube_exponent(2, 0, 1.0), 20);
  EXPECT_TRUE(g.q_cube(GCube{0, 0, {0}}, 1.0).truncated);
  EXPECT_EQ(g.q_cube(GCube{0, 0, {0}}, 1.0).region.size(), g.cube_count());
  for (double r : {1.0, 3.0, 1024.0, 1025.0, 0.75})
    EXPECT_GE(std::ldexp(1.0, dyadic_exponent_at_least(r)), r);
}

TEST(GaussGrid, RegionSerializationRoundTrip) {
  const GaussGrid g({2, 1});
  const Region r = g.grid_region();
  std::stringstream ss;
  ss << "# comment\n";
  write_region(ss, r);
  EXPECT_EQ(read_region(ss, 2), r);
  EXPECT_THROW(parse_cube("1 0", 1), UsageError);
  EXPECT_THROW(parse_cube("1 0 2 3", 1), UsageError);
  std::stringstream bad("region 3\n0 0 0\n");
  EXPECT_THROW(read_region(bad, 1), UsageError);
}
