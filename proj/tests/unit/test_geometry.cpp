#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "mbms/config.hpp"
#include "mbms/geometry.hpp"
#include "mbms/rng.hpp"

using namespace mbms;

namespace {

RadioGeometry layout() { return build_layout(SimulationConfig{}); }

double brute_wrap_distance(Vec2 a, Vec2 b, const RadioGeometry& g) {
  double best = (b - a).norm();
  for (const Vec2& w : g.wrap_vectors) best = std::min(best, (b + w - a).norm());
  return best;
}

}  // namespace

TEST(Geometry, TwentyOneCellsOnSevenSites) {
  const RadioGeometry g = layout();
  EXPECT_EQ(g.num_cells(), 21);
  EXPECT_EQ(g.sites.size(), 7u);
  for (int c = 0; c < g.num_cells(); ++c) EXPECT_EQ(g.cells[c].site, c / 3);
}

TEST(Geometry, AdjacentSitesOneIsdApart) {
  const RadioGeometry g = layout();
  EXPECT_DOUBLE_EQ(g.isd, 1500.0);
  for (std::size_t s = 1; s < g.sites.size(); ++s) {
    EXPECT_NEAR((g.sites[s] - g.sites[0]).norm(), 1500.0, 1e-6);
  }
}

TEST(Geometry, WrapVectorsAreClusterTranslations) {
  const RadioGeometry g = layout();
  // A 7-site cluster repeats every sqrt(7) inter-site distances.
  for (const Vec2& w : g.wrap_vectors) EXPECT_NEAR(w.norm(), std::sqrt(7.0) * 1500.0, 1e-6);
  // Each site covers a hexagon of area sqrt(3)/2 * ISD^2.
  const double site_hex_area = std::sqrt(3.0) / 2.0 * 1500.0 * 1500.0;
  EXPECT_NEAR(g.region_area(), 7.0 * site_hex_area, 1e-3);
}

TEST(Geometry, WrapDistanceIdentities) {
  const RadioGeometry g = layout();
  Rng rng(7, Stream::Spawn);
  for (int i = 0; i < 1000; ++i) {
    const Vec2 p = spawn_ue(rng, g, 0.0).xy;
    EXPECT_DOUBLE_EQ(wrap_distance(p, p, g), 0.0);
    for (const Vec2& w : g.wrap_vectors) EXPECT_NEAR(wrap_distance(p, p + w, g), 0.0, 1e-6);
  }
}

TEST(Geometry, WrapDistanceMatchesBruteForceOverTranslations) {
  const RadioGeometry g = layout();
  Rng rng(11, Stream::Spawn);
  for (int i = 0; i < 10000; ++i) {
    const Vec2 a = spawn_ue(rng, g, 0.0).xy;
    const Vec2 b = spawn_ue(rng, g, 0.0).xy;
    EXPECT_NEAR(wrap_distance(a, b, g), brute_wrap_distance(a, b, g), 1e-6);
    EXPECT_NEAR(wrap_distance(a, b, g), wrap_distance(b, a, g), 1e-6);
  }
}

TEST(Geometry, AntennaPatternPoints) {
  const AntennaPattern p;
  EXPECT_DOUBLE_EQ(antenna_gain_db(p, 0.0), 14.0);
  EXPECT_DOUBLE_EQ(antenna_gain_db(p, 70.0), 2.0);
  EXPECT_DOUBLE_EQ(antenna_gain_db(p, -70.0), 2.0);
  EXPECT_DOUBLE_EQ(antenna_gain_db(p, 180.0), -6.0);
}

TEST(Geometry, AntennaGainTowardsBoresightIsMaximal) {
  const RadioGeometry g = layout();
  for (int c = 0; c < g.num_cells(); ++c) {
    const double a = g.cells[c].boresight_deg * std::acos(-1.0) / 180.0;
    const Vec2 site = g.sites[g.cells[c].site];
    const Vec2 ue = site + Vec2{std::cos(a), std::sin(a)} * 300.0;
    EXPECT_NEAR(antenna_gain_db(c, ue, g), 14.0, 1e-9);
  }
}

TEST(Geometry, MobilityStepLength) {
  const RadioGeometry g = layout();
  Rng rng(3, Stream::Mobility);
  UePosition ue;
  ue.xy = {100.0, 50.0};
  ue.heading = 0.3;
  ue.speed = 3.0 / 3.6;
  const UePosition moved = step_mobility(ue, 1.0, rng, g, 5.0);
  EXPECT_NEAR(wrap_distance(ue.xy, moved.xy, g), 0.8333, 1e-4);
  const UePosition still = step_mobility(ue, 0.0, rng, g, 5.0);
  EXPECT_DOUBLE_EQ(still.xy.x, ue.xy.x);
  EXPECT_DOUBLE_EQ(still.xy.y, ue.xy.y);
}

TEST(Geometry, MobilityStaysInsideTorus) {
  const RadioGeometry g = layout();
  Rng rng(5, Stream::Mobility);
  UePosition ue = spawn_ue(rng, g, 30.0);  // fast walker to cross many borders
  long outside = 0;
  for (int i = 0; i < 1'000'000; ++i) {
    ue = step_mobility(ue, 0.1, rng, g, 5.0);
    if (!inside_region(ue.xy, g)) ++outside;
  }
  EXPECT_EQ(outside, 0);
}

TEST(Geometry, SpawnUniformOverCells) {
  const RadioGeometry g = layout();
  Rng rng(17, Stream::Spawn);
  const int draws = 100000;
  std::vector<long> counts(g.num_cells(), 0);
  for (int i = 0; i < draws; ++i) {
    const UePosition p = spawn_ue(rng, g, 0.0);
    ASSERT_TRUE(inside_region(p.xy, g));
    ++counts[geometric_cell(p.xy, g)];
  }
  const double expected = static_cast<double>(draws) / g.num_cells();
  double chi2 = 0.0;
  for (long c : counts) chi2 += (c - expected) * (c - expected) / expected;
  EXPECT_LT(chi2, 45.31);  // chi-square, 20 dof, p = 0.001
}

TEST(Geometry, SpawnReproducible) {
  const RadioGeometry g = layout();
  Rng a(99, Stream::Spawn, 4), b(99, Stream::Spawn, 4);
  const UePosition pa = spawn_ue(a, g, 1.0), pb = spawn_ue(b, g, 1.0);
  EXPECT_EQ(pa.xy.x, pb.xy.x);
  EXPECT_EQ(pa.xy.y, pb.xy.y);
  EXPECT_EQ(pa.heading, pb.heading);
}
