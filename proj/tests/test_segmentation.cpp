#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <queue>
#include <random>
#include <set>

#include "cmrf/segmentation.hpp"
#include "support.hpp"

namespace cmrf {
namespace {

bool four_connected(const Segmentation& s, int id) {
  const auto& px = s.segments[id].pixels;
  std::vector<char> seen(s.labels.size(), 0);
  std::queue<Pixel> q;
  q.push(px.front());
  seen[px.front().v * s.width + px.front().u] = 1;
  std::size_t n = 0;
  while (!q.empty()) {
    const Pixel p = q.front();
    q.pop();
    ++n;
    for (const auto& [du, dv] : {std::pair{1, 0}, std::pair{-1, 0}, std::pair{0, 1}, std::pair{0, -1}}) {
      const int u = p.u + du, v = p.v + dv;
      if (u < 0 || v < 0 || u >= s.width || v >= s.height) continue;
      const std::size_t idx = static_cast<std::size_t>(v) * s.width + u;
      if (seen[idx] || s.labels[idx] != id) continue;
      seen[idx] = 1;
      q.push({u, v});
    }
  }
  return n == px.size();
}

std::set<std::pair<int, int>> pair_set(const Segmentation& s) {
  std::set<std::pair<int, int>> out;
  for (const auto& p : s.adjacency) out.insert({p.i, p.j});
  return out;
}

TEST(Adjacency, FourWayTinyCase) {
  const Segmentation s = make_segmentation({0, 1, 2, 3}, 2, 2);
  EXPECT_EQ(pair_set(s), (std::set<std::pair<int, int>>{{0, 1}, {0, 2}, {1, 3}, {2, 3}}));
  ASSERT_EQ(s.junctions4.size(), 1u);
  EXPECT_TRUE(s.junctions3.empty());
  const Junction4& j = s.junctions4[0];
  EXPECT_EQ(j.cycle, (std::array<int, 4>{0, 1, 3, 2}));
  for (int m = 0; m < 4; ++m) {
    const auto& p = s.adjacency[j.pairs[m]];
    const int a = j.cycle[m], b = j.cycle[(m + 1) % 4];
    EXPECT_EQ(std::pair(p.i, p.j), std::pair(std::min(a, b), std::max(a, b)));
  }
  EXPECT_EQ(j.orientation[0], BoundaryOrientation::Vertical);
  EXPECT_EQ(j.orientation[1], BoundaryOrientation::Horizontal);
  EXPECT_EQ(j.orientation[2], BoundaryOrientation::Vertical);
  EXPECT_EQ(j.orientation[3], BoundaryOrientation::Horizontal);
}

TEST(Adjacency, ThreeWayTinyCase) {
  const Segmentation s = make_segmentation({0, 0, 1, 2}, 2, 2);
  EXPECT_EQ(pair_set(s), (std::set<std::pair<int, int>>{{0, 1}, {0, 2}, {1, 2}}));
  ASSERT_EQ(s.junctions3.size(), 1u);
  EXPECT_TRUE(s.junctions4.empty());
  const Junction3& j = s.junctions3[0];
  std::set<int> segs(j.segments.begin(), j.segments.end());
  EXPECT_EQ(segs, (std::set<int>{0, 1, 2}));
  for (int m = 0; m < 3; ++m) {
    const auto& p = s.adjacency[j.pairs[m]];
    const int a = j.segments[m], b = j.segments[(m + 1) % 3];
    EXPECT_EQ(std::pair(p.i, p.j), std::pair(std::min(a, b), std::max(a, b)));
  }
}

TEST(Adjacency, JunctionCycleIsCounterClockwise) {
  // [[0, 0], [1, 2]]: 0 on top, 1 bottom left, 2 bottom right; counter-clockwise
  // on screen (v down) visits top, bottom left, bottom right
  const Segmentation s = make_segmentation({0, 0, 1, 2}, 2, 2);
  const auto& seg = s.junctions3[0].segments;
  const int start = static_cast<int>(std::find(seg.begin(), seg.end(), 0) - seg.begin());
  EXPECT_EQ(seg[(start + 1) % 3], 1);
  EXPECT_EQ(seg[(start + 2) % 3], 2);
}

TEST(Adjacency, VerticalSplitBand) {
  std::vector<int> labels(100);
  for (int v = 0; v < 10; ++v)
    for (int u = 0; u < 10; ++u) labels[v * 10 + u] = u >= 5;
  const Segmentation s = make_segmentation(labels, 10, 10);
  ASSERT_EQ(s.adjacency.size(), 1u);
  const auto& band = s.adjacency[0].band;
  std::set<int> columns;
  for (const Pixel& p : band) columns.insert(p.u);
  EXPECT_EQ(columns, (std::set<int>{3, 4, 5, 6}));
  EXPECT_EQ(band.size(), 40u);
  EXPECT_EQ(s.adjacency[0].boundary_length, 10);
}

TEST(Adjacency, BandMatchesDefinition) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const int w = 14, h = 11;
    const auto labels = testing::random_label_map(rng, w, h, testing::uniform_int(rng, 2, 6), false);
    const Segmentation s = make_segmentation(labels, w, h);
    for (const NeighborPair& p : s.adjacency) {
      // every pixel of S_i or S_j within Chebyshev distance 2 of a shared pixel edge
      std::set<std::pair<int, int>> expected;
      for (int v = 0; v < h; ++v)
        for (int u = 0; u < w; ++u) {
          const int l = s.label(u, v);
          if (l != p.i && l != p.j) continue;
          bool near = false;
          for (int ev = 0; ev < h && !near; ++ev)
            for (int eu = 0; eu < w && !near; ++eu)
              for (const auto& [du, dv] : {std::pair{1, 0}, std::pair{0, 1}}) {
                if (eu + du >= w || ev + dv >= h) continue;
                const int a = s.label(eu, ev), b = s.label(eu + du, ev + dv);
                if (std::min(a, b) != p.i || std::max(a, b) != p.j) continue;
                // edge segment from the midpoint, Chebyshev distance to the segment
                const double mx = eu + 0.5 * du, my = ev + 0.5 * dv;
                const double ex = du ? 0.0 : 0.5, ey = dv ? 0.0 : 0.5;
                const double dx = std::max(0.0, std::abs(u - mx) - ex), dy = std::max(0.0, std::abs(v - my) - ey);
                if (std::max(dx, dy) <= 2.0) near = true;
              }
          if (near) expected.insert({u, v});
        }
      std::set<std::pair<int, int>> got;
      for (const Pixel& q : p.band) got.insert({q.u, q.v});
      EXPECT_EQ(got, expected);
      // symmetric
      const auto ij = boundary_band(s.labels, w, h, p.i, p.j);
      const auto ji = boundary_band(s.labels, w, h, p.j, p.i);
      EXPECT_EQ(ij, ji);
      EXPECT_EQ(ij, p.band);
    }
  }
}

TEST(Adjacency, InvariantsOnRandomMaps) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 30; ++trial) {
    const int w = 20, h = 15;
    const auto labels = testing::random_label_map(rng, w, h, testing::uniform_int(rng, 2, 9), trial % 5 == 0);
    const Segmentation s = make_segmentation(labels, w, h);
    std::size_t total = 0;
    for (const Segment& seg : s.segments) total += seg.pixels.size();
    EXPECT_EQ(total, static_cast<std::size_t>(w * h));
    // adjacency iff some 4-neighbor pixel pair
    std::set<std::pair<int, int>> touching;
    for (int v = 0; v < h; ++v)
      for (int u = 0; u < w; ++u) {
        if (u + 1 < w && s.label(u, v) != s.label(u + 1, v))
          touching.insert(std::minmax(s.label(u, v), s.label(u + 1, v)));
        if (v + 1 < h && s.label(u, v) != s.label(u, v + 1))
          touching.insert(std::minmax(s.label(u, v), s.label(u, v + 1)));
      }
    EXPECT_EQ(pair_set(s), touching);
    for (const auto& p : s.adjacency) EXPECT_LT(p.i, p.j);
    for (const Junction3& j : s.junctions3)
      for (int m = 0; m < 3; ++m) {
        const auto& p = s.adjacency[j.pairs[m]];
        EXPECT_EQ(std::pair(p.i, p.j), (std::pair<int, int>(std::minmax(j.segments[m], j.segments[(m + 1) % 3]))));
      }
    for (const Junction4& j : s.junctions4)
      for (int m = 0; m < 4; ++m) {
        const auto& p = s.adjacency[j.pairs[m]];
        EXPECT_EQ(std::pair(p.i, p.j), (std::pair<int, int>(std::minmax(j.cycle[m], j.cycle[(m + 1) % 4]))));
      }
    // one entry per distinct triple
    std::set<std::set<int>> triples;
    for (const Junction3& j : s.junctions3) triples.insert({j.segments.begin(), j.segments.end()});
    EXPECT_EQ(triples.size(), s.junctions3.size());
  }
}

TEST(Adjacency, CentersAreMeans) {
  const Segmentation s = make_segmentation({0, 0, 1, 0, 1, 1}, 3, 2);
  EXPECT_DOUBLE_EQ(s.segments[0].cx, 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(s.segments[0].cy, 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(s.segments[1].cx, 5.0 / 3.0);
  EXPECT_DOUBLE_EQ(s.segments[1].cy, 2.0 / 3.0);
}

TEST(Histogram, SingleColorIsOneBin) {
  Image img(4, 1, 3);
  for (int u = 0; u < 4; ++u) img.at(u, 0, 0) = 200;
  const Segmentation s = make_segmentation({0, 0, 0, 0}, 4, 1, &img);
  const auto& bins = s.segments[0].histogram.bins;
  EXPECT_EQ(bins[ColorHistogram::bin_of(200, 0, 0)], 1.0);
  EXPECT_EQ(std::count(bins.begin(), bins.end(), 0.0), kHistogramBins - 1);
}

TEST(Histogram, IdenticalColorsHaveZeroDistance) {
  Image img(4, 1, 3);
  for (int u = 0; u < 4; ++u) img.at(u, 0, 1) = 90;
  const Segmentation s = make_segmentation({0, 0, 1, 1}, 4, 1, &img);
  EXPECT_EQ(chi_squared(s.segments[0].histogram, s.segments[1].histogram), 0.0);
}

TEST(Histogram, HalfRedHalfBlue) {
  Image img(2, 1, 3);
  img.at(0, 0, 0) = 255;
  img.at(1, 0, 2) = 255;
  const Segmentation s = make_segmentation({0, 0}, 2, 1, &img);
  const auto& bins = s.segments[0].histogram.bins;
  EXPECT_EQ(bins[ColorHistogram::bin_of(255, 0, 0)], 0.5);
  EXPECT_EQ(bins[ColorHistogram::bin_of(0, 0, 255)], 0.5);
}

TEST(Histogram, DisjointHistogramsHaveDistanceOne) {
  ColorHistogram a, b;
  a.bins[0] = 0.25;
  a.bins[1] = 0.75;
  b.bins[5] = 1.0;
  double chi = 0.0;
  for (int k = 0; k < kHistogramBins; ++k) {
    const double s = a.bins[k] + b.bins[k];
    if (s > 0) chi += 0.5 * (a.bins[k] - b.bins[k]) * (a.bins[k] - b.bins[k]) / s;
  }
  EXPECT_DOUBLE_EQ(chi, 1.0);
  EXPECT_DOUBLE_EQ(chi_squared(a, b), 1.0);
}

TEST(Histogram, GrayReplicatesChannel) {
  const Image gray(2, 1, 1, {10, 250});
  const Segmentation s = make_segmentation({0, 0}, 2, 1, &gray);
  const auto& bins = s.segments[0].histogram.bins;
  EXPECT_EQ(bins[ColorHistogram::bin_of(10, 10, 10)], 0.5);
  EXPECT_EQ(bins[ColorHistogram::bin_of(250, 250, 250)], 0.5);
}

TEST(Slic, UniformImage) {
  const Image img(100, 100, 3);
  SlicConfig cfg;
  cfg.n_target = 25;
  const Segmentation s = slic(img, cfg);
  EXPECT_EQ(s.size(), 25u);
  for (const Segment& seg : s.segments) {
    EXPECT_TRUE(four_connected(s, seg.id));
    EXPECT_GE(seg.pixels.size(), 200u);
    EXPECT_LE(seg.pixels.size(), 600u);
  }
}

TEST(Slic, TwoHalvesFollowTheColorEdge) {
  Image img(64, 48, 3);
  for (int v = 0; v < 48; ++v)
    for (int u = 0; u < 64; ++u) img.at(u, v, 0) = u < 29 ? 20 : 230;
  SlicConfig cfg;
  cfg.n_target = 2;
  const Segmentation s = slic(img, cfg);
  ASSERT_GE(s.size(), 2u);
  // every label change along a row lies within 2 px of the color edge at u = 28.5
  for (int v = 0; v < 48; ++v)
    for (int u = 0; u + 1 < 64; ++u)
      if (s.label(u, v) != s.label(u + 1, v)) EXPECT_LE(std::abs(u + 0.5 - 28.5), 2.0) << "row " << v;
}

TEST(Slic, CapAndErrors) {
  const Image img(16, 16, 3);
  SlicConfig cfg;
  cfg.n_target = 256;
  const Segmentation s = slic(img, cfg);
  EXPECT_LE(s.size(), 16u);
  cfg.n_target = 257;
  EXPECT_THROW(slic(img, cfg), std::invalid_argument);
  cfg.n_target = 0;
  EXPECT_THROW(slic(img, cfg), std::invalid_argument);
}

TEST(Slic, DeterministicAndPartition) {
  std::mt19937_64 rng(2);
  const Image img = testing::random_image(rng, 60, 40);
  SlicConfig cfg;
  cfg.n_target = 30;
  const Segmentation a = slic(img, cfg), b = slic(img, cfg);
  EXPECT_EQ(a.labels, b.labels);
  for (const Segment& seg : a.segments) EXPECT_TRUE(four_connected(a, seg.id));
  for (const Segment& seg : a.segments) {
    double sum = 0.0;
    for (double x : seg.histogram.bins) sum += x;
    EXPECT_NEAR(sum, 1.0, 1e-9);
  }
}

}  // namespace
}  // namespace cmrf
