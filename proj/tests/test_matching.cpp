#include <gtest/gtest.h>

#include <map>
#include <random>

#include "cmrf/matching.hpp"
#include "support.hpp"

namespace cmrf {
namespace {

Image textured(int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  // blurred noise keeps census codes stable under small shifts
  Image noise = testing::random_image(rng, w, h);
  Image out(w, h, 1);
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) {
      int sum = 0, n = 0;
      for (int dv = -1; dv <= 1; ++dv)
        for (int du = -1; du <= 1; ++du) {
          const int x = std::clamp(u + du, 0, w - 1), y = std::clamp(v + dv, 0, h - 1);
          sum += noise.at(x, y, 0);
          ++n;
        }
      out.at(u, v) = static_cast<std::uint8_t>(sum / n);
    }
  return out;
}

TEST(Match, IdenticalImagesGiveZero) {
  const Image img = textured(64, 40, 1);
  MatchConfig cfg;
  cfg.max_disparity = 16;
  const DisparityImage d = match(img, img, cfg);
  ASSERT_GT(d.valid_count(), d.size() / 2);
  for (std::size_t i = 0; i < d.size(); ++i)
    if (d.valid(i)) EXPECT_NEAR(d.at(i), 0.0f, 0.5f);
}

TEST(Match, ShiftByFive) {
  const int w = 80, h = 40;
  const Image left = textured(w, h, 2);
  Image right(w, h, 1);
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) right.at(u, v) = u + 5 < w ? left.at(u + 5, v) : 0;
  MatchConfig cfg;
  cfg.max_disparity = 16;
  const DisparityImage d = match(left, right, cfg);
  std::map<int, int> histogram;
  for (int v = 3; v < h - 3; ++v)
    for (int u = 8; u < w - 8; ++u)
      if (d.valid(u, v)) ++histogram[static_cast<int>(std::lround(d.at(u, v)))];
  ASSERT_FALSE(histogram.empty());
  const auto mode = std::max_element(histogram.begin(), histogram.end(),
                                     [](const auto& a, const auto& b) { return a.second < b.second; });
  EXPECT_EQ(mode->first, 5);
}

TEST(Match, TexturelessIsMostlyInvalid) {
  const Image flat(64, 48, 3);
  const DisparityImage d = match(flat, flat, MatchConfig{});
  EXPECT_LT(d.valid_count(), d.size() / 5);
}

TEST(Match, ValuesWithinRangeAndDeterministic) {
  const Image left = textured(70, 30, 3), right = textured(70, 30, 4);
  MatchConfig cfg;
  cfg.max_disparity = 12;
  cfg.n_paths = 4;
  const DisparityImage a = match(left, right, cfg), b = match(left, right, cfg);
  EXPECT_EQ(a, b);
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a.valid(i)) {
      EXPECT_GE(a.at(i), 0.0f);
      EXPECT_LE(a.at(i), 12.0f);
    }
}

TEST(Match, MirroredPairInvalidatesMirroredPixels) {
  // swapping the views and mirroring both images yields the same disparities, mirrored
  const int w = 60, h = 24;
  const Image left = textured(w, h, 5);
  Image right(w, h, 1);
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) right.at(u, v) = u + 3 < w ? left.at(u + 3, v) : left.at(w - 1 - u, v);
  auto mirror = [&](const Image& img) {
    Image out(w, h, 1);
    for (int v = 0; v < h; ++v)
      for (int u = 0; u < w; ++u) out.at(u, v) = img.at(w - 1 - u, v);
    return out;
  };
  MatchConfig cfg;
  cfg.max_disparity = 8;
  cfg.subpixel = false;
  const DisparityImage a = match(left, right, cfg);
  const DisparityImage b = match(mirror(right), mirror(left), cfg);
  int agree = 0, valid = 0;
  for (int v = 0; v < h; ++v)
    for (int u = 8; u < w - 8; ++u) {
      if (!a.valid(u, v)) continue;
      ++valid;
      const int um = w - 1 - (u - static_cast<int>(a.at(u, v)));
      if (b.valid(um, v) && b.at(um, v) == a.at(u, v)) ++agree;
    }
  ASSERT_GT(valid, 0);
  EXPECT_GT(agree, valid * 8 / 10);
}

TEST(Match, ConfigChecks) {
  MatchConfig cfg;
  cfg.n_paths = 3;
  EXPECT_THROW(check(cfg), std::invalid_argument);
  cfg = {};
  cfg.p2 = 1;
  EXPECT_THROW(check(cfg), std::invalid_argument);
  cfg = {};
  cfg.max_disparity = 0;
  EXPECT_THROW(check(cfg), std::invalid_argument);
  EXPECT_THROW(match(Image(4, 4, 1), Image(5, 4, 1), MatchConfig{}), std::invalid_argument);
}

TEST(Passthrough, Identity) {
  DisparityImage d(3, 2);
  d.set(1, 1, 4.25f);
  EXPECT_EQ(passthrough(d), d);
  const DisparityImage empty(3, 2);
  EXPECT_EQ(passthrough(empty).valid_count(), 0u);
}

}  // namespace
}  // namespace cmrf
