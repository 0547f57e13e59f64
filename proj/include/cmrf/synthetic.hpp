#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "cmrf/imagery.hpp"
#include "cmrf/plane.hpp"

namespace cmrf {

struct SyntheticConfig {
  int width = 320;
  int height = 240;
  int n_planes = 4;          // 2..8
  double noise_sigma = 0.0;  // pixels
  int samples_min = 3;       // per region-pair boundary
  int samples_max = 5;
  double interior_rate = 0.05;  // Bernoulli rate over all pixels
  std::uint64_t seed = 0;
};

/// Piecewise-planar scene. Region planes are absolute (center at the image
/// origin): d(u, v) = alpha u + beta v + gamma.
struct SyntheticScene {
  SyntheticConfig config;
  std::vector<Plane> planes;                    // one per region
  std::vector<std::array<std::uint8_t, 3>> colors;  // flat RGB per region
  std::vector<int> region_map;                  // row-major
  Image left;
  GroundTruth gt;
  DisparityImage observations;

  int region(int u, int v) const { return region_map[static_cast<std::size_t>(v) * config.width + u]; }
  double gt_disparity(int u, int v) const { return plane_disparity(planes[region(u, v)], u, v, 0.0, 0.0); }
};

/// Recursive half-plane splits (vertical, horizontal or diagonal). Each split
/// gives the new child either a hinge (same disparity along the cut line) or an
/// occlusion offset of 6 to 15 px. Scenes are resampled until every non-hinge
/// region boundary has |d_front - d_back| >= 3 with a consistent sign and all
/// disparities lie in [4, 96]. Negative noisy samples are dropped.
/// Throws std::invalid_argument for infeasible configurations and
/// std::runtime_error if no valid scene is found.
SyntheticScene generate_synthetic(const SyntheticConfig& config);

/// Directory layout: left.png, gt.pfm, mask.png, obs.pfm, regions.png and a
/// key = value manifest scene.txt holding the config and the region planes.
void write_scene(const SyntheticScene& scene, const std::filesystem::path& dir);
SyntheticScene read_scene(const std::filesystem::path& dir);

/// Mask of pixels visible in the reference view only: a pixel is occluded when
/// some pixel to its right lands at the same place or further left in the other view, or
/// when it falls outside that view.
std::vector<Visibility> occlusion_mask(const DisparityImage& disparity);

}  // namespace cmrf
