#pragma once

#include "cmrf/imagery.hpp"

namespace cmrf {

struct MatchConfig {
  int max_disparity = 64;
  int block_radius = 2;  // box window over census costs
  int n_paths = 8;       // 4 or 8
  int p1 = 10;
  int p2 = 120;
  double lr_threshold = 1.0;
  /// A winner survives only if every disparity more than one step away
  /// costs at least (1 + uniqueness) times as much.
  double uniqueness = 0.05;
  bool subpixel = true;
};

/// Validates ranges; throws std::invalid_argument.
void check(const MatchConfig& cfg);

/// Census 5x5 Hamming costs, box aggregation, scanline smoothing along
/// n_paths directions, winner-take-all with parabola refinement, then
/// uniqueness and left-right checks. Pixels with constant luma over the
/// census and block window are dropped. Color inputs are converted to luma.
DisparityImage match(const Image& left, const Image& right, const MatchConfig& cfg);

/// Identity: the valid set of `obs` becomes the observation set.
DisparityImage passthrough(const DisparityImage& obs);

}  // namespace cmrf
