#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "cmrf/imagery.hpp"

namespace cmrf {

inline constexpr int kHistogramBins = 64;  // 4 x 4 x 4 RGB cells

struct ColorHistogram {
  std::array<double, kHistogramBins> bins{};

  static int bin_of(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    return (r >> 6) * 16 + (g >> 6) * 4 + (b >> 6);
  }
};

/// Chi-squared distance with the 1/2 convention: 0.5 * sum (h-g)^2 / (h+g),
/// skipping bins where both are zero. Lies in [0, 1] for normalized inputs.
double chi_squared(const ColorHistogram& h, const ColorHistogram& g);

struct Segment {
  int id = 0;
  std::vector<Pixel> pixels;  // raster order
  double cx = 0.0;            // mean column
  double cy = 0.0;            // mean row
  ColorHistogram histogram;
};

/// Two 4-adjacent segments, i < j. The band holds every pixel of S_i or S_j
/// whose Chebyshev distance to the shared pixel edge is at most 2.
struct NeighborPair {
  int i = 0;
  int j = 0;
  std::vector<Pixel> band;  // raster order
  int boundary_length = 0;  // number of 4-adjacent (S_i, S_j) pixel pairs
};

enum class BoundaryOrientation : std::uint8_t { Horizontal, Vertical };

/// Three segments meeting in a 2x2 window. `segments` follows the
/// counter-clockwise traversal of the window; `pairs[m]` indexes the pair of
/// (segments[m], segments[(m+1)%3]).
struct Junction3 {
  std::array<int, 3> segments{};
  std::array<int, 3> pairs{};
};

/// Four segments in a 2x2 window [[a, b], [c, d]]. The cycle is a, b, d, c;
/// `pairs[m]` joins cycle[m] and cycle[(m+1)%4]. Boundaries between a|b and
/// d|c are vertical, b/d and c/a horizontal.
struct Junction4 {
  std::array<int, 4> cycle{};
  std::array<int, 4> pairs{};
  std::array<BoundaryOrientation, 4> orientation{};
};

struct AdjacencyGraph {
  std::vector<NeighborPair> pairs;  // sorted by (i, j)
  std::vector<Junction3> junctions3;
  std::vector<Junction4> junctions4;
};

struct Segmentation {
  int width = 0;
  int height = 0;
  std::vector<int> labels;  // row-major, dense ids 0..n-1
  std::vector<Segment> segments;
  std::vector<NeighborPair> adjacency;
  std::vector<Junction3> junctions3;
  std::vector<Junction4> junctions4;

  int label(int u, int v) const { return labels[static_cast<std::size_t>(v) * width + u]; }
  std::size_t size() const { return segments.size(); }
  /// Index into `adjacency` of pair (i, j) in either order, if adjacent.
  std::optional<int> pair_index(int i, int j) const;
};

struct SlicConfig {
  int n_target = 300;
  double compactness = 10.0;
  int iterations = 10;
};

/// SLIC superpixels in (L, a, b, u, v) space from a hexagonal seed lattice.
/// Fragments smaller than a quarter of the mean segment area are merged into
/// their largest neighbor. n_target is capped at pixels/16; requests above the
/// pixel count throw std::invalid_argument.
Segmentation slic(const Image& image, const SlicConfig& cfg);

/// Neighbor pairs, boundary bands and junction sites of a dense label map.
AdjacencyGraph build_adjacency(std::span<const int> labels, int width, int height);

/// Band of pair (i, j) computed directly from a label map; symmetric in i, j.
std::vector<Pixel> boundary_band(std::span<const int> labels, int width, int height, int i, int j);

/// Per-segment normalized 4x4x4 RGB histograms. Gray images replicate the channel.
std::vector<ColorHistogram> color_histograms(const Image& image, const Segmentation& segmentation);

/// Builds a full Segmentation (segments, centers, adjacency, histograms when an
/// image is supplied) from any dense label map. Labels are renumbered densely in
/// raster order of first appearance.
Segmentation make_segmentation(std::vector<int> labels, int width, int height,
                               const Image* image = nullptr);

/// Debug dump: label map as 16-bit PNG plus a line-oriented text file with
/// `pair i j length band_size`, `j3 s0 s1 s2` and `j4 a b d c` records.
void dump_segmentation(const Segmentation& segmentation, const std::filesystem::path& label_png,
                       const std::filesystem::path& graph_txt);

}  // namespace cmrf
