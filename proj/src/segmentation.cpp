#include "cmrf/segmentation.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <stdexcept>
#include <tuple>

namespace cmrf {

double chi_squared(const ColorHistogram& h, const ColorHistogram& g) {
  double sum = 0.0;
  for (int b = 0; b < kHistogramBins; ++b) {
    const double s = h.bins[b] + g.bins[b];
    if (s <= 0.0) continue;
    const double d = h.bins[b] - g.bins[b];
    sum += d * d / s;
  }
  return 0.5 * sum;
}

std::optional<int> Segmentation::pair_index(int i, int j) const {
  if (i > j) std::swap(i, j);
  auto it = std::lower_bound(adjacency.begin(), adjacency.end(), std::pair{i, j},
                             [](const NeighborPair& p, const std::pair<int, int>& key) {
                               return std::pair{p.i, p.j} < key;
                             });
  if (it == adjacency.end() || it->i != i || it->j != j) return std::nullopt;
  return static_cast<int>(it - adjacency.begin());
}

namespace {

// One 4-adjacency between differently labeled pixels; (u, v) is the left or
// top pixel, `horizontal` means the neighbor is (u+1, v).
struct InterfaceEdge {
  int i;
  int j;
  int u;
  int v;
  bool horizontal;
};

std::vector<InterfaceEdge> interface_edges(std::span<const int> labels, int width, int height) {
  std::vector<InterfaceEdge> edges;
  auto at = [&](int u, int v) { return labels[static_cast<std::size_t>(v) * width + u]; };
  for (int v = 0; v < height; ++v)
    for (int u = 0; u < width; ++u) {
      const int a = at(u, v);
      if (u + 1 < width) {
        const int b = at(u + 1, v);
        if (a != b) edges.push_back({std::min(a, b), std::max(a, b), u, v, true});
      }
      if (v + 1 < height) {
        const int b = at(u, v + 1);
        if (a != b) edges.push_back({std::min(a, b), std::max(a, b), u, v, false});
      }
    }
  std::stable_sort(edges.begin(), edges.end(), [](const InterfaceEdge& x, const InterfaceEdge& y) {
    return std::tie(x.i, x.j) < std::tie(y.i, y.j);
  });
  return edges;
}

// Pixels with Chebyshev distance <= 2 to an edge between (u,v) and its
// right neighbor lie in columns u-1..u+2 and rows v-2..v+2 (transposed for
// vertical neighbors).
template <typename Visit>
void stamp_band(const InterfaceEdge& e, int width, int height, Visit&& visit) {
  const int u0 = e.horizontal ? e.u - 1 : e.u - 2;
  const int u1 = e.horizontal ? e.u + 2 : e.u + 2;
  const int v0 = e.horizontal ? e.v - 2 : e.v - 1;
  const int v1 = e.horizontal ? e.v + 2 : e.v + 2;
  for (int v = std::max(v0, 0); v <= std::min(v1, height - 1); ++v)
    for (int u = std::max(u0, 0); u <= std::min(u1, width - 1); ++u) visit(u, v);
}

std::vector<Pixel> band_from_edges(std::span<const InterfaceEdge> edges, std::span<const int> labels,
                                   int width, int height, std::vector<int>& stamp, int stamp_id) {
  std::vector<int> indices;
  for (const InterfaceEdge& e : edges) {
    stamp_band(e, width, height, [&](int u, int v) {
      const std::size_t idx = static_cast<std::size_t>(v) * width + u;
      if (stamp[idx] == stamp_id) return;
      const int l = labels[idx];
      if (l != e.i && l != e.j) return;
      stamp[idx] = stamp_id;
      indices.push_back(static_cast<int>(idx));
    });
  }
  std::sort(indices.begin(), indices.end());
  std::vector<Pixel> band;
  band.reserve(indices.size());
  for (int idx : indices) band.push_back({idx % width, idx / width});
  return band;
}

}  // namespace

AdjacencyGraph build_adjacency(std::span<const int> labels, int width, int height) {
  if (labels.size() != static_cast<std::size_t>(width) * height)
    throw std::invalid_argument("build_adjacency: label map size mismatch");
  AdjacencyGraph graph;
  const std::vector<InterfaceEdge> edges = interface_edges(labels, width, height);
  std::vector<int> stamp(labels.size(), -1);
  for (std::size_t begin = 0; begin < edges.size();) {
    std::size_t end = begin;
    while (end < edges.size() && edges[end].i == edges[begin].i && edges[end].j == edges[begin].j) ++end;
    NeighborPair pair;
    pair.i = edges[begin].i;
    pair.j = edges[begin].j;
    pair.boundary_length = static_cast<int>(end - begin);
    pair.band = band_from_edges(std::span(edges).subspan(begin, end - begin), labels, width, height,
                                stamp, static_cast<int>(graph.pairs.size()));
    graph.pairs.push_back(std::move(pair));
    begin = end;
  }

  auto find_pair = [&](int a, int b) -> int {
    if (a > b) std::swap(a, b);
    auto it = std::lower_bound(graph.pairs.begin(), graph.pairs.end(), std::pair{a, b},
                               [](const NeighborPair& p, const std::pair<int, int>& key) {
                                 return std::pair{p.i, p.j} < key;
                               });
    if (it == graph.pairs.end() || it->i != a || it->j != b) return -1;
    return static_cast<int>(it - graph.pairs.begin());
  };

  std::map<std::array<int, 3>, bool> seen3;
  std::map<std::array<int, 4>, bool> seen4;
  auto at = [&](int u, int v) { return labels[static_cast<std::size_t>(v) * width + u]; };
  for (int v = 0; v + 1 < height; ++v)
    for (int u = 0; u + 1 < width; ++u) {
      const int tl = at(u, v), tr = at(u + 1, v), bl = at(u, v + 1), br = at(u + 1, v + 1);
      // counter-clockwise on screen (rows grow downward): TL, BL, BR, TR
      const std::array<int, 4> ccw = {tl, bl, br, tr};
      std::array<int, 4> distinct{};
      int n = 0;
      for (int l : ccw)
        if (std::find(distinct.begin(), distinct.begin() + n, l) == distinct.begin() + n) distinct[n++] = l;
      if (n == 3) {
        std::array<int, 3> key = {distinct[0], distinct[1], distinct[2]};
        std::sort(key.begin(), key.end());
        if (seen3.count(key)) continue;
        seen3[key] = true;
        Junction3 j;
        bool ok = true;
        for (int m = 0; m < 3; ++m) {
          j.segments[m] = distinct[m];
          j.pairs[m] = find_pair(distinct[m], distinct[(m + 1) % 3]);
          ok = ok && j.pairs[m] >= 0;
        }
        if (ok) graph.junctions3.push_back(j);
      } else if (n == 4) {
        const std::array<int, 4> key = {tl, tr, bl, br};
        if (seen4.count(key)) continue;
        seen4[key] = true;
        Junction4 j;
        j.cycle = {tl, tr, br, bl};
        j.orientation = {BoundaryOrientation::Vertical, BoundaryOrientation::Horizontal,
                         BoundaryOrientation::Vertical, BoundaryOrientation::Horizontal};
        for (int m = 0; m < 4; ++m) j.pairs[m] = find_pair(j.cycle[m], j.cycle[(m + 1) % 4]);
        graph.junctions4.push_back(j);
      }
    }
  return graph;
}

std::vector<Pixel> boundary_band(std::span<const int> labels, int width, int height, int i, int j) {
  if (i > j) std::swap(i, j);
  std::vector<InterfaceEdge> edges = interface_edges(labels, width, height);
  std::erase_if(edges, [&](const InterfaceEdge& e) { return e.i != i || e.j != j; });
  std::vector<int> stamp(labels.size(), -1);
  return band_from_edges(edges, labels, width, height, stamp, 0);
}

std::vector<ColorHistogram> color_histograms(const Image& image, const Segmentation& segmentation) {
  if (image.width() != segmentation.width || image.height() != segmentation.height)
    throw std::invalid_argument("color_histograms: image and segmentation sizes differ");
  std::vector<ColorHistogram> hists(segmentation.segments.size());
  for (const Segment& s : segmentation.segments) {
    ColorHistogram& h = hists[s.id];
    for (const Pixel& p : s.pixels) {
      const std::uint8_t r = image.at(p.u, p.v, 0);
      const std::uint8_t g = image.channels() == 3 ? image.at(p.u, p.v, 1) : r;
      const std::uint8_t b = image.channels() == 3 ? image.at(p.u, p.v, 2) : r;
      h.bins[ColorHistogram::bin_of(r, g, b)] += 1.0;
    }
    const double n = static_cast<double>(s.pixels.size());
    if (n > 0)
      for (double& x : h.bins) x /= n;
  }
  return hists;
}

Segmentation make_segmentation(std::vector<int> labels, int width, int height, const Image* image) {
  if (labels.size() != static_cast<std::size_t>(width) * height || width < 1 || height < 1)
    throw std::invalid_argument("make_segmentation: label map size mismatch");
  std::map<int, int> remap;
  for (int& l : labels) {
    auto [it, inserted] = remap.try_emplace(l, static_cast<int>(remap.size()));
    l = it->second;
  }
  Segmentation seg;
  seg.width = width;
  seg.height = height;
  seg.labels = std::move(labels);
  seg.segments.resize(remap.size());
  for (std::size_t k = 0; k < seg.segments.size(); ++k) seg.segments[k].id = static_cast<int>(k);
  for (int v = 0; v < height; ++v)
    for (int u = 0; u < width; ++u) seg.segments[seg.label(u, v)].pixels.push_back({u, v});
  for (Segment& s : seg.segments) {
    double su = 0.0, sv = 0.0;
    for (const Pixel& p : s.pixels) {
      su += p.u;
      sv += p.v;
    }
    s.cx = su / static_cast<double>(s.pixels.size());
    s.cy = sv / static_cast<double>(s.pixels.size());
  }
  AdjacencyGraph graph = build_adjacency(seg.labels, width, height);
  seg.adjacency = std::move(graph.pairs);
  seg.junctions3 = std::move(graph.junctions3);
  seg.junctions4 = std::move(graph.junctions4);
  if (image) {
    std::vector<ColorHistogram> hists = color_histograms(*image, seg);
    for (Segment& s : seg.segments) s.histogram = hists[s.id];
  }
  return seg;
}

void dump_segmentation(const Segmentation& segmentation, const std::filesystem::path& label_png,
                       const std::filesystem::path& graph_txt) {
  if (segmentation.size() > 65535) throw std::invalid_argument("dump_segmentation: too many segments");
  std::vector<std::uint16_t> raw(segmentation.labels.begin(), segmentation.labels.end());
  save_png16(raw, segmentation.width, segmentation.height, label_png);
  std::ofstream out(graph_txt);
  if (!out) throw IoError(IoErrorKind::WriteFailed, graph_txt.string());
  out << "# segments " << segmentation.size() << '\n';
  for (const NeighborPair& p : segmentation.adjacency)
    out << "pair " << p.i << ' ' << p.j << ' ' << p.boundary_length << ' ' << p.band.size() << '\n';
  for (const Junction3& j : segmentation.junctions3)
    out << "j3 " << j.segments[0] << ' ' << j.segments[1] << ' ' << j.segments[2] << '\n';
  for (const Junction4& j : segmentation.junctions4)
    out << "j4 " << j.cycle[0] << ' ' << j.cycle[1] << ' ' << j.cycle[2] << ' ' << j.cycle[3] << '\n';
}

}  // namespace cmrf
