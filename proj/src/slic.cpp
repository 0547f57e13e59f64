#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "cmrf/segmentation.hpp"

namespace cmrf {

namespace {

struct Lab {
  float l, a, b;
};

std::vector<Lab> to_lab(const Image& image) {
  std::array<float, 256> linear{};
  for (int i = 0; i < 256; ++i) {
    const double c = i / 255.0;
    linear[i] = static_cast<float>(c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4));
  }
  auto f = [](double t) {
    return t > 0.008856 ? std::cbrt(t) : (903.3 * t + 16.0) / 116.0;
  };
  std::vector<Lab> lab(static_cast<std::size_t>(image.width()) * image.height());
  for (int v = 0; v < image.height(); ++v)
    for (int u = 0; u < image.width(); ++u) {
      const bool color = image.channels() == 3;
      const double r = linear[image.at(u, v, 0)];
      const double g = linear[image.at(u, v, color ? 1 : 0)];
      const double b = linear[image.at(u, v, color ? 2 : 0)];
      const double x = (0.412453 * r + 0.357580 * g + 0.180423 * b) / 0.950456;
      const double y = 0.212671 * r + 0.715160 * g + 0.072169 * b;
      const double z = (0.019334 * r + 0.119193 * g + 0.950227 * b) / 1.088754;
      const double fx = f(x), fy = f(y), fz = f(z);
      const double l = y > 0.008856 ? 116.0 * fy - 16.0 : 903.3 * y;
      lab[static_cast<std::size_t>(v) * image.width() + u] = {
          static_cast<float>(l), static_cast<float>(500.0 * (fx - fy)), static_cast<float>(200.0 * (fy - fz))};
    }
  return lab;
}

struct Center {
  double l, a, b, x, y;
};

int find_root(std::vector<int>& parent, int x) {
  while (parent[x] != x) {
    parent[x] = parent[parent[x]];
    x = parent[x];
  }
  return x;
}

// Splits labels into 4-connected components and merges every component
// smaller than `min_area` into its largest-area neighbor.
std::vector<int> enforce_connectivity(const std::vector<int>& labels, int width, int height,
                                      double min_area) {
  const std::size_t n = labels.size();
  std::vector<int> comp(n, -1);
  std::vector<int> area;
  std::vector<int> stack;
  for (std::size_t start = 0; start < n; ++start) {
    if (comp[start] >= 0) continue;
    const int id = static_cast<int>(area.size());
    area.push_back(0);
    comp[start] = id;
    stack.assign(1, static_cast<int>(start));
    while (!stack.empty()) {
      const int idx = stack.back();
      stack.pop_back();
      ++area[id];
      const int u = idx % width, v = idx / width;
      const int nb[4][2] = {{u - 1, v}, {u + 1, v}, {u, v - 1}, {u, v + 1}};
      for (const auto& q : nb) {
        if (q[0] < 0 || q[1] < 0 || q[0] >= width || q[1] >= height) continue;
        const int j = q[1] * width + q[0];
        if (comp[j] < 0 && labels[j] == labels[idx]) {
          comp[j] = id;
          stack.push_back(j);
        }
      }
    }
  }

  std::vector<int> parent(area.size());
  std::iota(parent.begin(), parent.end(), 0);
  bool changed = true;
  while (changed) {
    changed = false;
    // best neighbor (largest area, lowest id on ties) of every current root
    std::vector<int> best(area.size(), -1);
    auto consider = [&](int a, int b) {
      const int ra = find_root(parent, a), rb = find_root(parent, b);
      if (ra == rb) return;
      int& cur = best[ra];
      if (cur < 0 || area[rb] > area[cur] || (area[rb] == area[cur] && rb < cur)) cur = rb;
    };
    for (int v = 0; v < height; ++v)
      for (int u = 0; u < width; ++u) {
        const int idx = v * width + u;
        if (u + 1 < width) {
          consider(comp[idx], comp[idx + 1]);
          consider(comp[idx + 1], comp[idx]);
        }
        if (v + 1 < height) {
          consider(comp[idx], comp[idx + width]);
          consider(comp[idx + width], comp[idx]);
        }
      }
    for (std::size_t c = 0; c < area.size(); ++c) {
      const int r = find_root(parent, static_cast<int>(c));
      if (r != static_cast<int>(c) || area[r] >= min_area || best[r] < 0) continue;
      const int target = find_root(parent, best[r]);
      if (target == r) continue;
      parent[r] = target;
      area[target] += area[r];
      changed = true;
    }
  }
  std::vector<int> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = find_root(parent, comp[i]);
  return out;
}

}  // namespace

Segmentation slic(const Image& image, const SlicConfig& cfg) {
  const int width = image.width(), height = image.height();
  const long long n_pixels = static_cast<long long>(width) * height;
  if (cfg.n_target < 1) throw std::invalid_argument("slic: n_target must be >= 1");
  if (cfg.n_target > n_pixels) throw std::invalid_argument("slic: n_target exceeds pixel count");
  if (cfg.iterations < 1) throw std::invalid_argument("slic: iterations must be >= 1");
  const int n_target = static_cast<int>(std::max<long long>(1, std::min<long long>(cfg.n_target, n_pixels / 16)));
  const std::vector<Lab> lab = to_lab(image);
  auto lab_at = [&](int u, int v) -> const Lab& { return lab[static_cast<std::size_t>(v) * width + u]; };

  // hexagonal lattice: alternate rows shifted by half a column spacing
  const int nx = std::max(1, static_cast<int>(std::lround(std::sqrt(static_cast<double>(n_target) * width / height))));
  const int ny = std::max(1, static_cast<int>(std::lround(static_cast<double>(n_target) / nx)));
  const double sx = static_cast<double>(width) / nx, sy = static_cast<double>(height) / ny;
  const double step = std::sqrt(static_cast<double>(n_pixels) / (nx * ny));

  auto gradient = [&](int u, int v) {
    const Lab& l0 = lab_at(std::max(u - 1, 0), v);
    const Lab& l1 = lab_at(std::min(u + 1, width - 1), v);
    const Lab& t0 = lab_at(u, std::max(v - 1, 0));
    const Lab& t1 = lab_at(u, std::min(v + 1, height - 1));
    auto sq = [](const Lab& p, const Lab& q) {
      return (p.l - q.l) * (p.l - q.l) + (p.a - q.a) * (p.a - q.a) + (p.b - q.b) * (p.b - q.b);
    };
    return sq(l0, l1) + sq(t0, t1);
  };

  std::vector<Center> centers;
  for (int row = 0; row < ny; ++row)
    for (int col = 0; col < nx; ++col) {
      const double offset = (row % 2 == 0) ? 0.25 : 0.75;
      int u = std::clamp(static_cast<int>((col + offset) * sx), 0, width - 1);
      int v = std::clamp(static_cast<int>((row + 0.5) * sy), 0, height - 1);
      int best_u = u, best_v = v;
      float best_g = gradient(u, v);
      for (int dv = -1; dv <= 1; ++dv)
        for (int du = -1; du <= 1; ++du) {
          const int uu = u + du, vv = v + dv;
          if (uu < 0 || vv < 0 || uu >= width || vv >= height) continue;
          const float g = gradient(uu, vv);
          if (g < best_g) {
            best_g = g;
            best_u = uu;
            best_v = vv;
          }
        }
      const Lab& c = lab_at(best_u, best_v);
      centers.push_back({c.l, c.a, c.b, static_cast<double>(best_u), static_cast<double>(best_v)});
    }

  const double spatial_weight = (cfg.compactness / step) * (cfg.compactness / step);
  const int radius = static_cast<int>(std::ceil(step));
  std::vector<int> labels(static_cast<std::size_t>(n_pixels), 0);
  std::vector<double> dist(static_cast<std::size_t>(n_pixels));
  for (int it = 0; it < cfg.iterations; ++it) {
    std::fill(dist.begin(), dist.end(), std::numeric_limits<double>::infinity());
    for (std::size_t k = 0; k < centers.size(); ++k) {
      const Center& c = centers[k];
      const int u0 = std::max(0, static_cast<int>(c.x) - radius), u1 = std::min(width - 1, static_cast<int>(c.x) + radius);
      const int v0 = std::max(0, static_cast<int>(c.y) - radius), v1 = std::min(height - 1, static_cast<int>(c.y) + radius);
      for (int v = v0; v <= v1; ++v)
        for (int u = u0; u <= u1; ++u) {
          const Lab& p = lab_at(u, v);
          const double dc = (p.l - c.l) * (p.l - c.l) + (p.a - c.a) * (p.a - c.a) + (p.b - c.b) * (p.b - c.b);
          const double ds = (u - c.x) * (u - c.x) + (v - c.y) * (v - c.y);
          const double d = dc + ds * spatial_weight;
          const std::size_t idx = static_cast<std::size_t>(v) * width + u;
          if (d < dist[idx]) {
            dist[idx] = d;
            labels[idx] = static_cast<int>(k);
          }
        }
    }
    // pixels outside every window keep their previous assignment
    std::vector<std::array<double, 6>> acc(centers.size(), std::array<double, 6>{});
    for (int v = 0; v < height; ++v)
      for (int u = 0; u < width; ++u) {
        const std::size_t idx = static_cast<std::size_t>(v) * width + u;
        auto& a = acc[labels[idx]];
        const Lab& p = lab[idx];
        a[0] += p.l;
        a[1] += p.a;
        a[2] += p.b;
        a[3] += u;
        a[4] += v;
        a[5] += 1.0;
      }
    for (std::size_t k = 0; k < centers.size(); ++k) {
      const auto& a = acc[k];
      if (a[5] == 0.0) continue;
      centers[k] = {a[0] / a[5], a[1] / a[5], a[2] / a[5], a[3] / a[5], a[4] / a[5]};
    }
  }

  const double min_area = static_cast<double>(n_pixels) / static_cast<double>(centers.size()) / 4.0;
  std::vector<int> connected = enforce_connectivity(labels, width, height, min_area);
  return make_segmentation(std::move(connected), width, height, &image);
}

}  // namespace cmrf
