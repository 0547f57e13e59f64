#include "cmrf/matching.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

namespace cmrf {

namespace {

constexpr int kCensusRadius = 2;
constexpr std::uint16_t kOutOfView = 24;  // all census bits differ

std::vector<std::uint8_t> luma(const Image& image) {
  std::vector<std::uint8_t> out(static_cast<std::size_t>(image.width()) * image.height());
  for (int v = 0; v < image.height(); ++v)
    for (int u = 0; u < image.width(); ++u) {
      std::uint8_t y = image.at(u, v, 0);
      if (image.channels() == 3)
        y = static_cast<std::uint8_t>((77 * image.at(u, v, 0) + 150 * image.at(u, v, 1) + 29 * image.at(u, v, 2) + 128) >> 8);
      out[static_cast<std::size_t>(v) * image.width() + u] = y;
    }
  return out;
}

std::vector<std::uint32_t> census(const std::vector<std::uint8_t>& gray, int w, int h) {
  std::vector<std::uint32_t> out(gray.size());
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) {
      const std::uint8_t center = gray[static_cast<std::size_t>(v) * w + u];
      std::uint32_t bits = 0;
      for (int dv = -kCensusRadius; dv <= kCensusRadius; ++dv)
        for (int du = -kCensusRadius; du <= kCensusRadius; ++du) {
          if (du == 0 && dv == 0) continue;
          const int uu = std::clamp(u + du, 0, w - 1), vv = std::clamp(v + dv, 0, h - 1);
          bits = (bits << 1) | (gray[static_cast<std::size_t>(vv) * w + uu] < center ? 1u : 0u);
        }
      out[static_cast<std::size_t>(v) * w + u] = bits;
    }
  return out;
}

// Pixels whose luma is constant over the window every cost at them reads.
std::vector<char> textureless(const std::vector<std::uint8_t>& gray, int w, int h, int radius) {
  std::vector<char> out(gray.size());
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) {
      const std::uint8_t center = gray[static_cast<std::size_t>(v) * w + u];
      bool flat = true;
      for (int dv = -radius; dv <= radius && flat; ++dv)
        for (int du = -radius; du <= radius && flat; ++du) {
          const int uu = std::clamp(u + du, 0, w - 1), vv = std::clamp(v + dv, 0, h - 1);
          flat = gray[static_cast<std::size_t>(vv) * w + uu] == center;
        }
      out[static_cast<std::size_t>(v) * w + u] = flat;
    }
  return out;
}

// Cost volume indexed (v * w + u) * nd + d.
class Volume {
 public:
  Volume(int w, int h, int nd) : w_(w), h_(h), nd_(nd), data_(static_cast<std::size_t>(w) * h * nd, 0) {}
  std::uint32_t* at(int u, int v) { return data_.data() + (static_cast<std::size_t>(v) * w_ + u) * nd_; }
  const std::uint32_t* at(int u, int v) const { return data_.data() + (static_cast<std::size_t>(v) * w_ + u) * nd_; }

 private:
  int w_, h_, nd_;
  std::vector<std::uint32_t> data_;
};

Volume block_costs(const std::vector<std::uint32_t>& cl, const std::vector<std::uint32_t>& cr, int w, int h, int nd,
                   int radius) {
  Volume raw(w, h, nd);
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) {
      std::uint32_t* c = raw.at(u, v);
      const std::uint32_t a = cl[static_cast<std::size_t>(v) * w + u];
      for (int d = 0; d < nd; ++d)
        c[d] = u - d >= 0 ? static_cast<std::uint32_t>(std::popcount(a ^ cr[static_cast<std::size_t>(v) * w + u - d]))
                          : kOutOfView;
    }
  // separable box sum with clamped borders
  Volume tmp(w, h, nd), out(w, h, nd);
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) {
      std::uint32_t* t = tmp.at(u, v);
      for (int k = -radius; k <= radius; ++k) {
        const std::uint32_t* s = raw.at(std::clamp(u + k, 0, w - 1), v);
        for (int d = 0; d < nd; ++d) t[d] += s[d];
      }
    }
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) {
      std::uint32_t* o = out.at(u, v);
      for (int k = -radius; k <= radius; ++k) {
        const std::uint32_t* s = tmp.at(u, std::clamp(v + k, 0, h - 1));
        for (int d = 0; d < nd; ++d) o[d] += s[d];
      }
    }
  return out;
}

void aggregate_path(const Volume& cost, Volume& sum, int w, int h, int nd, int dx, int dy, std::uint32_t p1,
                    std::uint32_t p2) {
  std::vector<std::uint32_t> path(static_cast<std::size_t>(w) * h * nd);
  auto lp = [&](int u, int v) { return path.data() + (static_cast<std::size_t>(v) * w + u) * nd; };
  const int v_begin = dy >= 0 ? 0 : h - 1, v_end = dy >= 0 ? h : -1, v_step = dy >= 0 ? 1 : -1;
  const int u_begin = dx >= 0 ? 0 : w - 1, u_end = dx >= 0 ? w : -1, u_step = dx >= 0 ? 1 : -1;
  for (int v = v_begin; v != v_end; v += v_step)
    for (int u = u_begin; u != u_end; u += u_step) {
      const std::uint32_t* c = cost.at(u, v);
      std::uint32_t* l = lp(u, v);
      const int pu = u - dx, pv = v - dy;
      if (pu < 0 || pv < 0 || pu >= w || pv >= h) {
        std::copy(c, c + nd, l);
      } else {
        const std::uint32_t* prev = lp(pu, pv);
        const std::uint32_t best = *std::min_element(prev, prev + nd);
        for (int d = 0; d < nd; ++d) {
          std::uint32_t m = std::min(prev[d], best + p2);
          if (d > 0) m = std::min(m, prev[d - 1] + p1);
          if (d + 1 < nd) m = std::min(m, prev[d + 1] + p1);
          l[d] = c[d] + m - best;
        }
      }
      std::uint32_t* s = sum.at(u, v);
      for (int d = 0; d < nd; ++d) s[d] += l[d];
    }
}

}  // namespace

void check(const MatchConfig& cfg) {
  if (cfg.max_disparity < 1) throw std::invalid_argument("match: max_disparity must be >= 1");
  if (cfg.block_radius < 0) throw std::invalid_argument("match: block_radius must be >= 0");
  if (cfg.n_paths != 4 && cfg.n_paths != 8) throw std::invalid_argument("match: n_paths must be 4 or 8");
  if (cfg.p1 < 0 || cfg.p2 < cfg.p1) throw std::invalid_argument("match: need p2 >= p1 >= 0");
  if (!(cfg.lr_threshold >= 0.0)) throw std::invalid_argument("match: lr_threshold must be >= 0");
  if (!(cfg.uniqueness >= 0.0)) throw std::invalid_argument("match: uniqueness must be >= 0");
}

DisparityImage match(const Image& left, const Image& right, const MatchConfig& cfg) {
  check(cfg);
  if (left.width() != right.width() || left.height() != right.height())
    throw std::invalid_argument("match: left and right dimensions differ");
  const int w = left.width(), h = left.height(), nd = cfg.max_disparity + 1;
  const auto gray = luma(left);
  const auto flat = textureless(gray, w, h, kCensusRadius + cfg.block_radius);
  const auto cl = census(gray, w, h);
  const auto cr = census(luma(right), w, h);
  const Volume cost = block_costs(cl, cr, w, h, nd, cfg.block_radius);

  static constexpr int kDirs[8][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {-1, -1}, {1, -1}, {-1, 1}};
  Volume sum(w, h, nd);
  for (int k = 0; k < cfg.n_paths; ++k)
    aggregate_path(cost, sum, w, h, nd, kDirs[k][0], kDirs[k][1], static_cast<std::uint32_t>(cfg.p1),
                   static_cast<std::uint32_t>(cfg.p2));

  // right-view winners read from the same volume along x + d
  std::vector<int> right_d(static_cast<std::size_t>(w) * h, -1);
  for (int v = 0; v < h; ++v)
    for (int x = 0; x < w; ++x) {
      std::uint32_t best = std::numeric_limits<std::uint32_t>::max();
      for (int d = 0; d < nd && x + d < w; ++d) {
        const std::uint32_t s = sum.at(x + d, v)[d];
        if (s < best) {
          best = s;
          right_d[static_cast<std::size_t>(v) * w + x] = d;
        }
      }
    }

  DisparityImage out(w, h);
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) {
      const std::uint32_t* s = sum.at(u, v);
      const int dmax = std::min(nd - 1, u);
      if (flat[static_cast<std::size_t>(v) * w + u]) continue;
      int best_d = 0;
      for (int d = 1; d <= dmax; ++d)
        if (s[d] < s[best_d]) best_d = d;
      bool unique = true;
      for (int d = 0; d <= dmax && unique; ++d)
        if (std::abs(d - best_d) > 1 && static_cast<double>(s[d]) <= (1.0 + cfg.uniqueness) * s[best_d]) unique = false;
      if (!unique) continue;
      const int x = u - best_d;
      const int rd = right_d[static_cast<std::size_t>(v) * w + x];
      if (rd < 0 || std::abs(rd - best_d) > cfg.lr_threshold) continue;
      double d = best_d;
      if (cfg.subpixel && best_d > 0 && best_d < dmax) {
        const double a = s[best_d - 1], b = s[best_d], c = s[best_d + 1];
        const double denom = a - 2.0 * b + c;
        if (denom > 0.0) d += (a - c) / (2.0 * denom);
      }
      out.set(u, v, static_cast<float>(std::clamp(d, 0.0, static_cast<double>(cfg.max_disparity))));
    }
  return out;
}

DisparityImage passthrough(const DisparityImage& obs) { return obs; }

}  // namespace cmrf
