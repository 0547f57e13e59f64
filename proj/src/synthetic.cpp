#include "cmrf/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

#include "cmrf/keyvalue.hpp"

namespace cmrf {

namespace {

constexpr double kMinDisparity = 4.0;
constexpr double kMaxDisparity = 96.0;
constexpr double kMinOcclusionGap = 3.0;
constexpr double kHingeMeanGap = 0.5;
constexpr int kMinInterfacePixels = 16;  // both sides of a region contact
constexpr int kMaxSceneAttempts = 2000;
constexpr int kMaxSplitAttempts = 60;

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

double signed_uniform(Rng& rng, double lo, double hi) {
  const double m = uniform(rng, lo, hi);
  return std::bernoulli_distribution(0.5)(rng) ? m : -m;
}

bool four_connected(const std::vector<int>& map, int width, int height, int region, int area) {
  const auto start = std::find(map.begin(), map.end(), region);
  if (start == map.end()) return false;
  std::vector<char> seen(map.size(), 0);
  std::vector<int> stack{static_cast<int>(start - map.begin())};
  seen[stack.back()] = 1;
  int count = 0;
  while (!stack.empty()) {
    const int idx = stack.back();
    stack.pop_back();
    ++count;
    const int u = idx % width, v = idx / width;
    const int nb[4][2] = {{u - 1, v}, {u + 1, v}, {u, v - 1}, {u, v + 1}};
    for (const auto& q : nb) {
      if (q[0] < 0 || q[1] < 0 || q[0] >= width || q[1] >= height) continue;
      const int j = q[1] * width + q[0];
      if (!seen[j] && map[j] == region) {
        seen[j] = 1;
        stack.push_back(j);
      }
    }
  }
  return count == area;
}

// Pixels of either region touching the other, keyed by (r1 < r2).
std::map<std::pair<int, int>, std::vector<int>> interface_pixels(const std::vector<int>& map, int width,
                                                                  int height) {
  std::map<std::pair<int, int>, std::vector<int>> out;
  auto add = [&](int a, int b) {
    const int ra = map[a], rb = map[b];
    if (ra == rb) return;
    auto& list = out[{std::min(ra, rb), std::max(ra, rb)}];
    list.push_back(a);
    list.push_back(b);
  };
  for (int v = 0; v < height; ++v)
    for (int u = 0; u < width; ++u) {
      const int idx = v * width + u;
      if (u + 1 < width) add(idx, idx + 1);
      if (v + 1 < height) add(idx, idx + width);
    }
  for (auto& [key, list] : out) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
  }
  return out;
}

struct Layout {
  std::vector<int> region_map;
  std::vector<Plane> planes;
};

std::optional<Layout> try_layout(const SyntheticConfig& cfg, Rng& rng) {
  const int w = cfg.width, h = cfg.height;
  Layout out;
  out.region_map.assign(static_cast<std::size_t>(w) * h, 0);
  const double a0 = uniform(rng, -0.08, 0.08), b0 = uniform(rng, -0.08, 0.08);
  const double center = uniform(rng, 25.0, 60.0);
  out.planes.push_back({a0, b0, center - a0 * 0.5 * w - b0 * 0.5 * h});
  std::vector<int> area{w * h};
  const int min_area = std::max(64, w * h / (4 * cfg.n_planes));

  while (static_cast<int>(out.planes.size()) < cfg.n_planes) {
    const int r = static_cast<int>(std::max_element(area.begin(), area.end()) - area.begin());
    int u0 = w, u1 = -1, v0 = h, v1 = -1;
    double cu = 0.0, cv = 0.0;
    for (int v = 0; v < h; ++v)
      for (int u = 0; u < w; ++u)
        if (out.region_map[static_cast<std::size_t>(v) * w + u] == r) {
          u0 = std::min(u0, u), u1 = std::max(u1, u), v0 = std::min(v0, v), v1 = std::max(v1, v);
          cu += u, cv += v;
        }
    cu /= area[r];
    cv /= area[r];

    bool split = false;
    for (int attempt = 0; attempt < kMaxSplitAttempts && !split; ++attempt) {
      static constexpr double kInvSqrt2 = 0.70710678118654752440;
      static constexpr double kNormals[4][2] = {{1, 0}, {0, 1}, {kInvSqrt2, kInvSqrt2}, {kInvSqrt2, -kInvSqrt2}};
      const int kind = std::uniform_int_distribution<int>(0, 3)(rng);
      const double nx = kNormals[kind][0], ny = kNormals[kind][1];
      const double px = u0 + uniform(rng, 0.3, 0.7) * (u1 - u0) + 0.5;
      const double py = v0 + uniform(rng, 0.3, 0.7) * (v1 - v0) + 0.5;
      const double c = nx * px + ny * py;
      int positive = 0;
      for (int v = v0; v <= v1; ++v)
        for (int u = u0; u <= u1; ++u)
          if (out.region_map[static_cast<std::size_t>(v) * w + u] == r && nx * u + ny * v - c >= 0) ++positive;
      const int limit = std::max(min_area, static_cast<int>(0.15 * area[r]));
      if (positive < limit || area[r] - positive < limit) continue;

      const Plane& parent = out.planes[r];
      Plane child;
      if (std::bernoulli_distribution(0.5)(rng)) {
        // hinge: the child folds about the cut line
        const double k = signed_uniform(rng, 0.2, 0.35);
        child = {parent.alpha + k * nx, parent.beta + k * ny, parent.gamma - k * c};
      } else {
        const double offset = signed_uniform(rng, 6.0, 15.0);
        const double da = uniform(rng, -0.015, 0.015), db = uniform(rng, -0.015, 0.015);
        child = {parent.alpha + da, parent.beta + db, parent.gamma + offset - da * cu - db * cv};
      }
      const int id = static_cast<int>(out.planes.size());
      for (int v = v0; v <= v1; ++v)
        for (int u = u0; u <= u1; ++u) {
          int& cell = out.region_map[static_cast<std::size_t>(v) * w + u];
          if (cell == r && nx * u + ny * v - c >= 0) cell = id;
        }
      out.planes.push_back(child);
      area.push_back(positive);
      area[r] -= positive;
      split = true;
    }
    if (!split) return std::nullopt;
  }

  for (int r = 0; r < static_cast<int>(out.planes.size()); ++r)
    if (!four_connected(out.region_map, w, h, r, area[r])) return std::nullopt;
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) {
      const double d = plane_disparity(out.planes[out.region_map[static_cast<std::size_t>(v) * w + u]], u, v, 0, 0);
      if (d < kMinDisparity || d > kMaxDisparity) return std::nullopt;
    }
  for (const auto& [key, pixels] : interface_pixels(out.region_map, w, h)) {
    if (static_cast<int>(pixels.size()) < std::max(kMinInterfacePixels, cfg.samples_max)) return std::nullopt;
    double sum = 0.0, lo = 1e300, hi = -1e300;
    for (int idx : pixels) {
      const int u = idx % w, v = idx / w;
      const double dd = plane_disparity(out.planes[key.first], u, v, 0, 0) -
                        plane_disparity(out.planes[key.second], u, v, 0, 0);
      sum += std::abs(dd);
      lo = std::min(lo, dd);
      hi = std::max(hi, dd);
    }
    if (sum / pixels.size() <= kHingeMeanGap) continue;
    if (!(lo >= kMinOcclusionGap || hi <= -kMinOcclusionGap)) return std::nullopt;
  }
  return out;
}

}  // namespace

std::vector<Visibility> occlusion_mask(const DisparityImage& disparity) {
  const int w = disparity.width(), h = disparity.height();
  std::vector<Visibility> mask(static_cast<std::size_t>(w) * h, Visibility::Unknown);
  for (int v = 0; v < h; ++v) {
    double running = std::numeric_limits<double>::infinity();
    for (int u = w - 1; u >= 0; --u) {
      if (!disparity.valid(u, v)) continue;
      const double x = u - static_cast<double>(disparity.at(u, v));
      const bool occluded = x < 0.0 || running <= x;
      mask[static_cast<std::size_t>(v) * w + u] = occluded ? Visibility::Occluded : Visibility::NonOccluded;
      running = std::min(running, x);
    }
  }
  return mask;
}

SyntheticScene generate_synthetic(const SyntheticConfig& cfg) {
  if (cfg.width < 32 || cfg.height < 32) throw std::invalid_argument("generate_synthetic: image must be at least 32x32");
  if (cfg.n_planes < 2 || cfg.n_planes > 8) throw std::invalid_argument("generate_synthetic: n_planes must be in [2, 8]");
  if (!(cfg.noise_sigma >= 0.0)) throw std::invalid_argument("generate_synthetic: noise_sigma must be >= 0");
  if (cfg.samples_min < 0 || cfg.samples_max < cfg.samples_min)
    throw std::invalid_argument("generate_synthetic: bad boundary sample range");
  if (!(cfg.interior_rate >= 0.0 && cfg.interior_rate <= 1.0))
    throw std::invalid_argument("generate_synthetic: interior_rate must be in [0, 1]");

  Rng rng(cfg.seed);
  std::optional<Layout> layout;
  for (int attempt = 0; attempt < kMaxSceneAttempts && !layout; ++attempt) layout = try_layout(cfg, rng);
  if (!layout) throw std::runtime_error("generate_synthetic: no feasible scene for this configuration");

  const int w = cfg.width, h = cfg.height;
  SyntheticScene scene;
  scene.config = cfg;
  scene.planes = std::move(layout->planes);
  scene.region_map = std::move(layout->region_map);

  // flat colors drawn from distinct 4x4x4 histogram cells
  std::vector<int> cells(64);
  std::iota(cells.begin(), cells.end(), 0);
  std::shuffle(cells.begin(), cells.end(), rng);
  for (std::size_t r = 0; r < scene.planes.size(); ++r) {
    const int c = cells[r];
    scene.colors.push_back({static_cast<std::uint8_t>(32 + 64 * (c / 16)), static_cast<std::uint8_t>(32 + 64 * ((c / 4) % 4)),
                            static_cast<std::uint8_t>(32 + 64 * (c % 4))});
  }
  scene.left = Image(w, h, 3);
  scene.gt.disparity = DisparityImage(w, h);
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) {
      const int r = scene.region(u, v);
      for (int ch = 0; ch < 3; ++ch) scene.left.at(u, v, ch) = scene.colors[r][ch];
      scene.gt.disparity.set(u, v, static_cast<float>(scene.gt_disparity(u, v)));
    }
  scene.gt.mask = occlusion_mask(scene.gt.disparity);

  std::vector<char> sampled(static_cast<std::size_t>(w) * h, 0);
  for (const auto& [key, pixels] : interface_pixels(scene.region_map, w, h)) {
    int k = std::uniform_int_distribution<int>(cfg.samples_min, cfg.samples_max)(rng);
    // points on an occluding contour belong to the occluder
    double gap = 0.0;
    for (int idx : pixels) gap += std::abs(plane_disparity(scene.planes[key.first], idx % w, idx / w, 0, 0) -
                                           plane_disparity(scene.planes[key.second], idx % w, idx / w, 0, 0));
    std::vector<int> pool;
    for (int idx : pixels) {
      const int own = scene.region_map[idx], other = own == key.first ? key.second : key.first;
      if (gap / pixels.size() <= kHingeMeanGap ||
          plane_disparity(scene.planes[own], idx % w, idx / w, 0, 0) > plane_disparity(scene.planes[other], idx % w, idx / w, 0, 0))
        pool.push_back(idx);
    }
    k = std::min(k, static_cast<int>(pool.size()));
    for (int s = 0; s < k; ++s) {
      const int pick = std::uniform_int_distribution<int>(s, static_cast<int>(pool.size()) - 1)(rng);
      std::swap(pool[s], pool[pick]);
      sampled[pool[s]] = 1;
    }
  }
  std::bernoulli_distribution interior(cfg.interior_rate);
  for (auto& s : sampled)
    if (interior(rng)) s = 1;
  std::normal_distribution<double> noise(0.0, 1.0);
  scene.observations = DisparityImage(w, h);
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) {
      if (!sampled[static_cast<std::size_t>(v) * w + u]) continue;
      const double d = scene.gt_disparity(u, v) + cfg.noise_sigma * noise(rng);
      if (d > 0.0) scene.observations.set(u, v, static_cast<float>(d));
    }
  return scene;
}

void write_scene(const SyntheticScene& scene, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const SyntheticConfig& c = scene.config;
  save_image(scene.left, dir / "left.png");
  save_disparity(scene.gt.disparity, dir / "gt.pfm", DisparityFormat::Pfm);
  save_mask(scene.gt.mask, c.width, c.height, dir / "mask.png");
  save_disparity(scene.observations, dir / "obs.pfm", DisparityFormat::Pfm);
  std::vector<std::uint16_t> regions(scene.region_map.begin(), scene.region_map.end());
  save_png16(regions, c.width, c.height, dir / "regions.png");

  std::ofstream out(dir / "scene.txt");
  if (!out) throw IoError(IoErrorKind::WriteFailed, (dir / "scene.txt").string());
  out << "width = " << c.width << "\nheight = " << c.height << "\nn_planes = " << c.n_planes
      << "\nnoise_sigma = " << format_double(c.noise_sigma) << "\nsamples_min = " << c.samples_min
      << "\nsamples_max = " << c.samples_max << "\ninterior_rate = " << format_double(c.interior_rate)
      << "\nseed = " << c.seed << '\n';
  for (std::size_t r = 0; r < scene.planes.size(); ++r) {
    const Plane& p = scene.planes[r];
    out << "plane." << r << " = " << format_double(p.alpha) << ' ' << format_double(p.beta) << ' '
        << format_double(p.gamma) << '\n';
    out << "color." << r << " = " << int(scene.colors[r][0]) << ' ' << int(scene.colors[r][1]) << ' '
        << int(scene.colors[r][2]) << '\n';
  }
  if (!out) throw IoError(IoErrorKind::WriteFailed, (dir / "scene.txt").string());
}

SyntheticScene read_scene(const std::filesystem::path& dir) {
  const KeyValues kv = read_key_values(dir / "scene.txt");
  SyntheticScene scene;
  SyntheticConfig& c = scene.config;
  c.width = static_cast<int>(kv_int(kv, "width"));
  c.height = static_cast<int>(kv_int(kv, "height"));
  c.n_planes = static_cast<int>(kv_int(kv, "n_planes"));
  c.noise_sigma = kv_double(kv, "noise_sigma");
  c.samples_min = static_cast<int>(kv_int(kv, "samples_min"));
  c.samples_max = static_cast<int>(kv_int(kv, "samples_max"));
  c.interior_rate = kv_double(kv, "interior_rate");
  c.seed = static_cast<std::uint64_t>(std::stoull(kv.at("seed")));
  for (int r = 0; r < c.n_planes; ++r) {
    Plane p;
    std::istringstream ps(kv.at("plane." + std::to_string(r)));
    if (!(ps >> p.alpha >> p.beta >> p.gamma)) throw IoError(IoErrorKind::CorruptData, "scene.txt: bad plane entry");
    scene.planes.push_back(p);
    int rgb[3];
    std::istringstream cs(kv.at("color." + std::to_string(r)));
    if (!(cs >> rgb[0] >> rgb[1] >> rgb[2])) throw IoError(IoErrorKind::CorruptData, "scene.txt: bad color entry");
    scene.colors.push_back({static_cast<std::uint8_t>(rgb[0]), static_cast<std::uint8_t>(rgb[1]),
                            static_cast<std::uint8_t>(rgb[2])});
  }
  scene.left = load_image(dir / "left.png");
  scene.gt.disparity = load_disparity(dir / "gt.pfm", DisparityFormat::Pfm);
  int mw = 0, mh = 0;
  scene.gt.mask = load_mask(dir / "mask.png", mw, mh);
  scene.observations = load_disparity(dir / "obs.pfm", DisparityFormat::Pfm);
  int rw = 0, rh = 0;
  const std::vector<std::uint16_t> regions = load_png16(dir / "regions.png", rw, rh);
  scene.region_map.assign(regions.begin(), regions.end());
  if (scene.left.width() != c.width || scene.left.height() != c.height || mw != c.width || mh != c.height ||
      rw != c.width || rh != c.height || scene.gt.disparity.width() != c.width ||
      scene.observations.width() != c.width)
    throw IoError(IoErrorKind::CorruptData, "scene directory: inconsistent dimensions");
  scene.gt.check();
  return scene;
}

}  // namespace cmrf
