#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <set>
#include <vector>

#include "cmrf/factor_graph.hpp"
#include "cmrf/model.hpp"
#include "cmrf/segmentation.hpp"

namespace cmrf::testing {

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

/// Nearest-seed label map, optionally overlaid on a four-quadrant split so a
/// 4-way crossing exists.
inline std::vector<int> random_label_map(std::mt19937_64& rng, int w, int h, int n_seeds, bool quadrants) {
  std::vector<int> labels(static_cast<std::size_t>(w) * h);
  if (quadrants) {
    const int cu = uniform_int(rng, 2, w - 2), cv = uniform_int(rng, 2, h - 2);
    for (int v = 0; v < h; ++v)
      for (int u = 0; u < w; ++u) labels[v * w + u] = (u < cu) + 2 * (v < cv);
    return labels;
  }
  std::vector<std::array<double, 2>> seeds;
  for (int k = 0; k < n_seeds; ++k) seeds.push_back({uniform(rng, 0, w), uniform(rng, 0, h)});
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) {
      int best = 0;
      double dist = std::numeric_limits<double>::infinity();
      for (int k = 0; k < n_seeds; ++k) {
        const double d = std::hypot(u - seeds[k][0], v - seeds[k][1]);
        if (d < dist) dist = d, best = k;
      }
      labels[v * w + u] = best;
    }
  return labels;
}

inline Image random_image(std::mt19937_64& rng, int w, int h) {
  Image img(w, h, 3);
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u)
      for (int c = 0; c < 3; ++c) img.at(u, v, c) = static_cast<std::uint8_t>(uniform_int(rng, 0, 255));
  return img;
}

inline DisparityImage random_observations(std::mt19937_64& rng, int w, int h, double rate) {
  DisparityImage d(w, h);
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u)
      if (uniform(rng, 0, 1) < rate) d.set(u, v, static_cast<float>(uniform(rng, 0.5, 30.0)));
  return d;
}

inline ModelParams random_params(std::mt19937_64& rng) {
  ModelParams p;
  p.K = uniform(rng, 1.0, 8.0);
  p.lambda_hinge = uniform(rng, 0.5, 5.0);
  p.lambda_occ = p.lambda_hinge + uniform(rng, 0.5, 20.0);
  p.lambda_imp = uniform(rng, 5.0, 50.0);
  p.lambda_col = uniform(rng, 5.0, 50.0);
  p.kappa = uniform(rng, 10.0, 100.0);
  p.w = {uniform(rng, 0, 2), uniform(rng, 0, 2), uniform(rng, 0, 2),
         uniform(rng, 0, 2), uniform(rng, 0, 2), uniform(rng, 0, 2)};
  return p;
}

inline Plane random_plane(std::mt19937_64& rng) {
  return {uniform(rng, -0.6, 0.6), uniform(rng, -0.6, 0.6), uniform(rng, -4.0, 25.0)};
}

/// Energy from the direct pixel-loop potentials, independent of the model's caches.
inline double brute_energy(const Segmentation& seg, const DisparityImage& obs, const ModelParams& p,
                           const std::vector<Plane>& planes, const std::vector<BoundaryLabel>& labels) {
  double e = 0.0;
  for (const Segment& s : seg.segments) e += p.w.seg * phi_seg(planes[s.id], s, obs, p.K);
  for (std::size_t k = 0; k < seg.adjacency.size(); ++k) {
    const NeighborPair& np = seg.adjacency[k];
    const Segment& si = seg.segments[np.i];
    const Segment& sj = seg.segments[np.j];
    e += p.w.bdy1 * phi_bdy1(labels[k], planes[np.i], si, planes[np.j], sj, np.band, obs, p.K);
    e += p.w.bdy2 * phi_bdy2(labels[k], planes[np.i], si, planes[np.j], sj, np.band, p);
    e += p.w.col * phi_color(labels[k], si.histogram, sj.histogram, p);
  }
  auto toward = [](BoundaryLabel o, bool first_is_lower) {
    if (o == BoundaryLabel::Coplanar) return DirectedLabel::Coplanar;
    if (o == BoundaryLabel::Hinge) return DirectedLabel::Hinge;
    const bool lower_front = o == BoundaryLabel::LeftOccludes;
    return lower_front == first_is_lower ? DirectedLabel::FirstFront : DirectedLabel::SecondFront;
  };
  for (const Junction3& j : seg.junctions3) {
    std::array<DirectedLabel, 3> d{};
    for (int m = 0; m < 3; ++m) {
      const int a = j.segments[m], b = j.segments[(m + 1) % 3];
      d[m] = toward(labels[j.pairs[m]], a < b);
    }
    e += p.w.jct3 * phi_junction3(d, p.lambda_imp);
  }
  for (const Junction4& j : seg.junctions4) {
    std::array<DirectedLabel, 4> d{};
    for (int m = 0; m < 4; ++m) {
      const int a = j.cycle[m], b = j.cycle[(m + 1) % 4];
      d[m] = toward(labels[j.pairs[m]], a < b);
    }
    e += p.w.crs4 * phi_junction4(d, j.orientation, p.lambda_imp);
  }
  return e;
}

/// Exhaustive minimum of a factor graph.
inline double brute_force_min(const FactorGraph& g, std::vector<int>* argmin = nullptr) {
  const int n = g.n_variables();
  std::vector<int> x(n, 0);
  double best = std::numeric_limits<double>::infinity();
  while (true) {
    const double e = g.energy(x);
    if (e < best) {
      best = e;
      if (argmin) *argmin = x;
    }
    int v = n - 1;
    while (v >= 0 && ++x[v] == g.n_states(v)) x[v--] = 0;
    if (v < 0) break;
  }
  return best;
}

inline std::vector<double> random_table(std::mt19937_64& rng, std::size_t n) {
  std::vector<double> t(n);
  for (double& x : t) x = uniform(rng, 0.0, 10.0);
  return t;
}

inline std::size_t table_size(const FactorGraph& g, const std::vector<int>& scope) {
  std::size_t n = 1;
  for (int v : scope) n *= g.n_states(v);
  return n;
}

/// Acyclic factor graph: every new factor attaches fresh variables to one
/// existing variable. Unaries on every variable.
inline FactorGraph random_tree(std::mt19937_64& rng, int max_vars, int max_states) {
  FactorGraph g;
  const int n = uniform_int(rng, 1, max_vars);
  g.add_variable(uniform_int(rng, 2, max_states));
  while (g.n_variables() < n) {
    const int anchor = uniform_int(rng, 0, g.n_variables() - 1);
    const int fresh = std::min(uniform_int(rng, 1, 2), n - g.n_variables());
    std::vector<int> scope{anchor};
    for (int k = 0; k < fresh; ++k) scope.push_back(g.add_variable(uniform_int(rng, 2, max_states)));
    std::shuffle(scope.begin(), scope.end(), rng);
    g.add_factor(scope, random_table(rng, table_size(g, scope)));
  }
  for (int v = 0; v < g.n_variables(); ++v) g.add_factor({v}, random_table(rng, g.n_states(v)));
  return g;
}

/// Factor graph with at least one cycle among pairwise and triplet factors.
inline FactorGraph random_loopy(std::mt19937_64& rng, int max_vars, int max_states) {
  FactorGraph g;
  const int n = uniform_int(rng, 3, max_vars);
  for (int v = 0; v < n; ++v) g.add_variable(uniform_int(rng, 2, max_states));
  for (int v = 0; v < n; ++v) {
    const std::vector<int> scope{v, (v + 1) % n};
    g.add_factor(scope, random_table(rng, table_size(g, scope)));
  }
  const int extra = uniform_int(rng, 0, 3);
  for (int k = 0; k < extra; ++k) {
    std::vector<int> all(n);
    for (int v = 0; v < n; ++v) all[v] = v;
    std::shuffle(all.begin(), all.end(), rng);
    std::vector<int> scope(all.begin(), all.begin() + std::min(n, uniform_int(rng, 2, 3)));
    g.add_factor(scope, random_table(rng, table_size(g, scope)));
  }
  for (int v = 0; v < n; ++v) g.add_factor({v}, random_table(rng, g.n_states(v)));
  return g;
}

/// Impossible 3-way junctions listed class by class as directed labels on
/// edges (s0,s1), (s1,s2), (s2,s0), then closed under rotation.
inline std::set<int> junction3_prototype_expansion() {
  using D = DirectedLabel;
  const D C = D::Coplanar, H = D::Hinge, F = D::FirstFront, S = D::SecondFront;
  const std::vector<std::array<D, 3>> prototypes = {
      {F, F, F}, {S, S, S},  // cyclic occlusions
      {H, F, F}, {H, S, S},  // hinge, occlusions in opposite directions
      {C, F, F}, {C, S, S},  // coplanar, occlusions in opposite directions
      {H, H, F}, {H, H, S},  // two hinges and an occlusion
      {C, C, F}, {C, C, S},  // two coplanar and an occlusion
      {C, C, H},             // two coplanar and a hinge
      {C, H, S}, {C, F, H},  // coplanar member in front
  };
  std::set<int> out;
  for (const auto& p : prototypes)
    for (int r = 0; r < 3; ++r)
      out.insert(int(p[r]) * 16 + int(p[(r + 1) % 3]) * 4 + int(p[(r + 2) % 3]));
  return out;
}

/// Valid 4-way junctions around the cycle a, b, d, c of [[a, b], [c, d]]:
/// edges a|b and d|c vertical, b/d and c/a horizontal.
inline std::set<int> junction4_prototype_expansion() {
  using D = DirectedLabel;
  const D C = D::Coplanar, H = D::Hinge, F = D::FirstFront, S = D::SecondFront;
  const std::vector<std::array<D, 4>> valid = {
      {C, C, C, C},
      {C, H, C, H}, {C, F, C, S}, {C, S, C, F},  // vertical coplanar; top row or bottom row in front
      {H, C, H, C}, {F, C, S, C}, {S, C, F, C},  // horizontal coplanar; left or right column in front
  };
  std::set<int> out;
  for (const auto& p : valid) out.insert(int(p[0]) * 64 + int(p[1]) * 16 + int(p[2]) * 4 + int(p[3]));
  return out;
}

}  // namespace cmrf::testing
