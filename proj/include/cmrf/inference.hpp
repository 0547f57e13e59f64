#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <vector>

#include "cmrf/factor_graph.hpp"
#include "cmrf/model.hpp"

namespace cmrf {

struct PcbpConfig {
  int n_particles = 10;
  int n_outer_iters = 5;
  double sigma_alpha0 = 0.5;
  double sigma_beta0 = 0.5;
  double sigma_gamma0 = 5.0;
  double decay = 10.0;  // sigma_t = sigma_0 exp(-t / decay), t = 1, 2, ...
  int bp_max_sweeps = 200;
  double bp_tolerance = 1e-4;
  std::uint64_t seed = 0;
};

/// Throws std::invalid_argument on out-of-range values.
void check(const PcbpConfig& cfg);

struct Sigma {
  double alpha;
  double beta;
  double gamma;
};

Sigma sigma_at(const PcbpConfig& cfg, int t);

/// Robust per-segment plane fit to S_i and F, centered on c_i: the best of
/// the least-squares fit and up to 50 sampled exact triples under the
/// truncated cost, refined by 5 Huber IRLS rounds with a MAD-scaled
/// threshold. Segments with fewer than 3 samples or a rank-deficient design
/// get a constant plane at the median of their samples, else the median gamma
/// of fitted neighbors, else the global median, else 0.
std::vector<Plane> fit_initial_planes(const Segmentation& segmentation, const DisparityImage& obs, double K = 5.0);

/// Particle 0 is `current`; the rest add independent N(0, sigma^2) draws per coordinate.
std::vector<Plane> sample_particles(const Plane& current, const Sigma& sigma, int n, std::mt19937_64& rng);

/// Variables: planes 0..n_segments-1 (one state per particle), then one
/// 4-state label per pair. Factors: plane unaries (w_seg phi_seg), label
/// unaries (w_col phi_color), one (o_ij, y_i, y_j) triplet per pair
/// (w_bdy1 phi_bdy1 + w_bdy2 phi_bdy2), and junction factors whose tables
/// are shared by orientation.
struct Discretization {
  FactorGraph graph;
  int n_segments = 0;
  int label_var(int pair) const { return n_segments + pair; }
};

Discretization discretize(const StereoModel& model, const std::vector<std::vector<Plane>>& particles);

/// Labels minimizing the pairwise terms alone for fixed planes (lowest label on ties).
std::vector<BoundaryLabel> pairwise_best_labels(const StereoModel& model, const std::vector<Plane>& planes);

struct OuterIteration {
  int t = 0;
  Sigma sigma{};
  double decoded_energy = 0.0;  // true energy of the decoded solution
  double incumbent_energy = 0.0;
  bool adopted = false;
  double bound = 0.0;
  int sweeps = 0;
  std::vector<double> bound_trace;
};

struct Solution {
  std::vector<Plane> planes;
  std::vector<BoundaryLabel> labels;
  double energy = 0.0;  // total_energy of (planes, labels)
  double bound = 0.0;   // last dual bound of the discretized problem
  std::vector<double> energy_trace;  // initial energy, then incumbent after each iteration
  std::vector<OuterIteration> iterations;
};

/// Initial fit, then for t = 1..n_outer_iters: sample around the incumbent,
/// discretize, run convex BP, adopt the decode only if its true energy does
/// not exceed the incumbent's.
Solution pcbp(const StereoModel& model, const PcbpConfig& cfg);
Solution pcbp(const StereoModel& model, const PcbpConfig& cfg, std::vector<Plane> initial);

/// Line-oriented trace: config header, then `iter` and `sweep` records.
void write_trace(std::ostream& out, const Solution& solution, const PcbpConfig& cfg);

}  // namespace cmrf
