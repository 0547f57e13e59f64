#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cmrf/imagery.hpp"
#include "cmrf/plane.hpp"
#include "cmrf/segmentation.hpp"

namespace cmrf {

/// o_ij for a pair (i, j), i < j. LeftOccludes: segment i is in front.
enum class BoundaryLabel : std::uint8_t { Coplanar = 0, Hinge = 1, LeftOccludes = 2, RightOccludes = 3 };
inline constexpr int kBoundaryStates = 4;

const char* to_string(BoundaryLabel o);  // "co", "hi", "lo", "ro"

struct PotentialWeights {
  double seg = 1.0;
  double bdy1 = 1.0;
  double bdy2 = 1.0;
  double jct3 = 1.0;
  double crs4 = 1.0;
  double col = 1.0;
};

struct ModelParams {
  double K = 5.0;
  double lambda_occ = 15.0;
  double lambda_hinge = 3.0;
  double lambda_imp = 30.0;
  double lambda_col = 30.0;
  double kappa = 60.0;
  PotentialWeights w;
};

/// Throws std::invalid_argument unless lambda_occ > lambda_hinge > 0, K > 0 and
/// every other value is finite and non-negative.
void check(const ModelParams& params);

double truncated_quadratic(double d_obs, double d_hat, double K);

/// Tolerance below which a front plane counts as level with the back plane.
inline constexpr double kOcclusionSlack = 1e-9;

// Direct pixel-loop forms. Planes are centered on their own segment.
double phi_seg(const Plane& y, const Segment& s, const DisparityImage& obs, double K);
double phi_bdy1(BoundaryLabel o, const Plane& yi, const Segment& si, const Plane& yj, const Segment& sj,
                std::span<const Pixel> band, const DisparityImage& obs, double K);
double phi_occ(const Plane& front, const Segment& sf, const Plane& back, const Segment& sb,
               std::span<const Pixel> band, double lambda_imp);
double phi_neg(const Plane& y, const Segment& s, std::span<const Pixel> band, double lambda_imp);
double phi_bdy2(BoundaryLabel o, const Plane& yi, const Segment& si, const Plane& yj, const Segment& sj,
                std::span<const Pixel> band, const ModelParams& params);
double phi_color(BoundaryLabel o, const ColorHistogram& hi, const ColorHistogram& hj, const ModelParams& params);

/// Boundary label seen from an ordered edge (first, second) around a junction.
enum class DirectedLabel : std::uint8_t { Coplanar = 0, Hinge = 1, FirstFront = 2, SecondFront = 3 };

/// `first_is_i`: the edge's first segment is the pair's lower id.
DirectedLabel directed(BoundaryLabel o, bool first_is_i);

/// Impossible 3-way configurations, indexed l0 * 16 + l1 * 4 + l2 over the
/// edges (s0,s1), (s1,s2), (s2,s0) of a counter-clockwise junction.
const std::array<bool, 64>& junction3_impossible_table();
/// Valid 4-way configurations, indexed l0 * 64 + l1 * 16 + l2 * 4 + l3 over
/// the cycle edges (c0,c1), (c1,c2), (c2,c3), (c3,c0).
const std::array<bool, 256>& junction4_valid_table();

double phi_junction3(const std::array<DirectedLabel, 3>& labels, double lambda_imp);
/// Opposite boundaries must share an orientation; throws otherwise.
double phi_junction4(const std::array<DirectedLabel, 4>& labels,
                     const std::array<BoundaryOrientation, 4>& orientation, double lambda_imp);

/// Second-order statistics of a pixel set, enough to integrate any squared
/// affine function exactly.
struct Moments {
  double n = 0.0;
  double mu = 0.0, mv = 0.0;
  double suu = 0.0, svv = 0.0, suv = 0.0;  // central, divided by n

  static Moments of(std::span<const Pixel> pixels);
  static Moments pooled(const Moments& a, const Moments& b);
};

struct Observation {
  double u;
  double v;
  double d;
};

/// Segmentation, observations and parameters with per-segment and per-pair
/// caches. Immutable after construction.
class StereoModel {
 public:
  StereoModel(Segmentation segmentation, DisparityImage observations, ModelParams params);

  const Segmentation& segmentation() const { return seg_; }
  const DisparityImage& observations() const { return obs_; }
  const ModelParams& params() const { return params_; }
  std::size_t n_segments() const { return seg_.size(); }
  std::size_t n_pairs() const { return seg_.adjacency.size(); }

  std::span<const Observation> segment_observations(int i) const { return seg_obs_[i]; }

  double phi_seg(int i, const Plane& y) const;

  /// Sum of truncated residuals of one side's plane over the observed band.
  /// side 0 uses segment i's center, side 1 segment j's.
  double band_fit(int pair, int side, const Plane& y) const;
  static double combine_bdy1(BoundaryLabel o, double fit_i, double fit_j);
  double phi_bdy1(int pair, BoundaryLabel o, const Plane& yi, const Plane& yj) const;

  double phi_neg(int pair, int side, const Plane& y) const;
  double phi_occ(int pair, int front_side, const Plane& yi, const Plane& yj) const;
  double hinge_mean(int pair, const Plane& yi, const Plane& yj) const;
  double coplanar_mean(int pair, const Plane& yi, const Plane& yj) const;
  double combine_bdy2(BoundaryLabel o, double neg_i, double neg_j, double occ_i, double occ_j, double hinge,
                      double coplanar) const;
  double phi_bdy2(int pair, BoundaryLabel o, const Plane& yi, const Plane& yj) const;

  double phi_color(int pair, BoundaryLabel o) const;
  double chi2(int pair) const { return chi2_[pair]; }

  double phi_junction3(int k, std::span<const BoundaryLabel> labels) const;
  double phi_junction4(int k, std::span<const BoundaryLabel> labels) const;

  /// w_seg sum phi_seg + sum over pairs (w_bdy1 phi_bdy1 + w_bdy2 phi_bdy2 +
  /// w_col phi_color) + w_jct3 sum phi_junction3 + w_crs4 sum phi_junction4.
  /// Throws std::invalid_argument on incomplete assignments.
  double total_energy(std::span<const Plane> planes, std::span<const BoundaryLabel> labels) const;

  /// Convex hull vertices of a pair's band.
  std::span<const Pixel> band_hull(int pair) const { return hull_[pair]; }

 private:
  Segmentation seg_;
  DisparityImage obs_;
  ModelParams params_;
  std::vector<std::vector<Observation>> seg_obs_;
  std::vector<std::vector<Observation>> band_obs_;
  std::vector<std::vector<Pixel>> hull_;
  std::vector<Moments> band_moments_;
  std::vector<Moments> union_moments_;
  std::vector<double> chi2_;
};

/// Convex hull of integer points, counter-clockwise, collinear points dropped.
std::vector<Pixel> convex_hull(std::span<const Pixel> points);

}  // namespace cmrf
