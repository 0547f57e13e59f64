#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cmrf/inference.hpp"
#include "cmrf/params_io.hpp"
#include "cmrf/synthetic.hpp"

namespace cmrf {

enum class Scope { NonOccluded, All };

/// Percentage of GT-valid pixels in scope whose estimate is invalid or off by
/// more than `threshold`. Throws std::invalid_argument on size mismatch or an
/// empty denominator.
double error_rate(const DisparityImage& est, const GroundTruth& gt, double threshold, Scope scope);

/// Root mean squared difference over GT-valid pixels; invalid estimates count as 0.
double rms(const DisparityImage& est, const DisparityImage& gt);

/// Percentage of pairs whose label differs from the reference.
double boundary_error(std::span<const BoundaryLabel> labels, std::span<const BoundaryLabel> gt_labels);

inline const std::vector<double> kKittiThresholds = {2.0, 3.0, 4.0, 5.0};
inline const std::vector<double> kMiddleburyThresholds = {1.0, 2.0, 3.0, 4.0, 5.0};

struct ErrorReport {
  std::vector<double> thresholds;
  std::vector<double> non_occluded;  // percent, per threshold
  std::vector<double> all;           // percent, per threshold
  double rms = 0.0;
  std::optional<double> boundary_error;
  double runtime_seconds = 0.0;

  double noc_at(double threshold) const;
};

ErrorReport evaluate(const DisparityImage& est, const GroundTruth& gt,
                     const std::vector<double>& thresholds = kKittiThresholds);

/// `key = value` lines; runtime is left out when `with_runtime` is false.
std::string format_report(const ErrorReport& report, bool with_runtime);

/// Every pixel takes its segment's plane; negative values are clamped to 0.
DisparityImage dense_disparity(const Segmentation& segmentation, std::span<const Plane> planes);

/// Reference labels for segmentation pairs of a synthetic scene: each segment
/// takes its majority region (lowest id on ties); co when both map to the same
/// region, hi when the two region planes differ by at most 0.5 px in mean
/// absolute value over the band, otherwise the side with the larger mean
/// disparity is in front.
std::vector<BoundaryLabel> gt_boundary_labels(const Segmentation& segmentation, const SyntheticScene& scene);

struct OracleResult {
  std::vector<Plane> planes;
  std::vector<BoundaryLabel> labels;
  ErrorReport report;
};

/// Planes fitted to GT disparities with the initial-fit procedure, each label
/// minimizing phi_bdy2 for those planes (lowest label on ties).
OracleResult oracle_fit(const GroundTruth& gt, const Segmentation& segmentation, const ModelParams& params);

struct PipelineResult {
  Segmentation segmentation;
  std::vector<Plane> initial;
  Solution solution;
  DisparityImage dense;
  DisparityImage initial_dense;
  double inference_seconds = 0.0;  // pcbp only
};

/// SLIC on `left`, initial fit and PCBP against `obs`.
PipelineResult run_pipeline(const Image& left, const DisparityImage& obs, const RunConfig& cfg);

struct NoiseStudyConfig {
  std::vector<double> sigmas = {0.0, 1.0, 2.0, 3.0, 5.0};
  int n_train_like = 10;
  int n_test = 90;
  /// Candidate w_bdy1 values; per sigma, the one with the lowest train-like
  /// boundary error (then RMS, then grid order) is used on the test scenes.
  std::vector<double> bdy1_grid = {1.0, 0.5, 0.25};
  SyntheticConfig scene;  // n_planes, noise_sigma and seed are set per scene
  RunConfig run;
  std::uint64_t seed = 1000;
};

NoiseStudyConfig default_noise_study();

struct NoiseRow {
  double sigma = 0.0;
  double rms = 0.0;             // test-scene mean
  double boundary_error = 0.0;  // test-scene mean, percent
  double initial_rms = 0.0;
  double oracle_rms = 0.0;
  double w_bdy1 = 1.0;  // selected on the train-like scenes
  double train_like_rms = 0.0;
  double train_like_boundary_error = 0.0;
  double seconds = 0.0;  // wall time of the row
};

/// Scene k uses seed + k and 3 + k % 6 planes at every sigma, so rows differ
/// only in the noise scale. Scenes 0..n_train_like-1 select w_bdy1; the rest
/// are scored.
std::vector<NoiseRow> run_noise_study(const NoiseStudyConfig& cfg, std::ostream* progress = nullptr);
void write_noise_table(std::ostream& out, const std::vector<NoiseRow>& rows);

struct ScalingStudyConfig {
  std::vector<int> counts = {100, 300, 600, 1200};
  int repeats = 3;  // inference time is the minimum over repeats
  RunConfig run;
};

struct ScalingRow {
  int target = 0;
  int segments = 0;
  int pairs = 0;
  double inference_seconds = 0.0;
  double total_seconds = 0.0;  // segmentation, fit and inference of the first repeat
  ErrorReport report;
};

std::vector<ScalingRow> run_scaling_study(const Image& image, const DisparityImage& obs, const GroundTruth& gt,
                                          const ScalingStudyConfig& cfg, std::ostream* progress = nullptr);
void write_scaling_table(std::ostream& out, const std::vector<ScalingRow>& rows);

/// Least-squares line through (x, y); returns R^2.
double linear_r2(std::span<const double> x, std::span<const double> y);

struct BaselineRow {
  std::uint64_t seed = 0;
  double oracle = 0.0;  // non-occluded error at the threshold, percent
  double pipeline = 0.0;
  double initial = 0.0;
};

/// Oracle, pipeline and initial-fit error at one threshold on synthetic scenes seeded seed0, seed0+1, ...
std::vector<BaselineRow> run_baseline_study(const SyntheticConfig& scene, const RunConfig& run, int n_scenes,
                                            std::uint64_t seed0, double threshold);

}  // namespace cmrf
