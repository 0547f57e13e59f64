#include "cmrf/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "cmrf/keyvalue.hpp"

namespace cmrf {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string threshold_key(double t) {
  std::string s = format_double(t);
  std::replace(s.begin(), s.end(), '.', 'p');
  return s;
}

}  // namespace

double error_rate(const DisparityImage& est, const GroundTruth& gt, double threshold, Scope scope) {
  const DisparityImage& g = gt.disparity;
  if (est.width() != g.width() || est.height() != g.height() || gt.mask.size() != g.size())
    throw std::invalid_argument("error_rate: size mismatch");
  std::size_t total = 0, bad = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!g.valid(i)) continue;
    if (scope == Scope::NonOccluded && gt.mask[i] != Visibility::NonOccluded) continue;
    ++total;
    if (!est.valid(i) || std::abs(static_cast<double>(est.at(i)) - g.at(i)) > threshold) ++bad;
  }
  if (total == 0) throw std::invalid_argument("error_rate: no ground-truth pixels in scope");
  return 100.0 * static_cast<double>(bad) / static_cast<double>(total);
}

double rms(const DisparityImage& est, const DisparityImage& gt) {
  if (est.width() != gt.width() || est.height() != gt.height()) throw std::invalid_argument("rms: size mismatch");
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (!gt.valid(i)) continue;
    const double d = (est.valid(i) ? static_cast<double>(est.at(i)) : 0.0) - gt.at(i);
    sum += d * d;
    ++n;
  }
  if (n == 0) throw std::invalid_argument("rms: no valid ground-truth pixels");
  return std::sqrt(sum / static_cast<double>(n));
}

double boundary_error(std::span<const BoundaryLabel> labels, std::span<const BoundaryLabel> gt_labels) {
  if (labels.size() != gt_labels.size()) throw std::invalid_argument("boundary_error: pair sets differ");
  if (labels.empty()) return 0.0;
  std::size_t wrong = 0;
  for (std::size_t k = 0; k < labels.size(); ++k) wrong += labels[k] != gt_labels[k];
  return 100.0 * static_cast<double>(wrong) / static_cast<double>(labels.size());
}

double ErrorReport::noc_at(double threshold) const {
  for (std::size_t k = 0; k < thresholds.size(); ++k)
    if (thresholds[k] == threshold) return non_occluded[k];
  throw std::invalid_argument("ErrorReport: threshold not evaluated");
}

ErrorReport evaluate(const DisparityImage& est, const GroundTruth& gt, const std::vector<double>& thresholds) {
  ErrorReport r;
  r.thresholds = thresholds;
  for (double t : thresholds) {
    r.non_occluded.push_back(error_rate(est, gt, t, Scope::NonOccluded));
    r.all.push_back(error_rate(est, gt, t, Scope::All));
  }
  r.rms = rms(est, gt.disparity);
  return r;
}

std::string format_report(const ErrorReport& r, bool with_runtime) {
  std::ostringstream out;
  for (std::size_t k = 0; k < r.thresholds.size(); ++k) {
    out << "noc_" << threshold_key(r.thresholds[k]) << " = " << format_double(r.non_occluded[k]) << '\n';
    out << "all_" << threshold_key(r.thresholds[k]) << " = " << format_double(r.all[k]) << '\n';
  }
  out << "rms = " << format_double(r.rms) << '\n';
  if (r.boundary_error) out << "boundary_error = " << format_double(*r.boundary_error) << '\n';
  if (with_runtime) out << "runtime_seconds = " << format_double(r.runtime_seconds) << '\n';
  return out.str();
}

DisparityImage dense_disparity(const Segmentation& seg, std::span<const Plane> planes) {
  if (planes.size() != seg.size()) throw std::invalid_argument("dense_disparity: one plane per segment");
  DisparityImage out(seg.width, seg.height);
  for (const Segment& s : seg.segments)
    for (const Pixel& p : s.pixels) {
      const double d = plane_disparity(planes[s.id], p, s.cx, s.cy);
      out.set(p.u, p.v, static_cast<float>(std::isfinite(d) ? std::max(0.0, d) : 0.0));
    }
  return out;
}

std::vector<BoundaryLabel> gt_boundary_labels(const Segmentation& seg, const SyntheticScene& scene) {
  if (seg.width != scene.config.width || seg.height != scene.config.height)
    throw std::invalid_argument("gt_boundary_labels: size mismatch");
  std::vector<int> majority(seg.size());
  for (const Segment& s : seg.segments) {
    std::map<int, int> count;
    for (const Pixel& p : s.pixels) ++count[scene.region(p.u, p.v)];
    int best = -1, best_n = -1;
    for (const auto& [r, n] : count)
      if (n > best_n) best = r, best_n = n;
    majority[s.id] = best;
  }
  std::vector<BoundaryLabel> labels;
  for (const NeighborPair& p : seg.adjacency) {
    const int ri = majority[p.i], rj = majority[p.j];
    if (ri == rj) {
      labels.push_back(BoundaryLabel::Coplanar);
      continue;
    }
    double abs_sum = 0.0, sum = 0.0;
    for (const Pixel& q : p.band) {
      const double d = plane_disparity(scene.planes[ri], q, 0, 0) - plane_disparity(scene.planes[rj], q, 0, 0);
      abs_sum += std::abs(d);
      sum += d;
    }
    const double n = static_cast<double>(p.band.size());
    if (abs_sum / n <= 0.5)
      labels.push_back(BoundaryLabel::Hinge);
    else
      labels.push_back(sum > 0.0 ? BoundaryLabel::LeftOccludes : BoundaryLabel::RightOccludes);
  }
  return labels;
}

OracleResult oracle_fit(const GroundTruth& gt, const Segmentation& seg, const ModelParams& params) {
  OracleResult r;
  r.planes = fit_initial_planes(seg, gt.disparity, params.K);
  const StereoModel model(seg, gt.disparity, params);
  for (std::size_t k = 0; k < seg.adjacency.size(); ++k) {
    const Plane& yi = r.planes[seg.adjacency[k].i];
    const Plane& yj = r.planes[seg.adjacency[k].j];
    BoundaryLabel best = BoundaryLabel::Coplanar;
    double best_e = model.phi_bdy2(static_cast<int>(k), best, yi, yj);
    for (int o = 1; o < kBoundaryStates; ++o) {
      const double e = model.phi_bdy2(static_cast<int>(k), BoundaryLabel(o), yi, yj);
      if (e < best_e) best_e = e, best = BoundaryLabel(o);
    }
    r.labels.push_back(best);
  }
  r.report = evaluate(dense_disparity(seg, r.planes), gt);
  return r;
}

PipelineResult run_pipeline(const Image& left, const DisparityImage& obs, const RunConfig& cfg) {
  PipelineResult r;
  r.segmentation = slic(left, cfg.slic);
  const StereoModel model(r.segmentation, obs, cfg.model);
  r.initial = fit_initial_planes(model.segmentation(), model.observations(), cfg.model.K);
  const auto start = Clock::now();
  r.solution = pcbp(model, cfg.pcbp, r.initial);
  r.inference_seconds = seconds_since(start);
  r.dense = dense_disparity(r.segmentation, r.solution.planes);
  r.initial_dense = dense_disparity(r.segmentation, r.initial);
  return r;
}

NoiseStudyConfig default_noise_study() {
  NoiseStudyConfig cfg;
  cfg.run.slic.n_target = 100;
  return cfg;
}

namespace {

struct SceneScore {
  double rms = 0.0;
  double boundary_error = 0.0;
  double initial_rms = 0.0;
  double oracle_rms = 0.0;
};

SyntheticScene noise_scene(const NoiseStudyConfig& cfg, double sigma, int k) {
  SyntheticConfig sc = cfg.scene;
  sc.seed = cfg.seed + static_cast<std::uint64_t>(k);
  sc.n_planes = 3 + k % 6;
  sc.noise_sigma = sigma;
  return generate_synthetic(sc);
}

SceneScore score_scene(const SyntheticScene& scene, const RunConfig& run, bool baselines) {
  const PipelineResult r = run_pipeline(scene.left, passthrough(scene.observations), run);
  SceneScore s;
  s.rms = rms(r.dense, scene.gt.disparity);
  s.boundary_error = boundary_error(r.solution.labels, gt_boundary_labels(r.segmentation, scene));
  if (baselines) {
    s.initial_rms = rms(r.initial_dense, scene.gt.disparity);
    s.oracle_rms = oracle_fit(scene.gt, r.segmentation, run.model).report.rms;
  }
  return s;
}

}  // namespace

std::vector<NoiseRow> run_noise_study(const NoiseStudyConfig& cfg, std::ostream* progress) {
  if (cfg.n_test < 1 || cfg.n_train_like < 0) throw std::invalid_argument("noise study: need at least one test scene");
  std::vector<NoiseRow> rows;
  for (double sigma : cfg.sigmas) {
    NoiseRow row;
    row.sigma = sigma;
    const auto start = Clock::now();

    RunConfig run = cfg.run;
    row.w_bdy1 = run.model.w.bdy1;
    if (cfg.n_train_like > 0) {
      std::vector<SyntheticScene> train;
      for (int k = 0; k < cfg.n_train_like; ++k) train.push_back(noise_scene(cfg, sigma, k));
      const std::vector<double> grid = cfg.bdy1_grid.empty() ? std::vector<double>{run.model.w.bdy1} : cfg.bdy1_grid;
      bool first = true;
      for (double w : grid) {
        RunConfig candidate = cfg.run;
        candidate.model.w.bdy1 = w;
        double e = 0.0, b = 0.0;
        for (const SyntheticScene& scene : train) {
          const SceneScore s = score_scene(scene, candidate, false);
          e += s.rms / cfg.n_train_like;
          b += s.boundary_error / cfg.n_train_like;
        }
        if (first || std::pair(b, e) < std::pair(row.train_like_boundary_error, row.train_like_rms)) {
          row.w_bdy1 = w;
          row.train_like_rms = e;
          row.train_like_boundary_error = b;
          run = candidate;
          first = false;
        }
      }
    }

    for (int k = cfg.n_train_like; k < cfg.n_train_like + cfg.n_test; ++k) {
      const SceneScore s = score_scene(noise_scene(cfg, sigma, k), run, true);
      row.rms += s.rms / cfg.n_test;
      row.boundary_error += s.boundary_error / cfg.n_test;
      row.initial_rms += s.initial_rms / cfg.n_test;
      row.oracle_rms += s.oracle_rms / cfg.n_test;
    }
    row.seconds = seconds_since(start);
    if (progress)
      *progress << "sigma " << sigma << ": w_bdy1 " << row.w_bdy1 << " rms " << row.rms << " boundary "
                << row.boundary_error << "% (" << row.seconds << " s)" << std::endl;
    rows.push_back(row);
  }
  return rows;
}

void write_noise_table(std::ostream& out, const std::vector<NoiseRow>& rows) {
  out << "sigma,rms,boundary_error,initial_rms,oracle_rms,w_bdy1,train_like_rms,train_like_boundary_error,seconds\n";
  for (const NoiseRow& r : rows)
    out << format_double(r.sigma) << ',' << format_double(r.rms) << ',' << format_double(r.boundary_error) << ','
        << format_double(r.initial_rms) << ',' << format_double(r.oracle_rms) << ',' << format_double(r.w_bdy1) << ','
        << format_double(r.train_like_rms)
        << ',' << format_double(r.train_like_boundary_error) << ',' << format_double(r.seconds) << '\n';
}

std::vector<ScalingRow> run_scaling_study(const Image& image, const DisparityImage& obs, const GroundTruth& gt,
                                          const ScalingStudyConfig& cfg, std::ostream* progress) {
  if (cfg.repeats < 1) throw std::invalid_argument("scaling study: repeats must be >= 1");
  if (!std::is_sorted(cfg.counts.begin(), cfg.counts.end())) throw std::invalid_argument("scaling study: counts must ascend");
  std::vector<ScalingRow> rows;
  for (int count : cfg.counts) {
    RunConfig run = cfg.run;
    run.slic.n_target = count;
    ScalingRow row;
    row.target = count;
    const auto start = Clock::now();
    const PipelineResult first = run_pipeline(image, obs, run);
    row.total_seconds = seconds_since(start);
    row.inference_seconds = first.inference_seconds;
    const StereoModel model(first.segmentation, obs, run.model);
    for (int k = 1; k < cfg.repeats; ++k) {
      const auto t0 = Clock::now();
      const Solution s = pcbp(model, run.pcbp, first.initial);
      row.inference_seconds = std::min(row.inference_seconds, seconds_since(t0));
    }
    row.segments = static_cast<int>(first.segmentation.size());
    row.pairs = static_cast<int>(first.segmentation.adjacency.size());
    row.report = evaluate(first.dense, gt);
    row.report.runtime_seconds = row.inference_seconds;
    if (progress)
      *progress << "superpixels " << count << " (" << row.segments << " segments, " << row.pairs
                << " pairs): inference " << row.inference_seconds << " s" << std::endl;
    rows.push_back(row);
  }
  return rows;
}

void write_scaling_table(std::ostream& out, const std::vector<ScalingRow>& rows) {
  out << "superpixels,segments,pairs,inference_seconds,total_seconds,rms";
  if (!rows.empty())
    for (double t : rows.front().report.thresholds) out << ",noc_" << threshold_key(t) << ",all_" << threshold_key(t);
  out << '\n';
  for (const ScalingRow& r : rows) {
    out << r.target << ',' << r.segments << ',' << r.pairs << ',' << format_double(r.inference_seconds) << ','
        << format_double(r.total_seconds) << ',' << format_double(r.report.rms);
    for (std::size_t k = 0; k < r.report.thresholds.size(); ++k)
      out << ',' << format_double(r.report.non_occluded[k]) << ',' << format_double(r.report.all[k]);
    out << '\n';
  }
}

double linear_r2(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("linear_r2: need two or more points");
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t k = 0; k < x.size(); ++k) mx += x[k], my += y[k];
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    sxy += (x[k] - mx) * (y[k] - my);
    syy += (y[k] - my) * (y[k] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return syy == 0.0 ? 1.0 : 0.0;
  return sxy * sxy / (sxx * syy);
}

std::vector<BaselineRow> run_baseline_study(const SyntheticConfig& scene_cfg, const RunConfig& run, int n_scenes,
                                            std::uint64_t seed0, double threshold) {
  std::vector<BaselineRow> rows;
  for (int k = 0; k < n_scenes; ++k) {
    SyntheticConfig sc = scene_cfg;
    sc.seed = seed0 + static_cast<std::uint64_t>(k);
    const SyntheticScene scene = generate_synthetic(sc);
    const PipelineResult r = run_pipeline(scene.left, passthrough(scene.observations), run);
    const OracleResult oracle = oracle_fit(scene.gt, r.segmentation, run.model);
    BaselineRow row;
    row.seed = sc.seed;
    row.oracle = oracle.report.noc_at(threshold);
    row.pipeline = error_rate(r.dense, scene.gt, threshold, Scope::NonOccluded);
    row.initial = error_rate(r.initial_dense, scene.gt, threshold, Scope::NonOccluded);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace cmrf
