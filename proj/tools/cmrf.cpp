// Command-line front end: inference, evaluation, synthetic data and studies.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "cmrf/harness.hpp"
#include "cmrf/keyvalue.hpp"
#include "cmrf/matching.hpp"
#include "cmrf/params_io.hpp"
#include "cmrf/synthetic.hpp"

namespace {

using namespace cmrf;

GroundTruth load_ground_truth(const std::string& gt_path, const std::string& mask_path) {
  GroundTruth gt;
  gt.disparity = load_disparity(gt_path, disparity_format_for(gt_path));
  if (mask_path.empty()) {
    gt.mask.assign(gt.disparity.size(), Visibility::Unknown);
    for (std::size_t i = 0; i < gt.mask.size(); ++i)
      if (gt.disparity.valid(i)) gt.mask[i] = Visibility::NonOccluded;
  } else {
    int w = 0, h = 0;
    gt.mask = load_mask(mask_path, w, h);
    if (w != gt.disparity.width() || h != gt.disparity.height())
      throw IoError(IoErrorKind::FormatMismatch, "mask and ground truth sizes differ");
  }
  gt.check();
  return gt;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError(IoErrorKind::WriteFailed, path);
  out << text;
}

struct InferArgs {
  std::string left, right, obs, out, config, trace, report, gt, mask;
  int superpixels = -1, particles = -1, outer_iters = -1;
  long long seed = -1;
};

int run_infer(const InferArgs& a) {
  RunConfig cfg = a.config.empty() ? RunConfig{} : load_run_config(a.config);
  KeyValues overrides;
  if (a.superpixels >= 0) overrides["superpixels"] = std::to_string(a.superpixels);
  if (a.particles >= 0) overrides["particles"] = std::to_string(a.particles);
  if (a.outer_iters >= 0) overrides["outer_iters"] = std::to_string(a.outer_iters);
  if (a.seed >= 0) overrides["seed"] = std::to_string(a.seed);
  apply_overrides(cfg, overrides);

  const Image left = load_image(a.left);
  DisparityImage obs;
  if (!a.obs.empty()) {
    obs = passthrough(load_disparity(a.obs, disparity_format_for(a.obs)));
  } else {
    if (a.right.empty()) throw std::runtime_error("infer needs --right or --obs");
    obs = match(left, load_image(a.right), cfg.match);
  }
  const auto start = std::chrono::steady_clock::now();
  const PipelineResult r = run_pipeline(left, obs, cfg);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  save_disparity(r.dense, a.out, disparity_format_for(a.out));

  std::ostringstream rep;
  rep << "segments = " << r.segmentation.size() << "\npairs = " << r.segmentation.adjacency.size()
      << "\njunctions3 = " << r.segmentation.junctions3.size() << "\njunctions4 = " << r.segmentation.junctions4.size()
      << "\nobservations = " << obs.valid_count() << "\nenergy = " << format_double(r.solution.energy)
      << "\ninitial_energy = " << format_double(r.solution.energy_trace.front())
      << "\nbound = " << format_double(r.solution.bound) << '\n';
  std::map<std::string, int> counts;
  for (BoundaryLabel o : r.solution.labels) ++counts[to_string(o)];
  for (const char* name : {"co", "hi", "lo", "ro"}) rep << "labels_" << name << " = " << counts[name] << '\n';
  if (!a.gt.empty()) rep << format_report(evaluate(r.dense, load_ground_truth(a.gt, a.mask)), false);
  if (!a.report.empty()) write_text(a.report, rep.str());
  else std::cout << rep.str();
  if (!a.trace.empty()) {
    std::ofstream t(a.trace);
    if (!t) throw IoError(IoErrorKind::WriteFailed, a.trace);
    write_trace(t, r.solution, cfg.pcbp);
  }
  std::cerr << "inference " << r.inference_seconds << " s, total " << seconds << " s\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Slanted-plane stereo with occlusion boundary reasoning"};
  app.require_subcommand(1);

  InferArgs infer;
  auto* cmd_infer = app.add_subcommand("infer", "Estimate a dense disparity map");
  cmd_infer->add_option("--left", infer.left, "Reference image")->required();
  cmd_infer->add_option("--right", infer.right, "Second image, matched when --obs is absent");
  cmd_infer->add_option("--obs", infer.obs, "Precomputed sparse disparities (.png or .pfm)");
  cmd_infer->add_option("--out", infer.out, "Output disparity (.png or .pfm)")->required();
  cmd_infer->add_option("--superpixels", infer.superpixels, "SLIC target count");
  cmd_infer->add_option("--particles", infer.particles, "Particles per plane");
  cmd_infer->add_option("--outer-iters", infer.outer_iters, "Resampling iterations");
  cmd_infer->add_option("--config", infer.config, "key = value parameter file");
  cmd_infer->add_option("--seed", infer.seed, "Sampling seed");
  cmd_infer->add_option("--trace", infer.trace, "Solver trace output");
  cmd_infer->add_option("--report", infer.report, "Report output (stdout if absent)");
  cmd_infer->add_option("--gt", infer.gt, "Ground truth for metrics");
  cmd_infer->add_option("--mask", infer.mask, "Occlusion mask for --gt");

  std::string est_path, gt_path, mask_path;
  bool middlebury = false;
  auto* cmd_eval = app.add_subcommand("eval", "Score a disparity map against ground truth");
  cmd_eval->add_option("--est", est_path)->required();
  cmd_eval->add_option("--gt", gt_path)->required();
  cmd_eval->add_option("--mask", mask_path);
  cmd_eval->add_flag("--middlebury", middlebury, "Add the 1 px threshold");

  std::string out_dir;
  int n_scenes = 1, n_planes = 0, width = 320, height = 240;
  double noise_sigma = 0.0, interior_rate = 0.05;
  std::uint64_t seed = 0;
  auto* cmd_synth = app.add_subcommand("synth", "Write synthetic piecewise-planar scenes");
  cmd_synth->add_option("--out-dir", out_dir)->required();
  cmd_synth->add_option("--n-scenes", n_scenes);
  cmd_synth->add_option("--noise-sigma", noise_sigma);
  cmd_synth->add_option("--seed", seed);
  cmd_synth->add_option("--n-planes", n_planes, "Fixed plane count (default cycles 3..8)");
  cmd_synth->add_option("--width", width);
  cmd_synth->add_option("--height", height);
  cmd_synth->add_option("--interior-rate", interior_rate);

  NoiseStudyConfig noise = default_noise_study();
  std::string table_path, config_path;
  int superpixels = 100;
  auto* cmd_noise = app.add_subcommand("noise-study", "RMS and boundary error against observation noise");
  cmd_noise->add_option("--n-test", noise.n_test);
  cmd_noise->add_option("--n-train-like", noise.n_train_like);
  cmd_noise->add_option("--bdy1-grid", noise.bdy1_grid, "Candidate w_bdy1 values selected on train-like scenes");
  cmd_noise->add_option("--sigmas", noise.sigmas);
  cmd_noise->add_option("--seed", noise.seed);
  cmd_noise->add_option("--superpixels", superpixels);
  cmd_noise->add_option("--config", config_path);
  cmd_noise->add_option("--out", table_path, "CSV output (stdout if absent)");

  ScalingStudyConfig scaling;
  int scale_w = 1242, scale_h = 375;
  auto* cmd_scaling = app.add_subcommand("scaling-study", "Inference time against superpixel count");
  cmd_scaling->add_option("--counts", scaling.counts);
  cmd_scaling->add_option("--repeats", scaling.repeats);
  cmd_scaling->add_option("--width", scale_w);
  cmd_scaling->add_option("--height", scale_h);
  cmd_scaling->add_option("--seed", seed);
  cmd_scaling->add_option("--config", config_path);
  cmd_scaling->add_option("--out", table_path);

  std::string left_path, oracle_out;
  auto* cmd_oracle = app.add_subcommand("oracle", "Fit the model directly to ground truth");
  cmd_oracle->add_option("--gt", gt_path)->required();
  cmd_oracle->add_option("--left", left_path)->required();
  cmd_oracle->add_option("--mask", mask_path);
  cmd_oracle->add_option("--superpixels", superpixels);
  cmd_oracle->add_option("--config", config_path);
  cmd_oracle->add_option("--out", oracle_out, "Dense oracle disparity");

  auto* cmd_params = app.add_subcommand("params", "Print default parameters");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*cmd_infer) return run_infer(infer);
    if (*cmd_eval) {
      const GroundTruth gt = load_ground_truth(gt_path, mask_path);
      const DisparityImage est = load_disparity(est_path, disparity_format_for(est_path));
      std::cout << format_report(evaluate(est, gt, middlebury ? kMiddleburyThresholds : kKittiThresholds), false);
      return 0;
    }
    if (*cmd_synth) {
      for (int k = 0; k < n_scenes; ++k) {
        SyntheticConfig sc;
        sc.width = width;
        sc.height = height;
        sc.noise_sigma = noise_sigma;
        sc.interior_rate = interior_rate;
        sc.seed = seed + static_cast<std::uint64_t>(k);
        sc.n_planes = n_planes > 0 ? n_planes : 3 + k % 6;
        char name[32];
        std::snprintf(name, sizeof name, "scene_%03d", k);
        write_scene(generate_synthetic(sc), std::filesystem::path(out_dir) / name);
      }
      return 0;
    }
    if (*cmd_noise) {
      if (!config_path.empty()) noise.run = load_run_config(config_path);
      noise.run.slic.n_target = superpixels;
      const auto rows = run_noise_study(noise, &std::cerr);
      std::ostringstream csv;
      write_noise_table(csv, rows);
      if (table_path.empty()) std::cout << csv.str();
      else write_text(table_path, csv.str());
      return 0;
    }
    if (*cmd_scaling) {
      if (!config_path.empty()) scaling.run = load_run_config(config_path);
      SyntheticConfig sc;
      sc.width = scale_w;
      sc.height = scale_h;
      sc.n_planes = 8;
      sc.seed = seed;
      const SyntheticScene scene = generate_synthetic(sc);
      const auto rows = run_scaling_study(scene.left, scene.observations, scene.gt, scaling, &std::cerr);
      std::ostringstream csv;
      write_scaling_table(csv, rows);
      std::vector<double> x, y;
      for (const auto& r : rows) x.push_back(r.segments), y.push_back(r.inference_seconds);
      if (rows.size() >= 2) csv << "# r2 = " << format_double(linear_r2(x, y)) << '\n';
      if (table_path.empty()) std::cout << csv.str();
      else write_text(table_path, csv.str());
      return 0;
    }
    if (*cmd_oracle) {
      RunConfig cfg = config_path.empty() ? RunConfig{} : load_run_config(config_path);
      cfg.slic.n_target = superpixels;
      const GroundTruth gt = load_ground_truth(gt_path, mask_path);
      const Segmentation seg = slic(load_image(left_path), cfg.slic);
      const OracleResult r = oracle_fit(gt, seg, cfg.model);
      if (!oracle_out.empty()) {
        const DisparityImage dense = dense_disparity(seg, r.planes);
        save_disparity(dense, oracle_out, disparity_format_for(oracle_out));
      }
      std::cout << format_report(r.report, false);
      return 0;
    }
    if (*cmd_params) {
      std::cout << format_run_config(RunConfig{});
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
