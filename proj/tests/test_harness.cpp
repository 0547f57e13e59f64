#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <sstream>

#include "cmrf/harness.hpp"
#include "support.hpp"
#include "temp_dir.hpp"

namespace cmrf {
namespace {

GroundTruth constant_gt(int w, int h, float d) {
  GroundTruth gt{DisparityImage(w, h), std::vector<Visibility>(static_cast<std::size_t>(w) * h, Visibility::NonOccluded)};
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) gt.disparity.set(u, v, d);
  return gt;
}

DisparityImage constant(int w, int h, float d) {
  DisparityImage out(w, h);
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) out.set(u, v, d);
  return out;
}

TEST(ErrorRate, Examples) {
  const GroundTruth gt = constant_gt(10, 4, 20.0f);
  EXPECT_EQ(error_rate(gt.disparity, gt, 3.0, Scope::NonOccluded), 0.0);
  EXPECT_EQ(error_rate(constant(10, 4, 30.0f), gt, 3.0, Scope::All), 100.0);
  DisparityImage half = gt.disparity;
  for (int v = 0; v < 2; ++v)
    for (int u = 0; u < 10; ++u) half.set(u, v, 30.0f);
  EXPECT_EQ(error_rate(half, gt, 5.0, Scope::All), 50.0);
  EXPECT_EQ(error_rate(DisparityImage(10, 4), gt, 3.0, Scope::All), 100.0);
}

TEST(ErrorRate, ScopeAndErrors) {
  GroundTruth gt = constant_gt(4, 1, 10.0f);
  gt.mask[0] = Visibility::Occluded;
  DisparityImage est = gt.disparity;
  est.set(0, 0, 0.5f);
  EXPECT_EQ(error_rate(est, gt, 2.0, Scope::NonOccluded), 0.0);
  EXPECT_EQ(error_rate(est, gt, 2.0, Scope::All), 25.0);
  EXPECT_THROW(error_rate(DisparityImage(3, 1), gt, 2.0, Scope::All), std::invalid_argument);
  GroundTruth occluded = constant_gt(2, 1, 5.0f);
  occluded.mask.assign(2, Visibility::Occluded);
  EXPECT_THROW(error_rate(occluded.disparity, occluded, 2.0, Scope::NonOccluded), std::invalid_argument);
}

TEST(ErrorRate, NonIncreasingInThreshold) {
  std::mt19937_64 rng(3);
  const GroundTruth gt = constant_gt(30, 20, 15.0f);
  const DisparityImage est = testing::random_observations(rng, 30, 20, 0.9);
  const ErrorReport r = evaluate(est, gt, kMiddleburyThresholds);
  for (std::size_t k = 1; k < r.thresholds.size(); ++k) {
    EXPECT_LE(r.non_occluded[k], r.non_occluded[k - 1]);
    EXPECT_LE(r.all[k], r.all[k - 1]);
  }
}

TEST(Rms, Examples) {
  const DisparityImage gt = constant(2, 2, 8.0f);
  EXPECT_EQ(rms(gt, gt), 0.0);
  EXPECT_EQ(rms(constant(2, 2, 10.0f), gt), 2.0);
  DisparityImage one = gt;
  one.set(1, 1, 12.0f);
  EXPECT_EQ(rms(one, gt), 2.0);
  EXPECT_THROW(rms(gt, DisparityImage(2, 2)), std::invalid_argument);
}

TEST(BoundaryError, Examples) {
  using L = BoundaryLabel;
  const std::vector<L> a(20, L::Hinge);
  EXPECT_EQ(boundary_error(a, a), 0.0);
  EXPECT_EQ(boundary_error(a, std::vector<L>(20, L::Coplanar)), 100.0);
  std::vector<L> b = a;
  b[7] = L::LeftOccludes;
  EXPECT_EQ(boundary_error(b, a), 5.0);
  EXPECT_THROW(boundary_error(a, std::vector<L>(19, L::Hinge)), std::invalid_argument);
}

TEST(Report, FormatsEveryThreshold) {
  const GroundTruth gt = constant_gt(4, 4, 9.0f);
  ErrorReport r = evaluate(gt.disparity, gt);
  r.boundary_error = 2.5;
  r.runtime_seconds = 1.25;
  const std::string with = format_report(r, true), without = format_report(r, false);
  EXPECT_NE(with.find("noc_3 = 0"), std::string::npos);
  EXPECT_NE(with.find("boundary_error = 2.5"), std::string::npos);
  EXPECT_NE(with.find("runtime_seconds"), std::string::npos);
  EXPECT_EQ(without.find("runtime_seconds"), std::string::npos);
  EXPECT_EQ(r.noc_at(5.0), 0.0);
  EXPECT_THROW(r.noc_at(1.0), std::invalid_argument);
}

// Two planar regions split at column `edge`.
GroundTruth two_region_gt(int w, int h, int edge) {
  GroundTruth gt{DisparityImage(w, h), std::vector<Visibility>(static_cast<std::size_t>(w) * h, Visibility::NonOccluded)};
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) gt.disparity.set(u, v, u < edge ? static_cast<float>(10.0 + 0.1 * v) : 25.0f);
  return gt;
}

Segmentation split_at(int w, int h, int edge) {
  std::vector<int> labels(static_cast<std::size_t>(w) * h);
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) labels[v * w + u] = u >= edge;
  return make_segmentation(labels, w, h);
}

TEST(OracleFit, AlignedSegmentsAreExact) {
  const GroundTruth gt = two_region_gt(24, 12, 10);
  const OracleResult r = oracle_fit(gt, split_at(24, 12, 10), ModelParams{});
  for (double e : r.report.non_occluded) EXPECT_EQ(e, 0.0);
  for (double e : r.report.all) EXPECT_EQ(e, 0.0);
  EXPECT_LT(r.report.rms, 1e-4);
  EXPECT_EQ(r.labels, std::vector<BoundaryLabel>{BoundaryLabel::RightOccludes});
}

TEST(OracleFit, MisalignedSegmentLocalizesError) {
  const int w = 24, h = 12;
  const GroundTruth gt = two_region_gt(w, h, 10);
  const Segmentation seg = split_at(w, h, 13);
  const OracleResult r = oracle_fit(gt, seg, ModelParams{});
  EXPECT_GT(r.report.noc_at(3.0), 0.0);
  const DisparityImage dense = dense_disparity(seg, r.planes);
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) {
      const bool bad = std::abs(dense.at(u, v) - gt.disparity.at(u, v)) > 3.0f;
      if (u >= 13) EXPECT_FALSE(bad) << u << "," << v;
      if (bad) EXPECT_TRUE(u >= 10 && u < 13) << u << "," << v;
    }
}

TEST(DenseDisparity, ClampsNegative) {
  const Segmentation seg = split_at(6, 2, 3);
  const std::vector<Plane> planes = {{0, 0, -2}, {0, 0, 7}};
  const DisparityImage d = dense_disparity(seg, planes);
  EXPECT_EQ(d.valid_count(), d.size());
  EXPECT_EQ(d.at(0, 0), 0.0f);
  EXPECT_EQ(d.at(5, 1), 7.0f);
}

TEST(GtBoundaryLabels, MatchSceneGeometry) {
  SyntheticConfig cfg;
  cfg.width = 120;
  cfg.height = 90;
  cfg.n_planes = 2;
  cfg.seed = 4;
  const SyntheticScene scene = generate_synthetic(cfg);
  std::vector<int> labels(scene.region_map.begin(), scene.region_map.end());
  const Segmentation seg = make_segmentation(labels, cfg.width, cfg.height);
  const auto gl = gt_boundary_labels(seg, scene);
  ASSERT_EQ(gl.size(), seg.adjacency.size());
  for (std::size_t k = 0; k < gl.size(); ++k) EXPECT_NE(gl[k], BoundaryLabel::Coplanar);
}

TEST(LinearR2, Examples) {
  const std::vector<double> x = {1, 2, 3, 4}, line = {3, 5, 7, 9}, bent = {1, 0, 0, 1};
  EXPECT_NEAR(linear_r2(x, line), 1.0, 1e-12);
  EXPECT_NEAR(linear_r2(x, bent), 0.0, 1e-12);
  EXPECT_THROW(linear_r2(std::vector<double>{1}, std::vector<double>{1}), std::invalid_argument);
}

TEST(RunConfig, RoundTripAndUnknownKey) {
  RunConfig cfg;
  cfg.model.K = 4.5;
  cfg.model.w.bdy1 = 0.25;
  cfg.pcbp.n_particles = 7;
  cfg.pcbp.seed = 123456789;
  cfg.slic.n_target = 321;
  cfg.match.p2 = 77;
  TempDir dir;
  {
    std::ofstream out(dir / "p.cfg");
    out << format_run_config(cfg);
  }
  const RunConfig back = load_run_config(dir / "p.cfg");
  EXPECT_EQ(format_run_config(back), format_run_config(cfg));
  EXPECT_EQ(back.model.w.bdy1, 0.25);
  EXPECT_EQ(back.pcbp.seed, 123456789u);

  RunConfig other;
  EXPECT_THROW(apply_overrides(other, parse_key_values("no_such_key = 1")), std::runtime_error);
  EXPECT_THROW(apply_overrides(other, parse_key_values("K = banana")), std::runtime_error);
  EXPECT_THROW(apply_overrides(other, parse_key_values("lambda_hinge = 100")), std::runtime_error);
}

TEST(KeyValues, Parsing) {
  const KeyValues kv = parse_key_values("# comment\n  a = 1 \n\nb=two words\n");
  EXPECT_EQ(kv.at("a"), "1");
  EXPECT_EQ(kv.at("b"), "two words");
  EXPECT_THROW(parse_key_values("a = 1\na = 2\n"), std::runtime_error);
  EXPECT_THROW(parse_key_values("novalue\n"), std::runtime_error);
  EXPECT_EQ(format_double(0.1), "0.1");
}

TEST(ScalingStudy, SingleCountGivesOneRow) {
  SyntheticConfig sc;
  sc.width = 160;
  sc.height = 120;
  sc.seed = 2;
  const SyntheticScene scene = generate_synthetic(sc);
  ScalingStudyConfig cfg;
  cfg.counts = {50};
  cfg.repeats = 1;
  cfg.run.pcbp.n_outer_iters = 1;
  const auto rows = run_scaling_study(scene.left, scene.observations, scene.gt, cfg);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].target, 50);
  EXPECT_GT(rows[0].segments, 0);
  std::ostringstream out;
  write_scaling_table(out, rows);
  const std::string text = out.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 2);
}

TEST(Pipeline, OracleNoWorseThanPipelineOnSyntheticScenes) {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    SyntheticConfig sc;
    sc.seed = seed;
    sc.n_planes = 3;
    const SyntheticScene scene = generate_synthetic(sc);
    RunConfig run;
    run.slic.n_target = 100;
    const PipelineResult r = run_pipeline(scene.left, scene.observations, run);
    const OracleResult o = oracle_fit(scene.gt, r.segmentation, run.model);
    const ErrorReport pe = evaluate(r.dense, scene.gt);
    for (std::size_t k = 0; k < pe.thresholds.size(); ++k) EXPECT_LE(o.report.non_occluded[k], pe.non_occluded[k]);
  }
}

}  // namespace
}  // namespace cmrf
