#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "shapetrack/codebook.hpp"
#include "shapetrack/error.hpp"
#include "shapetrack/metrics.hpp"
#include "shapetrack/sequence.hpp"
#include "shapetrack/tracking.hpp"

using namespace shapetrack;
using namespace shapetrack::testing;

namespace {

const Sequence& small_sequence() {
  static const Sequence seq = [] {
    SceneConfig cfg;
    cfg.category = "camera";
    cfg.latent_raw = Eigen::Vector4d(1.0, 0.3, 0.0, -0.3);
    cfg.intrinsics = small_camera();
    cfg.waypoints = {{rotation_from_euler_deg(30, 20, 0), Vec3(0, 0, 0.8)},
                     {rotation_from_euler_deg(50, 25, 5), Vec3(0.04, 0.02, 0.82)}};
    cfg.frames = 21;
    cfg.depth_noise = 0.002;
    cfg.seed = 5;
    return generate_sequence(cfg);
  }();
  return seq;
}

const Codebook& codebook() {
  static const Codebook cb = [] {
    const ShapeBasis b = builtin_basis("camera");
    return build_codebook(b, canonical_latent(b), build_rotation_grid(30), RenderConfig{});
  }();
  return cb;
}

RunConfig fast_config() {
  RunConfig cfg;
  cfg.filter.particles = 30;
  cfg.filter.init_particles = 60;
  cfg.filter.init_cycles = 3;
  cfg.refine.steps = 20;
  cfg.refine.max_points = 300;
  cfg.chamfer_points = 200;
  cfg.record_timing = false;
  return cfg;
}

}  // namespace

TEST(RunConfig, Validation) {
  RunConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.chamfer_points = 0;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg = RunConfig{};
  cfg.refine.interval = 0;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
}

TEST(RefinementPoints, ErodesAndStrides) {
  const Sequence& seq = small_sequence();
  const SequenceFrame& f = seq.frames[0];
  RefineConfig cfg;
  cfg.max_points = 50;
  const PointCloud few = refinement_points(f.depth, f.detection.mask, seq.intrinsics, cfg);
  EXPECT_EQ(few.size(), 50u);
  cfg.max_points = 100000;
  const PointCloud all = refinement_points(f.depth, f.detection.mask, seq.intrinsics, cfg);
  EXPECT_EQ(all.size(), erode_mask(f.detection.mask, cfg.erosion_radius).count());
  EXPECT_LT(all.size(), f.detection.mask.count());
}

TEST(RunTracking, CategoryMismatch) {
  Sequence seq = small_sequence();
  seq.category = "mug";
  EXPECT_THROW(run_tracking(seq, codebook(), fast_config()), InvalidArgument);
}

TEST(RunTracking, RefinementSchedule) {
  RunConfig cfg = fast_config();
  cfg.refine.interval = 10;
  std::vector<int> seen;
  const TrackReport r = run_tracking(small_sequence(), codebook(), cfg, [&](const FrameEstimate& e) {
    seen.push_back(e.frame);
  });
  ASSERT_EQ(r.estimates.size(), 21u);
  EXPECT_EQ(seen.size(), 21u);
  for (const FrameEstimate& e : r.estimates) {
    EXPECT_EQ(e.refined, e.frame % 10 == 0) << e.frame;
    EXPECT_EQ(e.residual > 0.0, e.refined) << e.frame;
    EXPECT_EQ(e.ms, 0.0);
  }
}

TEST(RunTracking, RefinementOff) {
  RunConfig cfg = fast_config();
  cfg.refine_enabled = false;
  const TrackReport r = run_tracking(small_sequence(), codebook(), cfg);
  for (const FrameEstimate& e : r.estimates) {
    EXPECT_FALSE(e.refined);
    EXPECT_EQ(e.latent, canonical_latent(builtin_basis("camera")));
  }
}

TEST(RunTracking, TracksSmallScene) {
  // The 30 deg grid is too coarse to initialize reliably; use 15 deg and the default filter budget.
  const ShapeBasis b = builtin_basis("camera");
  const Codebook cb15 = build_codebook(b, canonical_latent(b), build_rotation_grid(15), RenderConfig{});
  RunConfig cfg = fast_config();
  cfg.filter = FilterConfig{};
  cfg.filter.init_particles = 200;
  const TrackReport r = run_tracking(small_sequence(), cb15, cfg);
  EXPECT_EQ(r.summary.frames, 21u);
  EXPECT_LT(r.summary.mean_terr_cm, 2.0);
  EXPECT_GE(r.summary.pct_iou25, 90.0);
  EXPECT_EQ(r.summary.lost_frames, 0u);
  EXPECT_EQ(r.rotation_error_mode, "full");
}

TEST(RunTracking, BitReproducible) {
  const TrackReport a = run_tracking(small_sequence(), codebook(), fast_config());
  const TrackReport b = run_tracking(small_sequence(), codebook(), fast_config());
  ASSERT_EQ(a.estimates.size(), b.estimates.size());
  for (std::size_t k = 0; k < a.estimates.size(); ++k) {
    EXPECT_EQ(a.estimates[k].pose.translation, b.estimates[k].pose.translation);
    EXPECT_EQ(a.estimates[k].pose.rotation.coeffs(), b.estimates[k].pose.rotation.coeffs());
    EXPECT_EQ(a.estimates[k].latent, b.estimates[k].latent);
    EXPECT_EQ(a.metrics[k].cd, b.metrics[k].cd);
  }
}

TEST(RunTracking, SingleFrameModeIsIsolatedInitialization) {
  RunConfig cfg = fast_config();
  cfg.single_frame = true;
  cfg.seed = 9;
  const Sequence& seq = small_sequence();
  const TrackReport r = run_tracking(seq, codebook(), cfg);

  const std::size_t k = 7;
  const SequenceFrame& f = seq.frames[k];
  FilterState state;
  const StepResult step =
      initialize_filter(state, f.detection, f.depth, seq.intrinsics, codebook(), cfg.filter, mix_seed(cfg.seed, k));
  const ShapeBasis basis = builtin_basis("camera");
  const AlternateResult alt = alternate(refinement_points(f.depth, f.detection.mask, seq.intrinsics, cfg.refine),
                                        step.estimate.pose, step.estimate.size, canonical_latent(basis), basis,
                                        cfg.refine);
  EXPECT_EQ(r.estimates[k].pose.translation, alt.pose.translation);
  EXPECT_EQ(r.estimates[k].pose.rotation.coeffs(), alt.pose.rotation.coeffs());
  EXPECT_EQ(r.estimates[k].latent, alt.latent);
}

TEST(EvaluateReport, PureAndConsistent) {
  TrackReport r = run_tracking(small_sequence(), codebook(), fast_config());
  const Summary before = r.summary;
  evaluate_report(r, ground_truth_of(small_sequence()), true, 200);
  EXPECT_EQ(r.summary.pct_5deg5cm, before.pct_5deg5cm);
  EXPECT_EQ(r.summary.mean_cd_e3, before.mean_cd_e3);
  EXPECT_EQ(r.summary.median_rerr_deg, before.median_rerr_deg);
  std::size_t ok = 0;
  for (const FrameMetrics& m : r.metrics) {
    ok += m.success_5deg5cm ? 1 : 0;
    EXPECT_EQ(m.success_5deg5cm, metric_5deg5cm(m.rerr_deg, m.terr_cm / 100.0));
    EXPECT_EQ(m.iou25, m.iou > 0.25);
    EXPECT_GE(m.cd, 0.0);
  }
  EXPECT_DOUBLE_EQ(r.summary.pct_5deg5cm, 100.0 * ok / r.metrics.size());
}

TEST(EvaluateReport, PerfectEstimatesScorePerfectly) {
  const Sequence& seq = small_sequence();
  TrackReport r;
  for (std::size_t k = 0; k < seq.frames.size(); ++k) {
    FrameEstimate e;
    e.frame = static_cast<int>(k);
    e.pose = seq.frames[k].pose;
    e.size = seq.frames[k].size;
    e.latent = seq.latent;
    r.estimates.push_back(e);
  }
  evaluate_report(r, ground_truth_of(seq));
  EXPECT_EQ(r.summary.pct_5deg5cm, 100.0);
  EXPECT_EQ(r.summary.pct_iou25, 100.0);
  EXPECT_NEAR(r.summary.mean_terr_cm, 0.0, 1e-12);
  EXPECT_LT(r.summary.mean_rerr_deg, 1e-5);
  EXPECT_EQ(r.summary.mean_cd_e3, 0.0);
  EXPECT_EQ(r.summary.mean_fps, 0.0);
}

TEST(EvaluateReport, SymmetricModeUsesBasisAxis) {
  SceneConfig cfg;
  cfg.category = "can";
  cfg.basis = ShapeBasis("can", {Primitive::cylinder(0.3, 0.4), Primitive::capsule(0.3, 0.3)}, Vec3::UnitZ());
  cfg.intrinsics = small_camera();
  cfg.waypoints = {{rotation_from_euler_deg(0, 20, 0), Vec3(0, 0, 0.8)}};
  cfg.frames = 1;
  const Sequence seq = generate_sequence(cfg);
  ASSERT_TRUE(seq.basis.symmetry_axis.has_value());
  TrackReport r;
  FrameEstimate e;
  e.pose = seq.frames[0].pose;
  e.pose.rotation = e.pose.rotation * Quat(Eigen::AngleAxisd(0.7, *seq.basis.symmetry_axis));
  e.size = seq.frames[0].size;
  e.latent = seq.latent;
  r.estimates = {e};
  evaluate_report(r, ground_truth_of(seq), true);
  EXPECT_EQ(r.rotation_error_mode, "symmetric");
  EXPECT_LT(r.metrics[0].rerr_deg, 1e-6);
  evaluate_report(r, ground_truth_of(seq), false);
  EXPECT_EQ(r.rotation_error_mode, "full");
  EXPECT_NEAR(r.metrics[0].rerr_deg, 0.7 * 180.0 / M_PI, 1e-6);
}

TEST(Summarize, Empty) {
  const Summary s = summarize({}, {});
  EXPECT_EQ(s.frames, 0u);
  EXPECT_EQ(s.pct_5deg5cm, 0.0);
}
