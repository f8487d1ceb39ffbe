#include <gtest/gtest.h>

#include <filesystem>

#include "fixtures.hpp"
#include "shapetrack/error.hpp"
#include "shapetrack/sequence.hpp"

using namespace shapetrack;
using namespace shapetrack::testing;
namespace fs = std::filesystem;

namespace {

SceneConfig small_scene(int frames = 12) {
  SceneConfig cfg;
  cfg.category = "camera";
  cfg.latent_raw = Eigen::Vector4d(1.0, 0.3, 0.0, -0.3);
  cfg.size = 0.25;
  cfg.intrinsics = small_camera();
  cfg.waypoints = {{rotation_from_euler_deg(30, 20, 0), Vec3(0, 0, 0.8)},
                   {rotation_from_euler_deg(60, 30, 10), Vec3(0.05, 0.02, 0.85)}};
  cfg.translation_jitter = 0.001;
  cfg.rotation_jitter_deg = 0.3;
  cfg.frames = frames;
  cfg.seed = 3;
  return cfg;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "shapetrack_test_sequence" / name;
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST(WaypointPose, Interpolates) {
  const std::vector<Waypoint> w = {{Quat::Identity(), Vec3(0, 0, 1)},
                                   {Quat(Eigen::AngleAxisd(M_PI / 2, Vec3::UnitZ())), Vec3(0.2, 0, 1)}};
  const Pose first = waypoint_pose(w, 0, 11);
  const Pose mid = waypoint_pose(w, 5, 11);
  const Pose last = waypoint_pose(w, 10, 11);
  EXPECT_LT((first.translation - Vec3(0, 0, 1)).norm(), 1e-15);
  EXPECT_LT((mid.translation - Vec3(0.1, 0, 1)).norm(), 1e-15);
  EXPECT_LT((last.translation - Vec3(0.2, 0, 1)).norm(), 1e-15);
  EXPECT_NEAR(rotation_error_deg(mid.rotation, Quat::Identity()), 45.0, 1e-9);
  EXPECT_NEAR(rotation_error_deg(last.rotation, w[1].rotation), 0.0, 1e-6);
  EXPECT_THROW(waypoint_pose({}, 0, 1), InvalidArgument);
}

TEST(SceneConfig, Validation) {
  SceneConfig cfg = small_scene();
  EXPECT_NO_THROW(cfg.validate());
  cfg.frames = 0;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg = small_scene();
  cfg.depth_noise = -0.001;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg = small_scene();
  cfg.waypoints.clear();
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg = small_scene();
  cfg.latent_raw = Eigen::Vector2d(1, 2);
  EXPECT_THROW(cfg.validate(), InvalidArgument);
}

TEST(GenerateSequence, FrameCountAndContinuity) {
  const SceneConfig cfg = small_scene();
  const Sequence seq = generate_sequence(cfg);
  ASSERT_EQ(seq.frames.size(), 12u);
  // Waypoints are ~34 degrees apart over 11 steps; jitter adds a little.
  for (std::size_t k = 1; k < seq.frames.size(); ++k) {
    EXPECT_LT(rotation_error_deg(seq.frames[k].pose.rotation, seq.frames[k - 1].pose.rotation), 6.0);
    EXPECT_LT((seq.frames[k].pose.translation - seq.frames[k - 1].pose.translation).norm(), 0.02);
  }
  EXPECT_EQ(seq.category, "camera");
  EXPECT_EQ(seq.latent.raw(), cfg.latent_raw);
}

TEST(GenerateSequence, NoiselessPointsLieOnSurface) {
  const Sequence seq = generate_sequence(small_scene(4));
  for (const SequenceFrame& f : seq.frames) {
    const PointCloud cam = backproject(f.depth, f.detection.mask, seq.intrinsics);
    ASSERT_GT(cam.size(), 100u);
    const PointCloud obj = normalize_points(cam, f.pose, f.size);
    for (const Vec3& p : obj.points) EXPECT_LT(std::abs(sdf_eval(seq.basis, seq.latent, p)), 1e-3);
  }
}

TEST(GenerateSequence, DetectionIsTightMask) {
  const Sequence seq = generate_sequence(small_scene(3));
  for (const SequenceFrame& f : seq.frames) {
    EXPECT_EQ(f.detection.bbox, mask_bbox(f.detection.mask));
    for (int v = 0; v < f.depth.height; ++v)
      for (int u = 0; u < f.depth.width; ++u) EXPECT_EQ(f.detection.mask.at(u, v), f.depth.at(u, v) > 0.0f);
  }
}

TEST(GenerateSequence, DeterministicInSeed) {
  SceneConfig cfg = small_scene(3);
  cfg.depth_noise = 0.002;
  const Sequence a = generate_sequence(cfg);
  const Sequence b = generate_sequence(cfg);
  for (std::size_t k = 0; k < a.frames.size(); ++k) {
    EXPECT_EQ(a.frames[k].depth, b.frames[k].depth);
    EXPECT_EQ(a.frames[k].detection.mask, b.frames[k].detection.mask);
    EXPECT_EQ(a.frames[k].pose.translation, b.frames[k].pose.translation);
  }
  cfg.seed = 4;
  const Sequence c = generate_sequence(cfg);
  EXPECT_NE(a.frames[1].depth, c.frames[1].depth);
}

TEST(GenerateSequence, NoiseOnlyTouchesValidPixels) {
  SceneConfig cfg = small_scene(1);
  const Sequence clean = generate_sequence(cfg);
  cfg.depth_noise = 0.002;
  const Sequence noisy = generate_sequence(cfg);
  const DepthImage& a = clean.frames[0].depth;
  const DepthImage& b = noisy.frames[0].depth;
  double sq = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    EXPECT_EQ(a.data[i] == 0.0f, b.data[i] == 0.0f);
    if (a.data[i] > 0.0f) {
      sq += std::pow(b.data[i] - a.data[i], 2);
      ++n;
    }
  }
  EXPECT_NEAR(std::sqrt(sq / n), 0.002, 0.0003);
}

TEST(GenerateSequence, OccluderZeroesCorner) {
  SceneConfig cfg = small_scene(1);
  const Sequence clean = generate_sequence(cfg);
  cfg.occluder = OccluderSpec{0.25};
  const Sequence occ = generate_sequence(cfg);
  const BBox full = clean.frames[0].detection.bbox;
  const Mask& m = occ.frames[0].detection.mask;
  EXPECT_FALSE(m.at(full.u_max, full.v_max));
  EXPECT_EQ(occ.frames[0].depth.at(full.u_max, full.v_max), 0.0f);
  EXPECT_LT(m.count(), clean.frames[0].detection.mask.count());
  EXPECT_EQ(occ.frames[0].detection.bbox, mask_bbox(m));
}

TEST(GenerateSequence, LeavingFrustumNamesFrame) {
  SceneConfig cfg = small_scene(5);
  cfg.waypoints = {{Quat::Identity(), Vec3(0, 0, 0.8)}, {Quat::Identity(), Vec3(1.0, 0, 0.8)}};
  cfg.translation_jitter = 0.0;
  try {
    generate_sequence(cfg);
    FAIL() << "expected GenerationError";
  } catch (const GenerationError& e) {
    EXPECT_NE(std::string(e.what()).find("frame 1"), std::string::npos) << e.what();
  }
}

TEST(SequenceIo, RoundTripRaw) {
  SceneConfig cfg = small_scene(3);
  cfg.depth_noise = 0.002;
  const Sequence seq = generate_sequence(cfg);
  const fs::path dir = scratch("raw");
  save_sequence(dir, seq, DepthFormat::Raw);
  EXPECT_TRUE(fs::exists(dir / "depth" / "000002.f32"));
  EXPECT_TRUE(fs::exists(dir / "mask" / "000000.png"));
  const Sequence r = load_sequence(dir);
  ASSERT_EQ(r.frames.size(), seq.frames.size());
  EXPECT_EQ(r.category, seq.category);
  EXPECT_EQ(r.latent, seq.latent);
  for (std::size_t k = 0; k < seq.frames.size(); ++k) {
    EXPECT_EQ(r.frames[k].depth, seq.frames[k].depth);
    EXPECT_EQ(r.frames[k].detection.mask, seq.frames[k].detection.mask);
    EXPECT_EQ(r.frames[k].detection.bbox, seq.frames[k].detection.bbox);
    EXPECT_EQ(r.frames[k].pose.translation, seq.frames[k].pose.translation);
    EXPECT_EQ(r.frames[k].pose.rotation.coeffs(), seq.frames[k].pose.rotation.coeffs());
    EXPECT_EQ(r.frames[k].size, seq.frames[k].size);
  }
  const GroundTruth gt = load_ground_truth(dir);
  ASSERT_EQ(gt.frames.size(), 3u);
  EXPECT_EQ(gt.frames[1].pose.translation, seq.frames[1].pose.translation);
  EXPECT_EQ(gt.basis.size(), seq.basis.size());
}

TEST(SequenceIo, RoundTripPng16) {
  const Sequence seq = generate_sequence(small_scene(2));
  const fs::path dir = scratch("png");
  save_sequence(dir, seq, DepthFormat::Png16);
  EXPECT_TRUE(fs::exists(dir / "depth" / "000001.png"));
  const Sequence r = load_sequence(dir);
  for (std::size_t k = 0; k < seq.frames.size(); ++k) {
    const auto& a = seq.frames[k].depth.data;
    const auto& b = r.frames[k].depth.data;
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 0.0005 + 1e-6);
  }
}

TEST(SequenceIo, MissingDirectoryIsIoError) {
  EXPECT_THROW(load_sequence(scratch("nothing")), IoError);
  EXPECT_THROW(load_ground_truth(scratch("nothing")), IoError);
}

TEST(GroundTruth, OfSequence) {
  const Sequence seq = generate_sequence(small_scene(2));
  const GroundTruth gt = ground_truth_of(seq);
  EXPECT_EQ(gt.category, seq.category);
  ASSERT_EQ(gt.frames.size(), 2u);
  EXPECT_EQ(gt.frames[1].size, seq.frames[1].size);
}
