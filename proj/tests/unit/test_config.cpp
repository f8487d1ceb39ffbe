#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "shapetrack/config.hpp"
#include "shapetrack/error.hpp"

using namespace shapetrack;
using nlohmann::json;

#ifndef SHAPETRACK_CONFIGS
#define SHAPETRACK_CONFIGS "configs"
#endif

TEST(ConfigJson, PoseRoundTrip) {
  const Pose p(rotation_from_euler_deg(10, 20, 30), Vec3(0.1, -0.2, 0.9));
  const Pose q = pose_from_json(pose_to_json(p));
  EXPECT_LT(p.rotation.angularDistance(q.rotation), 1e-12);
  EXPECT_EQ(p.translation, q.translation);
}

TEST(ConfigJson, QuaternionOrderIsXyzw) {
  const Quat q = quat_from_json(json::array({0.0, 0.0, 1.0, 0.0}));
  EXPECT_DOUBLE_EQ(q.z(), 1.0);
  EXPECT_DOUBLE_EQ(q.w(), 0.0);
  EXPECT_THROW(quat_from_json(json::array({0, 0, 0, 0})), InvalidArgument);
  EXPECT_THROW(quat_from_json(json::array({1, 0, 0})), InvalidArgument);
}

TEST(ConfigJson, IntrinsicsRoundTrip) {
  CameraIntrinsics i;
  i.fx = 400;
  i.fy = 410;
  i.cx = 100.5;
  i.cy = 80.5;
  i.width = 202;
  i.height = 162;
  const CameraIntrinsics k = intrinsics_from_json(intrinsics_to_json(i));
  EXPECT_EQ(k.fx, i.fx);
  EXPECT_EQ(k.fy, i.fy);
  EXPECT_EQ(k.cx, i.cx);
  EXPECT_EQ(k.cy, i.cy);
  EXPECT_EQ(k.width, i.width);
  EXPECT_EQ(k.height, i.height);
  EXPECT_THROW(intrinsics_from_json(json{{"fx", -1}}), InvalidArgument);
}

TEST(ConfigJson, FilterRoundTrip) {
  FilterConfig c;
  c.particles = 77;
  c.sigma_phi = 0.03;
  c.translation_noise = Vec3(0.001, 0.002, 0.003);
  c.viewpoint_correction = false;
  c.rotation_prior = RotationPrior::Uniform;
  c.likelihood_center = LikelihoodCenter::PerParticleMax;
  const json j = filter_config_to_json(c);
  EXPECT_EQ(filter_config_to_json(filter_config_from_json(j)), j);
  EXPECT_EQ(j["rotation_prior"], "uniform");
  EXPECT_EQ(j["likelihood_center"], "per_particle");
}

TEST(ConfigJson, RefineRoundTrip) {
  RefineConfig c;
  c.steps = 13;
  c.loss = ResidualLoss::L1;
  c.optimize_size = true;
  c.max_points = 321;
  const json j = refine_config_to_json(c);
  EXPECT_EQ(refine_config_to_json(refine_config_from_json(j)), j);
}

TEST(ConfigJson, RunRoundTrip) {
  RunConfig c;
  c.seed = 42;
  c.refine_enabled = false;
  c.single_frame = true;
  c.chamfer_points = 500;
  const json j = run_config_to_json(c);
  EXPECT_EQ(run_config_to_json(run_config_from_json(j)), j);
}

TEST(ConfigJson, SceneRoundTrip) {
  SceneConfig c;
  c.latent_raw = Eigen::Vector4d(1, 0, 0.5, -1);
  c.frames = 12;
  c.waypoints = {Waypoint{rotation_from_euler_deg(10, 0, 0), Vec3(0, 0, 0.8)},
                 Waypoint{rotation_from_euler_deg(20, 5, 0), Vec3(0.01, 0, 0.8)}};
  c.depth_noise = 0.001;
  c.occluder = OccluderSpec{0.2};
  c.seed = 9;
  const json j = scene_config_to_json(c);
  EXPECT_EQ(scene_config_to_json(scene_config_from_json(j)), j);
}

TEST(ConfigJson, UnknownKeysRejected) {
  EXPECT_THROW(filter_config_from_json(json{{"particle", 10}}), InvalidArgument);
  EXPECT_THROW(refine_config_from_json(json{{"step", 10}}), InvalidArgument);
  EXPECT_THROW(run_config_from_json(json{{"run", {{"sed", 1}}}}), InvalidArgument);
  EXPECT_THROW(run_config_from_json(json{{"extra", {}}}), InvalidArgument);
  EXPECT_THROW(scene_config_from_json(json{{"frame", 3}}), InvalidArgument);
  EXPECT_THROW(render_config_from_json(json{{"z", 3}}), InvalidArgument);
}

TEST(ConfigJson, WrongTypesAreInvalidArgument) {
  EXPECT_THROW(filter_config_from_json(json{{"particles", "many"}}), InvalidArgument);
  EXPECT_THROW(refine_config_from_json(json{{"loss", "l2"}}), InvalidArgument);
  EXPECT_THROW(filter_config_from_json(json{{"particles", 0}}), InvalidArgument);
}

TEST(ConfigJson, EulerWaypoints) {
  const json j = {{"frames", 5},
                  {"waypoints", json::array({json{{"euler_deg", {30, 20, 10}}, {"translation", {0, 0, 0.8}}}})}};
  const SceneConfig c = scene_config_from_json(j);
  ASSERT_EQ(c.waypoints.size(), 1u);
  EXPECT_LT(c.waypoints[0].rotation.angularDistance(rotation_from_euler_deg(30, 20, 10)), 1e-12);
  const json both = {{"waypoints", json::array({json{{"euler_deg", {0, 0, 0}},
                                                      {"quaternion", {0, 0, 0, 1}},
                                                      {"translation", {0, 0, 0.8}}}})}};
  EXPECT_THROW(scene_config_from_json(both), InvalidArgument);
}

TEST(ConfigFiles, ReferenceConfigsLoad) {
  const std::filesystem::path dir = SHAPETRACK_CONFIGS;
  const SceneConfig scene = scene_config_from_json(read_json_file(dir / "reference_scene.json"));
  EXPECT_EQ(scene.frames, 100);
  EXPECT_EQ(scene.category, "camera");
  const RunConfig run = run_config_from_json(read_json_file(dir / "run.json"));
  EXPECT_EQ(run.filter.particles, 100);
  EXPECT_EQ(run.refine.interval, 1);
}

TEST(ConfigFiles, ReadErrors) {
  const auto dir = std::filesystem::temp_directory_path() / "shapetrack_test_config";
  std::filesystem::create_directories(dir);
  EXPECT_THROW(read_json_file(dir / "missing.json"), IoError);
  std::ofstream(dir / "bad.json") << "{ not json";
  EXPECT_THROW(read_json_file(dir / "bad.json"), IoError);
  write_json_file(dir / "ok.json", json{{"a", 1}});
  EXPECT_EQ(read_json_file(dir / "ok.json")["a"], 1);
}
