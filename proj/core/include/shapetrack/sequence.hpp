#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "shapetrack/filter.hpp"
#include "shapetrack/geometry.hpp"
#include "shapetrack/image.hpp"
#include "shapetrack/shape.hpp"

namespace shapetrack {

struct Waypoint {
  Quat rotation = Quat::Identity();
  Vec3 translation{0.0, 0.0, 0.8};
};

/// Rectangle zeroed out of the depth and the mask, placed in the lower
/// right of the object's bounding box and covering `fraction` of its area.
struct OccluderSpec {
  double fraction = 0.0;
};

struct SceneConfig {
  std::string category = "camera";
  std::optional<ShapeBasis> basis;  // builtin_basis(category) when unset
  Eigen::VectorXd latent_raw;       // empty -> canonical latent
  double size = 0.25;
  std::vector<Waypoint> waypoints;
  // Mean-reverting perturbation added on top of the waypoint path.
  double translation_jitter = 0.0;  // m per frame
  double rotation_jitter_deg = 0.0; // deg per frame
  double jitter_decay = 0.8;
  int frames = 100;
  CameraIntrinsics intrinsics;
  double depth_noise = 0.0;  // m
  std::optional<OccluderSpec> occluder;
  std::uint64_t seed = 0;

  void validate() const;
  ShapeBasis resolved_basis() const;
  ShapeLatent resolved_latent() const;
};

struct SequenceFrame {
  DepthImage depth;
  Detection detection;
  Pose pose;
  double size = 0.0;
};

struct Sequence {
  std::string category;
  ShapeBasis basis;
  ShapeLatent latent;
  CameraIntrinsics intrinsics;
  std::vector<SequenceFrame> frames;
};

/// Ground-truth pose at frame k before jitter: piecewise slerp/lerp between
/// waypoints with frame 0 on the first and the last frame on the last one.
Pose waypoint_pose(const std::vector<Waypoint>& waypoints, int frame, int frames);

/// Renders every frame. The detection mask is the set of visible rendered
/// pixels and its bbox is tight. Throws GenerationError naming the frame if
/// the object is not fully inside the image.
Sequence generate_sequence(const SceneConfig& cfg);

enum class DepthFormat { Raw, Png16 };

// Directory layout: sequence.json (category, basis, latent, intrinsics),
// gt.json (per-frame pose, size, bbox), depth/NNNNNN.{f32,png},
// mask/NNNNNN.png.
void save_sequence(const std::filesystem::path& dir, const Sequence& seq,
                   DepthFormat format = DepthFormat::Raw);
Sequence load_sequence(const std::filesystem::path& dir);

struct GroundTruthFrame {
  Pose pose;
  double size = 0.0;
};

struct GroundTruth {
  std::string category;
  ShapeBasis basis;
  ShapeLatent latent;
  std::vector<GroundTruthFrame> frames;
};

/// Reads only sequence.json and gt.json.
GroundTruth load_ground_truth(const std::filesystem::path& dir);
GroundTruth ground_truth_of(const Sequence& seq);

}  // namespace shapetrack
