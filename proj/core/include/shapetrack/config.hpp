#pragma once

#include <filesystem>

#include <nlohmann/json.hpp>

#include "shapetrack/filter.hpp"
#include "shapetrack/geometry.hpp"
#include "shapetrack/refine.hpp"
#include "shapetrack/render.hpp"
#include "shapetrack/sequence.hpp"
#include "shapetrack/tracking.hpp"

namespace shapetrack {

// JSON forms of the value types. Quaternions are [x, y, z, w]. Missing keys
// keep their defaults; unknown keys are rejected so typos surface early.

nlohmann::json quat_to_json(const Quat& q);
Quat quat_from_json(const nlohmann::json& j);
nlohmann::json vec3_to_json(const Vec3& v);
Vec3 vec3_from_json(const nlohmann::json& j);
nlohmann::json pose_to_json(const Pose& p);
Pose pose_from_json(const nlohmann::json& j);

nlohmann::json intrinsics_to_json(const CameraIntrinsics& intr);
CameraIntrinsics intrinsics_from_json(const nlohmann::json& j);

nlohmann::json render_config_to_json(const RenderConfig& cfg);
RenderConfig render_config_from_json(const nlohmann::json& j);
nlohmann::json filter_config_to_json(const FilterConfig& cfg);
FilterConfig filter_config_from_json(const nlohmann::json& j);
nlohmann::json refine_config_to_json(const RefineConfig& cfg);
RefineConfig refine_config_from_json(const nlohmann::json& j);

/// Waypoint rotations accept "quaternion" or "euler_deg" ([az, el, ip], grid convention).
nlohmann::json scene_config_to_json(const SceneConfig& cfg);
SceneConfig scene_config_from_json(const nlohmann::json& j);

/// {"filter": {...}, "refine": {...}, "run": {...}}
nlohmann::json run_config_to_json(const RunConfig& cfg);
RunConfig run_config_from_json(const nlohmann::json& j);

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace shapetrack
