#include "shapetrack/config.hpp"

#include <fstream>
#include <initializer_list>
#include <set>

#include "shapetrack/error.hpp"

namespace shapetrack {

using nlohmann::json;

namespace {

void check_keys(const json& j, const char* what, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw InvalidArgument(std::string(what) + ": expected a JSON object");
  const std::set<std::string> keys(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items()) {
    if (!keys.count(k)) throw InvalidArgument(std::string(what) + ": unknown key '" + k + "'");
  }
}

template <typename T>
void get_to(const json& j, const char* key, T& value) {
  if (j.contains(key)) j.at(key).get_to(value);
}

Eigen::VectorXd vector_from_json(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// Rethrows JSON type errors as InvalidArgument naming the section.
template <typename F>
auto guarded(const char* what, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string(what) + ": " + e.what());
  }
}

}  // namespace

json quat_to_json(const Quat& q) { return {q.x(), q.y(), q.z(), q.w()}; }

Quat quat_from_json(const json& j) {
  return guarded("quaternion", [&] {
    if (!j.is_array() || j.size() != 4) throw InvalidArgument("quaternion: expected [x, y, z, w]");
    const Quat q(j[3].get<double>(), j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
    if (!(q.norm() > 1e-12)) throw InvalidArgument("quaternion: zero norm");
    return q.normalized();
  });
}

json vec3_to_json(const Vec3& v) { return {v.x(), v.y(), v.z()}; }

Vec3 vec3_from_json(const json& j) {
  return guarded("vector", [&] {
    if (!j.is_array() || j.size() != 3) throw InvalidArgument("vector: expected [x, y, z]");
    return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
  });
}

json pose_to_json(const Pose& p) {
  return {{"rotation", quat_to_json(p.rotation)}, {"translation", vec3_to_json(p.translation)}};
}

Pose pose_from_json(const json& j) {
  check_keys(j, "pose", {"rotation", "translation"});
  return guarded("pose", [&] { return Pose(quat_from_json(j.at("rotation")), vec3_from_json(j.at("translation"))); });
}

json intrinsics_to_json(const CameraIntrinsics& i) {
  return {{"fx", i.fx}, {"fy", i.fy}, {"cx", i.cx}, {"cy", i.cy}, {"width", i.width}, {"height", i.height}};
}

CameraIntrinsics intrinsics_from_json(const json& j) {
  check_keys(j, "intrinsics", {"fx", "fy", "cx", "cy", "width", "height"});
  CameraIntrinsics i;
  guarded("intrinsics", [&] {
    get_to(j, "fx", i.fx);
    get_to(j, "fy", i.fy);
    get_to(j, "cx", i.cx);
    get_to(j, "cy", i.cy);
    get_to(j, "width", i.width);
    get_to(j, "height", i.height);
    return 0;
  });
  i.validate();
  return i;
}

json render_config_to_json(const RenderConfig& c) {
  return {{"z0", c.z0}, {"crop_extent", c.crop_extent}, {"resolution", c.resolution}};
}

RenderConfig render_config_from_json(const json& j) {
  check_keys(j, "render", {"z0", "crop_extent", "resolution"});
  RenderConfig c;
  guarded("render", [&] {
    get_to(j, "z0", c.z0);
    get_to(j, "crop_extent", c.crop_extent);
    get_to(j, "resolution", c.resolution);
    return 0;
  });
  c.validate();
  return c;
}

json filter_config_to_json(const FilterConfig& c) {
  return {{"particles", c.particles},
          {"init_particles", c.init_particles},
          {"init_cycles", c.init_cycles},
          {"size_prior", c.size_prior},
          {"size_range", c.size_range},
          {"velocity_gain", c.velocity_gain},
          {"translation_noise", vec3_to_json(c.translation_noise)},
          {"size_noise", c.size_noise},
          {"rotation_mix", c.rotation_mix},
          {"sigma_phi", c.sigma_phi},
          {"likelihood_floor", c.likelihood_floor},
          {"log_likelihood_floor", c.log_likelihood_floor},
          {"depth_percentile_low", c.depth_percentile_low},
          {"depth_percentile_high", c.depth_percentile_high},
          {"lost_after", c.lost_after},
          {"viewpoint_correction", c.viewpoint_correction},
          {"rotation_prior", c.rotation_prior == RotationPrior::Propagated ? "propagated" : "uniform"},
          {"likelihood_center", c.likelihood_center == LikelihoodCenter::GlobalMax ? "global_max" : "per_particle"}};
}

FilterConfig filter_config_from_json(const json& j) {
  check_keys(j, "filter",
             {"particles", "init_particles", "init_cycles", "size_prior", "size_range", "velocity_gain",
              "translation_noise", "size_noise", "rotation_mix", "sigma_phi", "likelihood_floor",
              "log_likelihood_floor", "depth_percentile_low", "depth_percentile_high", "lost_after",
              "viewpoint_correction", "rotation_prior", "likelihood_center"});
  FilterConfig c;
  guarded("filter", [&] {
    get_to(j, "particles", c.particles);
    get_to(j, "init_particles", c.init_particles);
    get_to(j, "init_cycles", c.init_cycles);
    get_to(j, "size_prior", c.size_prior);
    get_to(j, "size_range", c.size_range);
    get_to(j, "velocity_gain", c.velocity_gain);
    if (j.contains("translation_noise")) c.translation_noise = vec3_from_json(j.at("translation_noise"));
    get_to(j, "size_noise", c.size_noise);
    get_to(j, "rotation_mix", c.rotation_mix);
    get_to(j, "sigma_phi", c.sigma_phi);
    get_to(j, "likelihood_floor", c.likelihood_floor);
    get_to(j, "log_likelihood_floor", c.log_likelihood_floor);
    get_to(j, "depth_percentile_low", c.depth_percentile_low);
    get_to(j, "depth_percentile_high", c.depth_percentile_high);
    get_to(j, "lost_after", c.lost_after);
    get_to(j, "viewpoint_correction", c.viewpoint_correction);
    if (j.contains("rotation_prior")) {
      const auto s = j.at("rotation_prior").get<std::string>();
      if (s == "propagated") c.rotation_prior = RotationPrior::Propagated;
      else if (s == "uniform") c.rotation_prior = RotationPrior::Uniform;
      else throw InvalidArgument("filter: rotation_prior must be 'propagated' or 'uniform'");
    }
    if (j.contains("likelihood_center")) {
      const auto s = j.at("likelihood_center").get<std::string>();
      if (s == "global_max") c.likelihood_center = LikelihoodCenter::GlobalMax;
      else if (s == "per_particle") c.likelihood_center = LikelihoodCenter::PerParticleMax;
      else throw InvalidArgument("filter: likelihood_center must be 'global_max' or 'per_particle'");
    }
    return 0;
  });
  c.validate();
  return c;
}

json refine_config_to_json(const RefineConfig& c) {
  return {{"steps", c.steps},
          {"rounds", c.rounds},
          {"interval", c.interval},
          {"latent_reg", c.latent_reg},
          {"translation_step", c.translation_step},
          {"rotation_step", c.rotation_step},
          {"size_step", c.size_step},
          {"latent_step", c.latent_step},
          {"huber_delta", c.huber_delta},
          {"loss", c.loss == ResidualLoss::Huber ? "huber" : "l1"},
          {"optimize_size", c.optimize_size},
          {"latent_iterations", c.latent_iterations},
          {"erosion_radius", c.erosion_radius},
          {"max_points", c.max_points}};
}

RefineConfig refine_config_from_json(const json& j) {
  check_keys(j, "refine",
             {"steps", "rounds", "interval", "latent_reg", "translation_step", "rotation_step", "size_step",
              "latent_step", "huber_delta", "loss", "optimize_size", "latent_iterations", "erosion_radius",
              "max_points"});
  RefineConfig c;
  guarded("refine", [&] {
    get_to(j, "steps", c.steps);
    get_to(j, "rounds", c.rounds);
    get_to(j, "interval", c.interval);
    get_to(j, "latent_reg", c.latent_reg);
    get_to(j, "translation_step", c.translation_step);
    get_to(j, "rotation_step", c.rotation_step);
    get_to(j, "size_step", c.size_step);
    get_to(j, "latent_step", c.latent_step);
    get_to(j, "huber_delta", c.huber_delta);
    if (j.contains("loss")) {
      const auto s = j.at("loss").get<std::string>();
      if (s == "huber") c.loss = ResidualLoss::Huber;
      else if (s == "l1") c.loss = ResidualLoss::L1;
      else throw InvalidArgument("refine: loss must be 'huber' or 'l1'");
    }
    get_to(j, "optimize_size", c.optimize_size);
    get_to(j, "latent_iterations", c.latent_iterations);
    get_to(j, "erosion_radius", c.erosion_radius);
    get_to(j, "max_points", c.max_points);
    return 0;
  });
  c.validate();
  return c;
}

json scene_config_to_json(const SceneConfig& c) {
  json waypoints = json::array();
  for (const Waypoint& w : c.waypoints) {
    waypoints.push_back({{"quaternion", quat_to_json(w.rotation)}, {"translation", vec3_to_json(w.translation)}});
  }
  json j = {{"category", c.category},
            {"size", c.size},
            {"waypoints", waypoints},
            {"translation_jitter", c.translation_jitter},
            {"rotation_jitter_deg", c.rotation_jitter_deg},
            {"jitter_decay", c.jitter_decay},
            {"frames", c.frames},
            {"intrinsics", intrinsics_to_json(c.intrinsics)},
            {"depth_noise", c.depth_noise},
            {"seed", c.seed}};
  if (c.basis) j["basis"] = basis_to_json(*c.basis);
  if (c.latent_raw.size() > 0) j["latent"] = std::vector<double>(c.latent_raw.begin(), c.latent_raw.end());
  if (c.occluder) j["occluder"] = {{"fraction", c.occluder->fraction}};
  return j;
}

SceneConfig scene_config_from_json(const json& j) {
  check_keys(j, "scene",
             {"category", "basis", "latent", "size", "waypoints", "translation_jitter", "rotation_jitter_deg",
              "jitter_decay", "frames", "intrinsics", "depth_noise", "occluder", "seed"});
  SceneConfig c;
  guarded("scene", [&] {
    get_to(j, "category", c.category);
    if (j.contains("basis")) c.basis = basis_from_json(j.at("basis"));
    if (j.contains("latent")) c.latent_raw = vector_from_json(j.at("latent"));
    get_to(j, "size", c.size);
    if (j.contains("waypoints")) {
      for (const auto& w : j.at("waypoints")) {
        check_keys(w, "waypoint", {"quaternion", "euler_deg", "translation"});
        Waypoint wp;
        if (w.contains("quaternion") && w.contains("euler_deg")) {
          throw InvalidArgument("waypoint: give either 'quaternion' or 'euler_deg'");
        }
        if (w.contains("quaternion")) wp.rotation = quat_from_json(w.at("quaternion"));
        if (w.contains("euler_deg")) {
          const Vec3 e = vec3_from_json(w.at("euler_deg"));
          wp.rotation = rotation_from_euler_deg(e.x(), e.y(), e.z());
        }
        wp.translation = vec3_from_json(w.at("translation"));
        c.waypoints.push_back(wp);
      }
    }
    get_to(j, "translation_jitter", c.translation_jitter);
    get_to(j, "rotation_jitter_deg", c.rotation_jitter_deg);
    get_to(j, "jitter_decay", c.jitter_decay);
    get_to(j, "frames", c.frames);
    if (j.contains("intrinsics")) c.intrinsics = intrinsics_from_json(j.at("intrinsics"));
    get_to(j, "depth_noise", c.depth_noise);
    if (j.contains("occluder")) {
      check_keys(j.at("occluder"), "occluder", {"fraction"});
      c.occluder = OccluderSpec{j.at("occluder").at("fraction").get<double>()};
    }
    get_to(j, "seed", c.seed);
    return 0;
  });
  c.validate();
  return c;
}

json run_config_to_json(const RunConfig& c) {
  return {{"filter", filter_config_to_json(c.filter)},
          {"refine", refine_config_to_json(c.refine)},
          {"run",
           {{"refine_enabled", c.refine_enabled},
            {"single_frame", c.single_frame},
            {"seed", c.seed},
            {"record_timing", c.record_timing},
            {"symmetric_rotation_error", c.symmetric_rotation_error},
            {"chamfer_points", c.chamfer_points}}}};
}

RunConfig run_config_from_json(const json& j) {
  check_keys(j, "run config", {"filter", "refine", "run"});
  RunConfig c;
  if (j.contains("filter")) c.filter = filter_config_from_json(j.at("filter"));
  if (j.contains("refine")) c.refine = refine_config_from_json(j.at("refine"));
  if (j.contains("run")) {
    const json& r = j.at("run");
    check_keys(r, "run", {"refine_enabled", "single_frame", "seed", "record_timing", "symmetric_rotation_error",
                          "chamfer_points"});
    guarded("run", [&] {
      get_to(r, "refine_enabled", c.refine_enabled);
      get_to(r, "single_frame", c.single_frame);
      get_to(r, "seed", c.seed);
      get_to(r, "record_timing", c.record_timing);
      get_to(r, "symmetric_rotation_error", c.symmetric_rotation_error);
      get_to(r, "chamfer_points", c.chamfer_points);
      return 0;
    });
  }
  c.validate();
  return c;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace shapetrack
