#include "shapetrack/sequence.hpp"

#include <cmath>
#include <cstdio>
#include <random>

#include "shapetrack/config.hpp"
#include "shapetrack/error.hpp"
#include "shapetrack/render.hpp"

namespace shapetrack {

namespace fs = std::filesystem;

void SceneConfig::validate() const {
  if (frames < 1) throw InvalidArgument("scene: frame count must be >= 1");
  if (!(depth_noise >= 0.0)) throw InvalidArgument("scene: depth noise must be >= 0");
  if (!(size > 0.0)) throw InvalidArgument("scene: size must be positive");
  if (!(translation_jitter >= 0.0) || !(rotation_jitter_deg >= 0.0)) {
    throw InvalidArgument("scene: jitter must be >= 0");
  }
  if (!(jitter_decay >= 0.0 && jitter_decay < 1.0)) throw InvalidArgument("scene: jitter_decay must be in [0, 1)");
  if (waypoints.empty()) throw InvalidArgument("scene: at least one waypoint is required");
  if (occluder && !(occluder->fraction >= 0.0 && occluder->fraction < 1.0)) {
    throw InvalidArgument("scene: occluder fraction must be in [0, 1)");
  }
  intrinsics.validate();
  const ShapeBasis b = resolved_basis();
  if (latent_raw.size() != 0 && static_cast<std::size_t>(latent_raw.size()) != b.size()) {
    throw InvalidArgument("scene: latent size does not match the basis");
  }
}

ShapeBasis SceneConfig::resolved_basis() const { return basis ? *basis : builtin_basis(category); }

ShapeLatent SceneConfig::resolved_latent() const {
  return latent_raw.size() == 0 ? canonical_latent(resolved_basis()) : ShapeLatent(latent_raw);
}

Pose waypoint_pose(const std::vector<Waypoint>& waypoints, int frame, int frames) {
  if (waypoints.empty()) throw InvalidArgument("waypoint_pose: no waypoints");
  if (waypoints.size() == 1 || frames <= 1) return Pose(waypoints.front().rotation, waypoints.front().translation);
  const double tau = static_cast<double>(frame) / (frames - 1) * static_cast<double>(waypoints.size() - 1);
  const auto seg = std::min(static_cast<std::size_t>(tau), waypoints.size() - 2);
  const double a = tau - static_cast<double>(seg);
  const Waypoint& w0 = waypoints[seg];
  const Waypoint& w1 = waypoints[seg + 1];
  return Pose(w0.rotation.normalized().slerp(a, w1.rotation.normalized()),
              (1.0 - a) * w0.translation + a * w1.translation);
}

namespace {

std::string frame_name(std::size_t k, const char* ext) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06zu%s", k, ext);
  return buf;
}

}  // namespace

Sequence generate_sequence(const SceneConfig& cfg) {
  cfg.validate();
  Sequence seq;
  seq.category = cfg.category;
  seq.basis = cfg.resolved_basis();
  seq.latent = cfg.resolved_latent();
  seq.intrinsics = cfg.intrinsics;
  const CameraIntrinsics& intr = cfg.intrinsics;

  std::mt19937_64 traj_rng(mix_seed(cfg.seed, 1));
  std::normal_distribution<double> unit(0.0, 1.0);
  Vec3 t_offset = Vec3::Zero();
  Vec3 r_offset = Vec3::Zero();
  const double r_sigma = cfg.rotation_jitter_deg * M_PI / 180.0;

  for (int k = 0; k < cfg.frames; ++k) {
    if (k > 0) {
      const Vec3 nt(unit(traj_rng), unit(traj_rng), unit(traj_rng));
      const Vec3 nr(unit(traj_rng), unit(traj_rng), unit(traj_rng));
      t_offset = cfg.jitter_decay * t_offset + cfg.translation_jitter * nt;
      r_offset = cfg.jitter_decay * r_offset + r_sigma * nr;
    }
    const Pose base = waypoint_pose(cfg.waypoints, k, cfg.frames);
    const Pose pose((exp_so3(r_offset) * base.rotation).normalized(), base.translation + t_offset);

    SequenceFrame frame;
    frame.pose = pose;
    frame.size = cfg.size;
    try {
      frame.depth = render_depth(seq.basis, seq.latent, pose, cfg.size, intr);
    } catch (const BehindCamera&) {
      throw GenerationError("generate_sequence: object behind the camera at frame " + std::to_string(k));
    }

    Mask mask(intr.width, intr.height);
    for (int v = 0; v < intr.height; ++v) {
      for (int u = 0; u < intr.width; ++u) {
        if (frame.depth.at(u, v) <= 0.0f) continue;
        if (u == 0 || v == 0 || u == intr.width - 1 || v == intr.height - 1) {
          throw GenerationError("generate_sequence: object leaves the frustum at frame " + std::to_string(k));
        }
        mask.set(u, v, true);
      }
    }
    if (mask.count() == 0) {
      throw GenerationError("generate_sequence: object not visible at frame " + std::to_string(k));
    }

    if (cfg.occluder && cfg.occluder->fraction > 0.0) {
      const BBox full = mask_bbox(mask);
      const double side = std::sqrt(cfg.occluder->fraction);
      const int ow = static_cast<int>(std::round(side * full.width()));
      const int oh = static_cast<int>(std::round(side * full.height()));
      for (int v = full.v_max - oh + 1; v <= full.v_max; ++v) {
        for (int u = full.u_max - ow + 1; u <= full.u_max; ++u) {
          mask.set(u, v, false);
          frame.depth.at(u, v) = 0.0f;
        }
      }
      if (mask.count() == 0) {
        throw GenerationError("generate_sequence: occluder hides the object at frame " + std::to_string(k));
      }
    }

    if (cfg.depth_noise > 0.0) {
      std::mt19937_64 noise_rng(mix_seed(cfg.seed, 1000 + static_cast<std::uint64_t>(k)));
      std::normal_distribution<double> noise(0.0, cfg.depth_noise);
      for (float& d : frame.depth.data) {
        if (d <= 0.0f) continue;
        d = static_cast<float>(std::max(1e-6, d + noise(noise_rng)));
      }
    }

    frame.detection.bbox = mask_bbox(mask);
    frame.detection.mask = std::move(mask);
    seq.frames.push_back(std::move(frame));
  }
  return seq;
}

void save_sequence(const fs::path& dir, const Sequence& seq, DepthFormat format) {
  std::error_code ec;
  fs::create_directories(dir / "depth", ec);
  fs::create_directories(dir / "mask", ec);
  if (ec) throw IoError("save_sequence: cannot create " + dir.string() + ": " + ec.message());

  nlohmann::json meta;
  meta["category"] = seq.category;
  meta["basis"] = basis_to_json(seq.basis);
  meta["latent"] = latent_to_json(seq.latent);
  meta["intrinsics"] = intrinsics_to_json(seq.intrinsics);
  meta["frames"] = seq.frames.size();
  meta["depth_format"] = format == DepthFormat::Raw ? "f32" : "png16";
  write_json_file(dir / "sequence.json", meta);

  nlohmann::json gt = nlohmann::json::array();
  for (std::size_t k = 0; k < seq.frames.size(); ++k) {
    const SequenceFrame& f = seq.frames[k];
    if (format == DepthFormat::Raw) {
      write_depth_raw(dir / "depth" / frame_name(k, ".f32"), f.depth);
    } else {
      write_depth_png16(dir / "depth" / frame_name(k, ".png"), f.depth);
    }
    write_mask_png(dir / "mask" / frame_name(k, ".png"), f.detection.mask);
    const BBox& b = f.detection.bbox;
    gt.push_back({{"frame", k},
                  {"pose", pose_to_json(f.pose)},
                  {"size", f.size},
                  {"bbox", {b.u_min, b.v_min, b.u_max, b.v_max}}});
  }
  write_json_file(dir / "gt.json", gt);
}

namespace {

struct Header {
  std::string category;
  ShapeBasis basis;
  ShapeLatent latent;
  CameraIntrinsics intrinsics;
  std::string depth_format;
  std::size_t frames = 0;
};

Header read_header(const fs::path& dir) {
  const nlohmann::json meta = read_json_file(dir / "sequence.json");
  try {
    Header h;
    h.category = meta.at("category").get<std::string>();
    h.basis = basis_from_json(meta.at("basis"));
    h.latent = latent_from_json(meta.at("latent"));
    h.intrinsics = intrinsics_from_json(meta.at("intrinsics"));
    h.depth_format = meta.value("depth_format", std::string("f32"));
    h.frames = meta.at("frames").get<std::size_t>();
    return h;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("load_sequence: malformed " + (dir / "sequence.json").string() + ": " + e.what());
  }
}

std::vector<std::pair<GroundTruthFrame, BBox>> read_gt(const fs::path& dir, std::size_t frames) {
  const nlohmann::json gt = read_json_file(dir / "gt.json");
  if (!gt.is_array() || gt.size() != frames) {
    throw IoError("load_sequence: " + (dir / "gt.json").string() + " does not list every frame");
  }
  std::vector<std::pair<GroundTruthFrame, BBox>> out;
  try {
    for (const auto& f : gt) {
      GroundTruthFrame g;
      g.pose = pose_from_json(f.at("pose"));
      g.size = f.at("size").get<double>();
      const auto& b = f.at("bbox");
      out.push_back({g, BBox{b.at(0).get<int>(), b.at(1).get<int>(), b.at(2).get<int>(), b.at(3).get<int>()}});
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError("load_sequence: malformed " + (dir / "gt.json").string() + ": " + e.what());
  }
  return out;
}

}  // namespace

Sequence load_sequence(const fs::path& dir) {
  const Header h = read_header(dir);
  const auto gt = read_gt(dir, h.frames);
  Sequence seq;
  seq.category = h.category;
  seq.basis = h.basis;
  seq.latent = h.latent;
  seq.intrinsics = h.intrinsics;
  const char* ext = h.depth_format == "png16" ? ".png" : ".f32";
  for (std::size_t k = 0; k < h.frames; ++k) {
    SequenceFrame f;
    f.depth = read_depth(dir / "depth" / frame_name(k, ext));
    f.detection.mask = read_mask_png(dir / "mask" / frame_name(k, ".png"));
    f.detection.bbox = gt[k].second;
    f.pose = gt[k].first.pose;
    f.size = gt[k].first.size;
    if (f.depth.width != h.intrinsics.width || f.depth.height != h.intrinsics.height ||
        f.detection.mask.width != f.depth.width || f.detection.mask.height != f.depth.height) {
      throw IoError("load_sequence: frame " + std::to_string(k) + " does not match the intrinsics");
    }
    seq.frames.push_back(std::move(f));
  }
  return seq;
}

GroundTruth load_ground_truth(const fs::path& dir) {
  const Header h = read_header(dir);
  GroundTruth gt;
  gt.category = h.category;
  gt.basis = h.basis;
  gt.latent = h.latent;
  for (const auto& [frame, bbox] : read_gt(dir, h.frames)) gt.frames.push_back(frame);
  return gt;
}

GroundTruth ground_truth_of(const Sequence& seq) {
  GroundTruth gt;
  gt.category = seq.category;
  gt.basis = seq.basis;
  gt.latent = seq.latent;
  for (const SequenceFrame& f : seq.frames) gt.frames.push_back({f.pose, f.size});
  return gt;
}

}  // namespace shapetrack
