#include "shapetrack/render.hpp"

#include <algorithm>
#include <cmath>

#include "shapetrack/error.hpp"

namespace shapetrack {

void RenderConfig::validate() const {
  if (!(z0 > 0.0)) throw InvalidArgument("render config: z0 must be positive");
  if (!(crop_extent > 0.0)) throw InvalidArgument("render config: crop_extent must be positive");
  if (resolution < 1) throw InvalidArgument("render config: resolution must be positive");
}

CameraIntrinsics RenderConfig::canonical_camera() const {
  CameraIntrinsics intr;
  intr.width = resolution;
  intr.height = resolution;
  intr.fx = resolution * z0 / crop_extent;
  intr.fy = intr.fx;
  intr.cx = 0.5 * (resolution - 1);
  intr.cy = intr.cx;
  return intr;
}

DepthImage render_depth(const ShapeBasis& basis, const ShapeLatent& latent, const Pose& pose,
                        double size, const CameraIntrinsics& intr) {
  constexpr double kNear = 0.01;
  constexpr int kMaxSteps = 128;
  intr.validate();
  if (!(size > 0.0)) throw InvalidArgument("render_depth: size must be positive");
  if (!(pose.translation.z() - 0.5 * size > kNear)) {
    throw BehindCamera("render_depth: object is not in front of the camera");
  }
  if (basis.size() != latent.size()) throw InvalidArgument("render_depth: latent/basis size mismatch");

  const Mat3 rinv = pose.rotation.normalized().toRotationMatrix().transpose();
  const Vec3& t = pose.translation;
  const double bound = size * basis.bounding_radius();
  const double hit_eps = 1e-4 * size;
  const Vec3 offset = -(rinv * t) / size;
  const double t2 = t.squaredNorm();

  DepthImage depth(intr.width, intr.height);
  for (int v = 0; v < intr.height; ++v) {
    for (int u = 0; u < intr.width; ++u) {
      const Vec3 ray = pixel_ray(u, v, intr);
      const Vec3 dir = ray.normalized();
      // Ray / bounding-sphere interval.
      const double b = dir.dot(t);
      const double disc = b * b - (t2 - bound * bound);
      if (disc < 0.0) continue;
      const double root = std::sqrt(disc);
      double lambda = std::max(b - root, 0.0);
      const double lambda_end = b + root;
      const Vec3 step_dir = (rinv * dir) / size;
      for (int step = 0; step < kMaxSteps && lambda <= lambda_end; ++step) {
        const double dist = size * sdf_eval(basis, latent, offset + lambda * step_dir);
        if (std::abs(dist) < hit_eps) {
          depth.at(u, v) = static_cast<float>(lambda * dir.z());
          break;
        }
        lambda += dist;
      }
    }
  }
  return depth;
}

RoI roi_from_state(const Vec3& translation, double size, const CameraIntrinsics& intr, double z0,
                   double w0) {
  if (!(translation.z() > 0.0)) throw BehindCamera("roi_from_state: translation behind the camera");
  RoI roi;
  roi.center = project(translation, intr);
  roi.side = w0 * size * z0 / translation.z();
  return roi;
}

NormalizedDepthMap normalize_depth_roi(const DepthImage& depth, const RoI& roi, double z, double s,
                                       int resolution) {
  if (!(s > 0.0)) throw InvalidArgument("normalize_depth_roi: size must be positive");
  if (resolution < 1) throw InvalidArgument("normalize_depth_roi: resolution must be positive");
  NormalizedDepthMap out;
  out.resolution = resolution;
  out.data.assign(static_cast<std::size_t>(resolution) * resolution, 0.0f);
  const double scale = roi.side / resolution;
  const double u0 = roi.center.x() - 0.5 * roi.side;
  const double v0 = roi.center.y() - 0.5 * roi.side;

  for (int y = 0; y < resolution; ++y) {
    const double sv = v0 + (y + 0.5) * scale;
    const double fy0 = std::floor(sv);
    const double ay = sv - fy0;
    const int iy = static_cast<int>(fy0);
    for (int x = 0; x < resolution; ++x) {
      const double su = u0 + (x + 0.5) * scale;
      const double fx0 = std::floor(su);
      const double ax = su - fx0;
      const int ix = static_cast<int>(fx0);
      double acc = 0.0;
      double wsum = 0.0;
      const double wts[4] = {(1 - ax) * (1 - ay), ax * (1 - ay), (1 - ax) * ay, ax * ay};
      const int du[4] = {0, 1, 0, 1};
      const int dv[4] = {0, 0, 1, 1};
      for (int k = 0; k < 4; ++k) {
        if (wts[k] == 0.0) continue;
        const int pu = ix + du[k];
        const int pv = iy + dv[k];
        if (!depth.contains(pu, pv)) continue;
        const float d = depth.at(pu, pv);
        if (d <= 0.0f) continue;
        acc += wts[k] * d;
        wsum += wts[k];
      }
      if (wsum < 0.5) continue;
      const double value = (acc / wsum - z) / s + 0.5;
      out.data[static_cast<std::size_t>(y) * resolution + x] =
          static_cast<float>(std::clamp(value, 0.0, 1.0));
    }
  }
  return out;
}

NormalizedDepthMap render_normalized(const ShapeBasis& basis, const ShapeLatent& latent,
                                     const Quat& rotation, const RenderConfig& cfg) {
  cfg.validate();
  const CameraIntrinsics cam = cfg.canonical_camera();
  const Vec3 t0(0.0, 0.0, cfg.z0);
  const DepthImage depth = render_depth(basis, latent, Pose(rotation, t0), 1.0, cam);
  const RoI roi = roi_from_state(t0, 1.0, cam, cfg.z0, cfg.canonical_crop(cam));
  return normalize_depth_roi(depth, roi, cfg.z0, 1.0, cfg.resolution);
}

}  // namespace shapetrack
