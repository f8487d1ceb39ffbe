#include "shapetrack/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "shapetrack/error.hpp"

namespace shapetrack {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

Quat checked_unit(const Quat& q, const char* what) {
  const double n = q.norm();
  if (!std::isfinite(n) || std::abs(n - 1.0) >= 1e-6) {
    throw InvalidArgument(std::string(what) + ": quaternion is not unit norm (|q| = " +
                          std::to_string(n) + ")");
  }
  return q.normalized();
}

}  // namespace

Pose::Pose(const Quat& q, const Vec3& t) : rotation(q.normalized()), translation(t) {}

Pose Pose::inverse() const {
  const Quat inv = rotation.conjugate();
  return {inv, -(inv * translation)};
}

Pose Pose::compose(const Pose& other) const {
  return {(rotation * other.rotation).normalized(), rotation * other.translation + translation};
}

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) throw InvalidArgument("intrinsics: focal lengths must be positive");
  if (width <= 0 || height <= 0) throw InvalidArgument("intrinsics: image size must be positive");
  if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height)) {
    throw InvalidArgument("intrinsics: principal point outside the image");
  }
}

Quat rotation_from_euler_deg(double azimuth, double elevation, double inplane) {
  const Quat q = Quat(Eigen::AngleAxisd(inplane * kDeg, Vec3::UnitZ())) *
                 Quat(Eigen::AngleAxisd((elevation + 90.0) * kDeg, Vec3::UnitY())) *
                 Quat(Eigen::AngleAxisd(azimuth * kDeg, Vec3::UnitZ()));
  return q.normalized();
}

Quat canonical_quaternion(const Quat& q) {
  const double c[4] = {q.w(), q.x(), q.y(), q.z()};
  for (double v : c) {
    if (v > 0.0) return q;
    if (v < 0.0) return Quat(-q.w(), -q.x(), -q.y(), -q.z());
  }
  return q;
}

RotationGrid::RotationGrid(int step_deg) : step_deg_(step_deg) {
  if (step_deg < 1 || step_deg > 180 || 180 % step_deg != 0) {
    throw InvalidArgument("rotation grid: step must be a positive divisor of 180, got " +
                          std::to_string(step_deg));
  }
  n_az_ = 360 / step_deg;
  n_el_ = 180 / step_deg + 1;
  n_ip_ = 360 / step_deg;
  bins_.reserve(static_cast<std::size_t>(n_az_) * n_el_ * n_ip_);
  for (int a = 0; a < n_az_; ++a) {
    for (int e = 0; e < n_el_; ++e) {
      for (int i = 0; i < n_ip_; ++i) {
        bins_.push_back(canonical_quaternion(
            rotation_from_euler_deg(a * step_deg, -90.0 + e * step_deg, i * step_deg)));
      }
    }
  }
}

std::size_t RotationGrid::index_of(const Triple& t) const {
  if (t.azimuth < 0 || t.azimuth >= n_az_ || t.elevation < 0 || t.elevation >= n_el_ ||
      t.inplane < 0 || t.inplane >= n_ip_) {
    throw InvalidArgument("rotation grid: triple out of range");
  }
  return (static_cast<std::size_t>(t.azimuth) * n_el_ + t.elevation) * n_ip_ + t.inplane;
}

RotationGrid::Triple RotationGrid::triple_of(std::size_t index) const {
  if (index >= bins_.size()) throw InvalidArgument("rotation grid: index out of range");
  Triple t;
  t.inplane = static_cast<int>(index % n_ip_);
  index /= n_ip_;
  t.elevation = static_cast<int>(index % n_el_);
  t.azimuth = static_cast<int>(index / n_el_);
  return t;
}

Eigen::Vector3d RotationGrid::angles_deg(std::size_t index) const {
  const Triple t = triple_of(index);
  return {double(t.azimuth * step_deg_), -90.0 + t.elevation * step_deg_,
          double(t.inplane * step_deg_)};
}

RotationGrid build_rotation_grid(int step_deg) { return RotationGrid(step_deg); }

Vec2 project(const Vec3& point, const CameraIntrinsics& intr) {
  if (!(point.z() > 0.0)) throw BehindCamera("project: point is behind the camera");
  return {intr.fx * point.x() / point.z() + intr.cx, intr.fy * point.y() / point.z() + intr.cy};
}

Vec3 pixel_ray(double u, double v, const CameraIntrinsics& intr) {
  return {(u - intr.cx) / intr.fx, (v - intr.cy) / intr.fy, 1.0};
}

PointCloud backproject(const DepthImage& depth, const Mask& mask, const CameraIntrinsics& intr) {
  if (depth.width != mask.width || depth.height != mask.height) {
    throw InvalidArgument("backproject: depth and mask dimensions differ");
  }
  PointCloud cloud;
  cloud.frame = Frame::Camera;
  for (int v = 0; v < depth.height; ++v) {
    for (int u = 0; u < depth.width; ++u) {
      if (!mask.at(u, v)) continue;
      const double d = depth.at(u, v);
      if (d <= 0.0) continue;
      cloud.points.push_back(d * pixel_ray(u, v, intr));
    }
  }
  return cloud;
}

PointCloud normalize_points(const PointCloud& cloud, const Pose& pose, double size) {
  if (!(size > 0.0)) throw InvalidArgument("normalize_points: size must be positive");
  const Mat3 rt = pose.rotation.toRotationMatrix().transpose();
  PointCloud out;
  out.frame = Frame::ObjectNormalized;
  out.points.reserve(cloud.size());
  for (const Vec3& p : cloud.points) out.points.push_back(rt * (p - pose.translation) / size);
  return out;
}

PointCloud denormalize_points(const PointCloud& cloud, const Pose& pose, double size) {
  if (!(size > 0.0)) throw InvalidArgument("denormalize_points: size must be positive");
  const Mat3 r = pose.rotation.toRotationMatrix();
  PointCloud out;
  out.frame = Frame::Camera;
  out.points.reserve(cloud.size());
  for (const Vec3& p : cloud.points) out.points.push_back(r * (size * p) + pose.translation);
  return out;
}

double rotation_error_deg(const Quat& a, const Quat& b, const std::optional<Vec3>& symmetry_axis) {
  const Quat qa = checked_unit(a, "rotation_error_deg");
  const Quat qb = checked_unit(b, "rotation_error_deg");
  if (symmetry_axis) {
    const Vec3 axis = symmetry_axis->normalized();
    const double c = std::clamp((qa * axis).dot(qb * axis), -1.0, 1.0);
    return std::acos(c) / kDeg;
  }
  // 2 * atan2(|vec|, |w|) of the relative rotation is stable near 0 and 180.
  const Quat rel = qa.conjugate() * qb;
  const double angle = 2.0 * std::atan2(rel.vec().norm(), std::abs(rel.w()));
  return std::clamp(angle / kDeg, 0.0, 180.0);
}

Quat viewing_ray_rotation(const Vec3& t) {
  if (!(t.norm() > 0.0)) return Quat::Identity();
  return Quat::FromTwoVectors(Vec3::UnitZ(), t.normalized()).normalized();
}

Quat exp_so3(const Vec3& omega) {
  const double angle = omega.norm();
  if (angle < 1e-12) {
    return Quat(1.0, 0.5 * omega.x(), 0.5 * omega.y(), 0.5 * omega.z()).normalized();
  }
  return Quat(Eigen::AngleAxisd(angle, omega / angle));
}

}  // namespace shapetrack
