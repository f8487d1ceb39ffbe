#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <optional>
#include <vector>

#include "shapetrack/image.hpp"

namespace shapetrack {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

/// Rigid transform x_cam = R * x_obj + T.
///
/// Rotations are unit quaternions. Eigen stores them scalar-last, (x, y, z, w),
/// and every serialized form in this project uses the same order.
struct Pose {
  Quat rotation = Quat::Identity();
  Vec3 translation = Vec3::Zero();

  Pose() = default;
  Pose(const Quat& q, const Vec3& t);

  static Pose identity() { return {}; }

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
  Pose inverse() const;
  /// (this * other)(x) = this(other(x)).
  Pose compose(const Pose& other) const;
};

struct CameraIntrinsics {
  double fx = 500.0;
  double fy = 500.0;
  double cx = 319.5;
  double cy = 239.5;
  int width = 640;
  int height = 480;

  /// Throws InvalidArgument unless fx, fy > 0 and the principal point lies in the image.
  void validate() const;
};

/// Discretization of SO(3) into azimuth x elevation x in-plane bins.
///
/// Bin (az, el, ip) is the rotation Rz(ip) * Ry(el + 90deg) * Rz(az): a ZYZ
/// Euler sequence whose middle angle sweeps [0, 180] as elevation sweeps
/// [-90, 90]. At el = 0 the object z axis is perpendicular to the optical
/// axis; at el = +-90 the first and last angles act about the same axis, and
/// those gimbal-locked duplicates are kept. Quaternions are stored with w >= 0.
class RotationGrid {
 public:
  explicit RotationGrid(int step_deg);

  int step_deg() const { return step_deg_; }
  int azimuth_count() const { return n_az_; }
  int elevation_count() const { return n_el_; }
  int inplane_count() const { return n_ip_; }
  std::size_t size() const { return bins_.size(); }

  const Quat& bin(std::size_t index) const { return bins_.at(index); }
  const std::vector<Quat>& bins() const { return bins_; }

  struct Triple {
    int azimuth = 0;
    int elevation = 0;
    int inplane = 0;
    bool operator==(const Triple&) const = default;
  };

  std::size_t index_of(const Triple& t) const;
  Triple triple_of(std::size_t index) const;

  /// Angles of a bin in degrees (elevation in [-90, 90]).
  Eigen::Vector3d angles_deg(std::size_t index) const;

 private:
  int step_deg_;
  int n_az_;
  int n_el_;
  int n_ip_;
  std::vector<Quat> bins_;
};

/// Throws InvalidArgument unless step_deg is in [1, 180] and divides 180.
RotationGrid build_rotation_grid(int step_deg);

/// Rotation for Euler angles in degrees, using the grid convention.
Quat rotation_from_euler_deg(double azimuth, double elevation, double inplane);

/// Flips sign so that w >= 0 (first nonzero of w, x, y, z positive on ties).
Quat canonical_quaternion(const Quat& q);

enum class Frame { Camera, ObjectNormalized };

struct PointCloud {
  Frame frame = Frame::Camera;
  std::vector<Vec3> points;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

/// Pinhole projection. Throws BehindCamera for z <= 0.
Vec2 project(const Vec3& point, const CameraIntrinsics& intr);

/// Camera-frame ray (z = 1) through pixel (u, v).
Vec3 pixel_ray(double u, double v, const CameraIntrinsics& intr);

/// One point D(u,v) K^-1 (u, v, 1)^T per masked pixel with nonzero depth.
PointCloud backproject(const DepthImage& depth, const Mask& mask, const CameraIntrinsics& intr);

/// R^-1 (p - T) / size for each point; result is tagged ObjectNormalized.
PointCloud normalize_points(const PointCloud& cloud, const Pose& pose, double size);

/// Inverse of normalize_points: R (size * p) + T.
PointCloud denormalize_points(const PointCloud& cloud, const Pose& pose, double size);

/// Geodesic angle between two rotations in degrees, in [0, 180].
///
/// With a symmetry axis (unit vector in the object frame) the error is the
/// minimum over spins about that axis, which equals the angle between the
/// axis as mapped by each rotation. Inputs within 1e-6 of unit norm are
/// normalized; anything further off throws InvalidArgument.
double rotation_error_deg(const Quat& a, const Quat& b,
                          const std::optional<Vec3>& symmetry_axis = std::nullopt);

/// Minimal rotation taking the optical axis (0, 0, 1) onto the ray through t.
Quat viewing_ray_rotation(const Vec3& t);

/// Rotation vector (axis * angle) exponential map.
Quat exp_so3(const Vec3& omega);

}  // namespace shapetrack
