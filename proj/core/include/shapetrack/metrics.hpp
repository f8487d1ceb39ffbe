#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <vector>

#include "shapetrack/geometry.hpp"
#include "shapetrack/shape.hpp"

namespace shapetrack {

/// Rotation error below 5 degrees and translation error below 5 cm.
bool metric_5deg5cm(double rotation_error_deg, double translation_error_m);
bool metric_5deg5cm(const Pose& est, const Pose& gt, const std::optional<Vec3>& symmetry_axis = std::nullopt);

double translation_error_m(const Pose& est, const Pose& gt);

struct OrientedBox {
  Vec3 center = Vec3::Zero();
  Quat rotation = Quat::Identity();
  Vec3 half_extents = Vec3::Constant(0.5);

  bool contains(const Vec3& x) const;
  std::vector<Vec3> corners() const;
};

/// IoU by stratified sampling: cell centers of a 64^3 grid over the union's
/// AABB, with 4^3 sub-samples in cells whose corners disagree about either
/// box. Absolute error well under 0.01. Throws InvalidArgument for
/// non-positive extents.
double iou3d(const OrientedBox& a, const OrientedBox& b);

/// Box of an object-frame AABB [lo, hi] scaled by size and posed.
OrientedBox posed_box(const Vec3& lo, const Vec3& hi, const Pose& pose, double size);

/// Object-frame AABB of a point set.
std::pair<Vec3, Vec3> bounds(const PointCloud& cloud);

/// 3D bounding box of the posed, scaled shape: the object-frame AABB of
/// decoded surface points.
OrientedBox shape_box(const ShapeBasis& basis, const ShapeLatent& latent, const Pose& pose, double size,
                      std::size_t samples = 1000, std::uint64_t seed = 7);

/// mean_a min_b |a - b|^2 + mean_b min_a |a - b|^2 using a kd-tree.
/// Throws InvalidArgument for an empty cloud.
double chamfer(const PointCloud& a, const PointCloud& b);

/// O(|A| |B|) reference for chamfer().
double chamfer_brute_force(const PointCloud& a, const PointCloud& b);

/// Exact nearest neighbour in a static point set.
class KdTree {
 public:
  explicit KdTree(const std::vector<Vec3>& points);
  /// Index of a nearest point (lowest index on ties) and its squared distance.
  std::pair<std::size_t, double> nearest(const Vec3& q) const;

 private:
  struct Node {
    std::size_t point;
    int axis;
    int left = -1;
    int right = -1;
  };
  int build(std::vector<std::size_t>& idx, std::size_t lo, std::size_t hi, int depth);
  void search(int node, const Vec3& q, std::size_t& best, double& best_d2) const;

  std::vector<Vec3> points_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

template <typename T>
double median(std::vector<T> values) {
  if (values.empty()) return 0.0;
  const std::size_t n = values.size();
  std::sort(values.begin(), values.end());
  return n % 2 == 1 ? static_cast<double>(values[n / 2])
                    : 0.5 * (static_cast<double>(values[n / 2 - 1]) + static_cast<double>(values[n / 2]));
}

}  // namespace shapetrack
