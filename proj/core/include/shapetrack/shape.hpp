#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "shapetrack/geometry.hpp"

namespace shapetrack {

enum class PrimitiveKind { Sphere, Box, RoundedBox, CappedCylinder, Capsule };

/// Half-space n . p <= offset in primitive coordinates (relative to center).
struct Cut {
  Vec3 normal = Vec3::UnitZ();  // unit
  double offset = 0.0;
  bool operator==(const Cut&) const = default;
};

/// One analytic SDF primitive in the normalized object frame. Cylinders and
/// capsules are aligned with the object z axis. `center` offsets the
/// primitive from the object origin and is not affected by normalization.
///
/// An optional cut intersects the primitive with a half-space,
/// max(sdf, n . p - offset). Every plain kind has 180 degree rotational
/// symmetries; a cut that trims one corner removes them. Cuts may not change
/// the bounding box.
struct Primitive {
  PrimitiveKind kind = PrimitiveKind::Sphere;
  Vec3 center = Vec3::Zero();
  Vec3 half_extents = Vec3::Constant(0.5);  // Box, RoundedBox (outer extents)
  double radius = 0.5;                      // Sphere, CappedCylinder, Capsule
  double half_length = 0.5;                 // CappedCylinder half height, Capsule segment half length
  double rounding = 0.0;                    // RoundedBox
  std::optional<Cut> cut;

  static Primitive sphere(double radius, const Vec3& center = Vec3::Zero());
  static Primitive box(const Vec3& half_extents, const Vec3& center = Vec3::Zero());
  static Primitive rounded_box(const Vec3& half_extents, double rounding,
                               const Vec3& center = Vec3::Zero());
  static Primitive cylinder(double radius, double half_height, const Vec3& center = Vec3::Zero());
  static Primitive capsule(double radius, double half_length, const Vec3& center = Vec3::Zero());

  /// Copy with the corner at sign pattern `corner` (entries +-1) trimmed by
  /// the plane through the points a fraction `depth` in [0, 1) of the way
  /// along each of its three bounding-box edges.
  Primitive with_corner_cut(const Vec3& corner, double depth) const;
  /// Same for the edge shared by the faces with signs `edge` (one entry 0,
  /// the edge direction): a slant a fraction `depth` across both faces.
  Primitive with_edge_cut(const Vec3& edge, double depth) const;
  Primitive with_cut(const Vec3& normal, double offset) const;

  double distance(const Vec3& x) const;
  /// Analytic (sub)gradient. Singular points: sphere center -> +z, capsule
  /// and cylinder axis -> +x radial, box interior ties -> lowest axis.
  Vec3 gradient(const Vec3& x) const;
  double distance_and_gradient(const Vec3& x, Vec3& grad) const;

  /// Half extents of the axis-aligned bounding box around `center`.
  Vec3 bounding_half_extents() const;
  double bbox_diagonal() const { return 2.0 * bounding_half_extents().norm(); }

  /// Copy with every length parameter scaled so bbox_diagonal() == 1.
  Primitive normalized() const;

  void validate() const;

 private:
  double base_distance(const Vec3& p) const;
  double base_distance_and_gradient(const Vec3& p, Vec3& grad) const;
  double face_min(int axis, double sign, const Vec3& n) const;
};

std::string to_string(PrimitiveKind kind);
PrimitiveKind primitive_kind_from_string(const std::string& name);

/// Category shape family: B >= 2 normalized primitives. Primitive 0 is the
/// canonical object of the category.
struct ShapeBasis {
  std::string category;
  std::vector<Primitive> primitives;
  std::optional<Vec3> symmetry_axis;

  /// Normalizes every primitive and validates. Throws InvalidArgument.
  ShapeBasis(std::string category, std::vector<Primitive> primitives,
             std::optional<Vec3> symmetry_axis = std::nullopt);
  ShapeBasis() = default;

  std::size_t size() const { return primitives.size(); }
  /// Radius of a ball about the origin containing every primitive.
  double bounding_radius() const;

  /// Per-primitive distances and gradients at x.
  void evaluate(const Vec3& x, Eigen::Ref<Eigen::VectorXd> values, Vec3* grads) const;
};

/// Blend weights softmax(raw) over a basis.
class ShapeLatent {
 public:
  ShapeLatent() = default;
  explicit ShapeLatent(Eigen::VectorXd raw);

  static ShapeLatent uniform(std::size_t basis_size);

  const Eigen::VectorXd& raw() const { return raw_; }
  const Eigen::VectorXd& weights() const { return weights_; }
  std::size_t size() const { return static_cast<std::size_t>(raw_.size()); }

  bool operator==(const ShapeLatent& o) const { return raw_ == o.raw_; }

 private:
  Eigen::VectorXd raw_;
  Eigen::VectorXd weights_;
};

/// sum_i w_i * SDF_i(x). Negative inside.
double sdf_eval(const ShapeBasis& basis, const ShapeLatent& latent, const Vec3& x);
Vec3 sdf_gradient(const ShapeBasis& basis, const ShapeLatent& latent, const Vec3& x);
double sdf_eval_with_gradient(const ShapeBasis& basis, const ShapeLatent& latent, const Vec3& x,
                              Vec3& grad);

/// Exactly n points on the zero level set (|sdf| < 1e-6), found by tracing
/// rays inward from a bounding sphere and Newton-projecting the hits.
/// Deterministic in `seed`. Throws SurfaceExtractionError on budget exhaustion.
PointCloud decode_surface(const ShapeBasis& basis, const ShapeLatent& latent, std::size_t n,
                          std::uint64_t seed);

/// Raw latent 10 * e_0: weight ~0.9999 on the canonical primitive.
ShapeLatent canonical_latent(const ShapeBasis& basis);

/// Built-in bases: bottle, bowl, camera, can, laptop, mug.
ShapeBasis builtin_basis(const std::string& category);
std::vector<std::string> builtin_categories();

nlohmann::json basis_to_json(const ShapeBasis& basis);
/// Primitive lengths in the file are rescaled to unit bbox diagonal on load.
ShapeBasis basis_from_json(const nlohmann::json& j);

nlohmann::json latent_to_json(const ShapeLatent& latent);
ShapeLatent latent_from_json(const nlohmann::json& j);

}  // namespace shapetrack
