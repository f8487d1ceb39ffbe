#pragma once

#include <vector>

#include "shapetrack/geometry.hpp"
#include "shapetrack/image.hpp"
#include "shapetrack/shape.hpp"

namespace shapetrack {

/// Square crop in pixel coordinates; integer pixel u has its center at u.
struct RoI {
  Vec2 center = Vec2::Zero();
  double side = 1.0;
};

/// S x S crop of depth normalized into [0, 1]; 0 marks missing depth.
struct NormalizedDepthMap {
  int resolution = 0;
  std::vector<float> data;

  float at(int x, int y) const { return data[static_cast<std::size_t>(y) * resolution + x]; }
  bool operator==(const NormalizedDepthMap&) const = default;
};

/// Geometry shared by codebook rendering and observation cropping.
///
/// The canonical view places a unit-size object at (0, 0, z0). A crop spans
/// `crop_extent` object sizes, so an object of size s at depth z covers
/// fx * crop_extent * s / z pixels. Codebook renders use a dedicated
/// S x S camera whose canonical crop is the whole image.
struct RenderConfig {
  double z0 = 4.0;
  double crop_extent = 1.3;
  int resolution = 64;

  void validate() const;
  /// Intrinsics of the S x S canonical render camera.
  CameraIntrinsics canonical_camera() const;
  /// Canonical crop side w0 (pixels at depth z0) for an observation camera.
  double canonical_crop(const CameraIntrinsics& intr) const { return intr.fx * crop_extent / z0; }

  bool operator==(const RenderConfig&) const = default;
};

/// Sphere-traced depth of the posed, scaled shape. A ray hits when the world
/// distance drops below 1e-4 * size within 128 steps; otherwise the pixel is 0.
/// Throws BehindCamera unless T.z - size/2 > 0.01.
DepthImage render_depth(const ShapeBasis& basis, const ShapeLatent& latent, const Pose& pose,
                        double size, const CameraIntrinsics& intr);

/// Center = project(T); side = w0 * s * z0 / T.z.
RoI roi_from_state(const Vec3& translation, double size, const CameraIntrinsics& intr, double z0,
                   double w0);

/// Bilinear crop to S x S followed by clamp((D - z)/s + 0.5, 0, 1). Samples
/// whose valid bilinear weight is below one half, or that fall outside the
/// image, are 0.
NormalizedDepthMap normalize_depth_roi(const DepthImage& depth, const RoI& roi, double z, double s,
                                       int resolution);

/// Canonical normalized view of the unit-size shape at rotation q.
NormalizedDepthMap render_normalized(const ShapeBasis& basis, const ShapeLatent& latent,
                                     const Quat& rotation, const RenderConfig& cfg);

}  // namespace shapetrack
