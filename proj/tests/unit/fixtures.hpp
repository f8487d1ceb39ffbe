#pragma once

#include <algorithm>
#include <cmath>
#include <random>

#include "shapetrack/filter.hpp"
#include "shapetrack/geometry.hpp"
#include "shapetrack/render.hpp"
#include "shapetrack/shape.hpp"

namespace shapetrack::testing {

// Two identical spheres, so any latent decodes to the exact sphere SDF.
inline ShapeBasis sphere_basis() {
  return ShapeBasis("sphere", {Primitive::sphere(0.5), Primitive::sphere(0.5)});
}

inline Quat random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  return Quat(g(rng), g(rng), g(rng), g(rng)).normalized();
}

inline Vec3 random_in_ball(std::mt19937_64& rng, double radius) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  while (true) {
    const Vec3 p(u(rng), u(rng), u(rng));
    if (p.squaredNorm() <= 1.0) return radius * p;
  }
}

inline ShapeLatent random_latent(std::mt19937_64& rng, std::size_t n, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Eigen::VectorXd raw(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < raw.size(); ++i) raw[i] = g(rng);
  return ShapeLatent(raw);
}

// Weight ~1 on primitive i.
inline ShapeLatent one_hot(std::size_t n, std::size_t i, double scale = 10.0) {
  Eigen::VectorXd raw = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  raw[static_cast<Eigen::Index>(i)] = scale;
  return ShapeLatent(raw);
}

// Distance from x to the nearest non-smooth locus of a primitive, in the
// primitive's own frame. Large for smooth kinds.
inline double edge_clearance(const Primitive& p, const Vec3& x) {
  const Vec3 q = x - p.center;
  double clear = 1e9;
  if (p.cut) {
    // max(base, plane) switches branch where the two agree.
    Primitive plain = p;
    plain.cut.reset();
    clear = std::min(clear, std::abs(plain.distance(x) - (p.cut->normal.dot(q) - p.cut->offset)));
  }
  switch (p.kind) {
    case PrimitiveKind::Sphere:
      clear = std::min(clear, q.norm());
      break;
    case PrimitiveKind::Box:
    case PrimitiveKind::RoundedBox: {
      const Vec3 inner = p.half_extents - Vec3::Constant(p.rounding);
      const Vec3 d = q.cwiseAbs() - inner;
      // Interior medial planes and exterior edge loci both sit where two
      // components of d tie (inside) or where a component crosses 0 (outside).
      // |q| also folds on the mid-planes.
      for (int i = 0; i < 3; ++i) {
        clear = std::min({clear, std::abs(d[i]), std::abs(q[i])});
        for (int j = i + 1; j < 3; ++j) clear = std::min(clear, std::abs(d[i] - d[j]));
      }
      break;
    }
    case PrimitiveKind::CappedCylinder: {
      const double r = std::hypot(q.x(), q.y());
      const double dr = r - p.radius;
      const double dz = std::abs(q.z()) - p.half_length;
      clear = std::min({clear, r, std::abs(dr), std::abs(dz), std::abs(dr - dz), std::abs(q.z())});
      break;
    }
    case PrimitiveKind::Capsule:
      clear = std::min(clear, std::hypot(q.x(), q.y()));
      clear = std::min(clear, std::abs(std::abs(q.z()) - p.half_length));
      break;
  }
  return clear;
}

inline double basis_clearance(const ShapeBasis& b, const Vec3& x) {
  double c = 1e9;
  for (const Primitive& p : b.primitives) c = std::min(c, edge_clearance(p, x));
  return c;
}

struct RenderedFrame {
  DepthImage depth;
  Detection detection;
};

// Noise-free render with the visible pixels as the detection mask.
inline RenderedFrame render_frame(const ShapeBasis& basis, const ShapeLatent& latent, const Pose& pose, double size,
                          const CameraIntrinsics& intr) {
  RenderedFrame f;
  f.depth = render_depth(basis, latent, pose, size, intr);
  f.detection.mask = Mask(intr.width, intr.height);
  for (int v = 0; v < intr.height; ++v)
    for (int u = 0; u < intr.width; ++u) f.detection.mask.set(u, v, f.depth.at(u, v) > 0.0f);
  f.detection.bbox = mask_bbox(f.detection.mask);
  return f;
}

inline CameraIntrinsics small_camera() {
  CameraIntrinsics intr;
  intr.width = 160;
  intr.height = 120;
  intr.fx = 200.0;
  intr.fy = 200.0;
  intr.cx = 79.5;
  intr.cy = 59.5;
  return intr;
}

}  // namespace shapetrack::testing
