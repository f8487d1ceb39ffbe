#include "shapetrack/shape.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "shapetrack/error.hpp"

namespace shapetrack {

namespace {

double sign_of(double v) { return v < 0.0 ? -1.0 : 1.0; }

// Exact SDF of an axis-aligned box with half extents h about the origin.
double box_distance(const Vec3& p, const Vec3& h, Vec3* grad) {
  const Vec3 q = p.cwiseAbs() - h;
  Eigen::Index k = 0;
  const double qmax = q.maxCoeff(&k);
  if (qmax > 0.0) {
    const Vec3 m = q.cwiseMax(0.0);
    const double n = m.norm();
    if (grad) {
      for (int i = 0; i < 3; ++i) (*grad)[i] = sign_of(p[i]) * m[i] / n;
    }
    return n;
  }
  if (grad) {
    *grad = Vec3::Zero();
    (*grad)[k] = sign_of(p[k]);
  }
  return qmax;
}

// 2D counterpart used by the capped cylinder: q = (radial, axial) offsets.
double box2_distance(double qr, double qz, double& gr, double& gz) {
  if (qr > 0.0 || qz > 0.0) {
    const double mr = std::max(qr, 0.0);
    const double mz = std::max(qz, 0.0);
    const double n = std::hypot(mr, mz);
    gr = mr / n;
    gz = mz / n;
    return n;
  }
  if (qr >= qz) {
    gr = 1.0;
    gz = 0.0;
    return qr;
  }
  gr = 0.0;
  gz = 1.0;
  return qz;
}

}  // namespace

Primitive Primitive::sphere(double radius, const Vec3& center) {
  Primitive p;
  p.kind = PrimitiveKind::Sphere;
  p.radius = radius;
  p.center = center;
  return p;
}

Primitive Primitive::box(const Vec3& half_extents, const Vec3& center) {
  Primitive p;
  p.kind = PrimitiveKind::Box;
  p.half_extents = half_extents;
  p.center = center;
  return p;
}

Primitive Primitive::rounded_box(const Vec3& half_extents, double rounding, const Vec3& center) {
  Primitive p;
  p.kind = PrimitiveKind::RoundedBox;
  p.half_extents = half_extents;
  p.rounding = rounding;
  p.center = center;
  return p;
}

Primitive Primitive::cylinder(double radius, double half_height, const Vec3& center) {
  Primitive p;
  p.kind = PrimitiveKind::CappedCylinder;
  p.radius = radius;
  p.half_length = half_height;
  p.center = center;
  return p;
}

Primitive Primitive::capsule(double radius, double half_length, const Vec3& center) {
  Primitive p;
  p.kind = PrimitiveKind::Capsule;
  p.radius = radius;
  p.half_length = half_length;
  p.center = center;
  return p;
}

double Primitive::distance_and_gradient(const Vec3& x, Vec3& grad) const {
  const Vec3 p = x - center;
  const double d = base_distance_and_gradient(p, grad);
  if (cut) {
    const double c = cut->normal.dot(p) - cut->offset;
    if (c > d) {
      grad = cut->normal;
      return c;
    }
  }
  return d;
}

double Primitive::base_distance_and_gradient(const Vec3& p, Vec3& grad) const {
  switch (kind) {
    case PrimitiveKind::Sphere: {
      const double n = p.norm();
      grad = n > 0.0 ? Vec3(p / n) : Vec3::UnitZ();
      return n - radius;
    }
    case PrimitiveKind::Box:
      return box_distance(p, half_extents, &grad);
    case PrimitiveKind::RoundedBox:
      return box_distance(p, half_extents.array() - rounding, &grad) - rounding;
    case PrimitiveKind::CappedCylinder: {
      const double rho = std::hypot(p.x(), p.y());
      double gr = 0.0;
      double gz = 0.0;
      const double d = box2_distance(rho - radius, std::abs(p.z()) - half_length, gr, gz);
      const double ux = rho > 0.0 ? p.x() / rho : 1.0;
      const double uy = rho > 0.0 ? p.y() / rho : 0.0;
      grad = Vec3(gr * ux, gr * uy, gz * sign_of(p.z()));
      return d;
    }
    case PrimitiveKind::Capsule: {
      const Vec3 q(p.x(), p.y(), p.z() - std::clamp(p.z(), -half_length, half_length));
      const double n = q.norm();
      grad = n > 0.0 ? Vec3(q / n) : Vec3::UnitX();
      return n - radius;
    }
  }
  return 0.0;
}

double Primitive::distance(const Vec3& x) const {
  const Vec3 p = x - center;
  const double d = base_distance(p);
  return cut ? std::max(d, cut->normal.dot(p) - cut->offset) : d;
}

double Primitive::base_distance(const Vec3& p) const {
  switch (kind) {
    case PrimitiveKind::Sphere:
      return p.norm() - radius;
    case PrimitiveKind::Box:
      return box_distance(p, half_extents, nullptr);
    case PrimitiveKind::RoundedBox:
      return box_distance(p, half_extents.array() - rounding, nullptr) - rounding;
    case PrimitiveKind::CappedCylinder: {
      double gr = 0.0;
      double gz = 0.0;
      return box2_distance(std::hypot(p.x(), p.y()) - radius, std::abs(p.z()) - half_length, gr, gz);
    }
    case PrimitiveKind::Capsule: {
      const Vec3 q(p.x(), p.y(), p.z() - std::clamp(p.z(), -half_length, half_length));
      return q.norm() - radius;
    }
  }
  return 0.0;
}

Vec3 Primitive::gradient(const Vec3& x) const {
  Vec3 g;
  distance_and_gradient(x, g);
  return g;
}

Vec3 Primitive::bounding_half_extents() const {
  switch (kind) {
    case PrimitiveKind::Sphere:
      return Vec3::Constant(radius);
    case PrimitiveKind::Box:
    case PrimitiveKind::RoundedBox:
      return half_extents;
    case PrimitiveKind::CappedCylinder:
      return {radius, radius, half_length};
    case PrimitiveKind::Capsule:
      return {radius, radius, half_length + radius};
  }
  return Vec3::Zero();
}

Primitive Primitive::normalized() const {
  validate();
  const double k = 1.0 / bbox_diagonal();
  Primitive p = *this;
  p.half_extents *= k;
  p.radius *= k;
  p.half_length *= k;
  p.rounding *= k;
  if (p.cut) p.cut->offset *= k;
  return p;
}

Primitive Primitive::with_corner_cut(const Vec3& corner, double depth) const {
  if (!(depth >= 0.0 && depth < 1.0)) throw InvalidArgument("corner cut: depth must be in [0, 1)");
  const Vec3 h = bounding_half_extents();
  const Vec3 s = corner.unaryExpr([](double v) { return v < 0.0 ? -1.0 : 1.0; });
  const Vec3 inv = s.cwiseQuotient(h);
  const double norm = inv.norm();
  return with_cut(inv / norm, (3.0 - 2.0 * depth) / norm);
}

Primitive Primitive::with_edge_cut(const Vec3& edge, double depth) const {
  if (!(depth >= 0.0 && depth < 1.0)) throw InvalidArgument("edge cut: depth must be in [0, 1)");
  const Vec3 h = bounding_half_extents();
  Vec3 inv = Vec3::Zero();
  int axes = 0;
  for (int a = 0; a < 3; ++a) {
    if (edge[a] == 0.0) continue;
    inv[a] = (edge[a] < 0.0 ? -1.0 : 1.0) / h[a];
    ++axes;
  }
  if (axes != 2) throw InvalidArgument("edge cut: exactly two nonzero signs expected");
  const double norm = inv.norm();
  return with_cut(inv / norm, (2.0 - 2.0 * depth) / norm);
}

Primitive Primitive::with_cut(const Vec3& normal, double offset) const {
  if (!(normal.norm() > 0.0) || !normal.allFinite()) throw InvalidArgument("cut: normal must be nonzero");
  Primitive p = *this;
  p.cut = Cut{normal.normalized(), offset};
  p.validate();
  return p;
}

double Primitive::face_min(int axis, double sign, const Vec3& n) const {
  // Minimum of n . p over the primitive's points on the bounding-box face
  // p[axis] = sign * H[axis].
  const Vec3 h = bounding_half_extents();
  switch (kind) {
    case PrimitiveKind::Sphere:
      return n[axis] * sign * radius;
    case PrimitiveKind::Box:
    case PrimitiveKind::RoundedBox: {
      const Vec3 span = kind == PrimitiveKind::Box ? half_extents : Vec3(half_extents.array() - rounding);
      double v = n[axis] * sign * h[axis];
      for (int b = 0; b < 3; ++b) {
        if (b != axis) v -= std::abs(n[b]) * span[b];
      }
      return v;
    }
    case PrimitiveKind::CappedCylinder:
    case PrimitiveKind::Capsule: {
      if (axis == 2) {
        if (kind == PrimitiveKind::Capsule) return n.z() * sign * h.z();
        return n.z() * sign * h.z() - radius * std::hypot(n.x(), n.y());
      }
      return n[axis] * sign * radius - std::abs(n.z()) * half_length;
    }
  }
  return 0.0;
}

void Primitive::validate() const {
  if (!center.allFinite()) throw InvalidArgument("primitive: non-finite center");
  switch (kind) {
    case PrimitiveKind::Sphere:
      if (!(radius > 0.0)) throw InvalidArgument("sphere: radius must be positive");
      break;
    case PrimitiveKind::RoundedBox:
      if (!(rounding >= 0.0) || !(rounding < half_extents.minCoeff())) {
        throw InvalidArgument("rounded box: rounding must be in [0, min half extent)");
      }
      [[fallthrough]];
    case PrimitiveKind::Box:
      if (!(half_extents.minCoeff() > 0.0)) throw InvalidArgument("box: half extents must be positive");
      break;
    case PrimitiveKind::CappedCylinder:
      if (!(radius > 0.0) || !(half_length > 0.0)) {
        throw InvalidArgument("cylinder: radius and half height must be positive");
      }
      break;
    case PrimitiveKind::Capsule:
      if (!(radius > 0.0) || !(half_length >= 0.0)) {
        throw InvalidArgument("capsule: radius must be positive, half length non-negative");
      }
      break;
  }
  if (cut) {
    if (!cut->normal.allFinite() || std::abs(cut->normal.norm() - 1.0) > 1e-9 || !std::isfinite(cut->offset)) {
      throw InvalidArgument("cut: normal must be unit and offset finite");
    }
    for (int axis = 0; axis < 3; ++axis) {
      for (double sign : {-1.0, 1.0}) {
        if (!(face_min(axis, sign, cut->normal) < cut->offset)) {
          throw InvalidArgument("cut: plane removes a whole bounding-box face");
        }
      }
    }
  }
}

std::string to_string(PrimitiveKind kind) {
  switch (kind) {
    case PrimitiveKind::Sphere: return "sphere";
    case PrimitiveKind::Box: return "box";
    case PrimitiveKind::RoundedBox: return "rounded_box";
    case PrimitiveKind::CappedCylinder: return "cylinder";
    case PrimitiveKind::Capsule: return "capsule";
  }
  return "unknown";
}

PrimitiveKind primitive_kind_from_string(const std::string& name) {
  if (name == "sphere") return PrimitiveKind::Sphere;
  if (name == "box") return PrimitiveKind::Box;
  if (name == "rounded_box") return PrimitiveKind::RoundedBox;
  if (name == "cylinder") return PrimitiveKind::CappedCylinder;
  if (name == "capsule") return PrimitiveKind::Capsule;
  throw InvalidArgument("unknown primitive type '" + name + "'");
}

ShapeBasis::ShapeBasis(std::string category_, std::vector<Primitive> primitives_,
                       std::optional<Vec3> symmetry_axis_)
    : category(std::move(category_)), symmetry_axis(std::move(symmetry_axis_)) {
  if (primitives_.size() < 2) throw InvalidArgument("shape basis needs at least two primitives");
  primitives.reserve(primitives_.size());
  for (const Primitive& p : primitives_) primitives.push_back(p.normalized());
  if (symmetry_axis) {
    if (!(symmetry_axis->norm() > 0.0)) throw InvalidArgument("symmetry axis must be nonzero");
    symmetry_axis->normalize();
  }
}

double ShapeBasis::bounding_radius() const {
  double r = 0.0;
  for (const Primitive& p : primitives) {
    r = std::max(r, p.center.norm() + p.bounding_half_extents().norm());
  }
  return r;
}

void ShapeBasis::evaluate(const Vec3& x, Eigen::Ref<Eigen::VectorXd> values, Vec3* grads) const {
  for (std::size_t i = 0; i < primitives.size(); ++i) {
    if (grads) {
      values[static_cast<Eigen::Index>(i)] = primitives[i].distance_and_gradient(x, grads[i]);
    } else {
      values[static_cast<Eigen::Index>(i)] = primitives[i].distance(x);
    }
  }
}

ShapeLatent::ShapeLatent(Eigen::VectorXd raw) : raw_(std::move(raw)) {
  if (raw_.size() == 0 || !raw_.allFinite()) throw InvalidArgument("latent: raw vector must be finite and nonempty");
  const double m = raw_.maxCoeff();
  weights_ = (raw_.array() - m).exp();
  weights_ /= weights_.sum();
}

ShapeLatent ShapeLatent::uniform(std::size_t basis_size) {
  return ShapeLatent(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(basis_size)));
}

namespace {

void check_sizes(const ShapeBasis& basis, const ShapeLatent& latent) {
  if (basis.size() != latent.size()) {
    throw InvalidArgument("latent size " + std::to_string(latent.size()) +
                          " does not match basis size " + std::to_string(basis.size()));
  }
}

}  // namespace

double sdf_eval(const ShapeBasis& basis, const ShapeLatent& latent, const Vec3& x) {
  check_sizes(basis, latent);
  const Eigen::VectorXd& w = latent.weights();
  double d = 0.0;
  for (std::size_t i = 0; i < basis.size(); ++i) {
    d += w[static_cast<Eigen::Index>(i)] * basis.primitives[i].distance(x);
  }
  return d;
}

double sdf_eval_with_gradient(const ShapeBasis& basis, const ShapeLatent& latent, const Vec3& x,
                              Vec3& grad) {
  check_sizes(basis, latent);
  const Eigen::VectorXd& w = latent.weights();
  double d = 0.0;
  grad.setZero();
  Vec3 g;
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const double wi = w[static_cast<Eigen::Index>(i)];
    d += wi * basis.primitives[i].distance_and_gradient(x, g);
    grad += wi * g;
  }
  return d;
}

Vec3 sdf_gradient(const ShapeBasis& basis, const ShapeLatent& latent, const Vec3& x) {
  Vec3 g;
  sdf_eval_with_gradient(basis, latent, x, g);
  return g;
}

PointCloud decode_surface(const ShapeBasis& basis, const ShapeLatent& latent, std::size_t n,
                          std::uint64_t seed) {
  check_sizes(basis, latent);
  if (n == 0) throw InvalidArgument("decode_surface: point count must be positive");

  constexpr double kHitEps = 1e-7;
  constexpr double kAcceptEps = 1e-6;
  const double outer = basis.bounding_radius() + 0.05;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> jitter(-0.1, 0.1);

  PointCloud cloud;
  cloud.frame = Frame::ObjectNormalized;
  cloud.points.reserve(n);
  const std::size_t budget = 100 * n + 100;
  for (std::size_t attempt = 0; attempt < budget && cloud.size() < n; ++attempt) {
    Vec3 dir(gauss(rng), gauss(rng), gauss(rng));
    if (dir.norm() < 1e-9) continue;
    dir.normalize();
    const Vec3 origin = outer * dir;
    const Vec3 target(jitter(rng) * outer, jitter(rng) * outer, jitter(rng) * outer);
    const Vec3 ray = (target - origin).normalized();

    // Sphere trace; the blended field is 1-Lipschitz so steps never overshoot.
    double t = 0.0;
    Vec3 x = origin;
    bool hit = false;
    for (int step = 0; step < 512 && t < 2.0 * outer; ++step) {
      x = origin + t * ray;
      const double d = sdf_eval(basis, latent, x);
      if (d < kHitEps) {
        hit = true;
        break;
      }
      t += std::max(d, 1e-7);
    }
    if (!hit) continue;

    Vec3 g;
    double d = sdf_eval_with_gradient(basis, latent, x, g);
    for (int it = 0; it < 30 && std::abs(d) > 1e-12; ++it) {
      const double g2 = g.squaredNorm();
      if (g2 < 1e-12) break;
      x -= (d / g2) * g;
      d = sdf_eval_with_gradient(basis, latent, x, g);
    }
    if (std::abs(d) < kAcceptEps && x.allFinite()) cloud.points.push_back(x);
  }
  if (cloud.size() < n) {
    throw SurfaceExtractionError("decode_surface: found " + std::to_string(cloud.size()) + " of " +
                                 std::to_string(n) + " surface points");
  }
  return cloud;
}

ShapeLatent canonical_latent(const ShapeBasis& basis) {
  Eigen::VectorXd raw = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(basis.size()));
  raw[0] = 10.0;
  return ShapeLatent(raw);
}

std::vector<std::string> builtin_categories() {
  return {"bottle", "bowl", "camera", "can", "laptop", "mug"};
}

ShapeBasis builtin_basis(const std::string& category) {
  using P = Primitive;
  const Vec3 z = Vec3::UnitZ();
  // Lengths below are pre-normalization; centers are in normalized units.
  if (category == "bottle") {
    return ShapeBasis(category,
                      {P::capsule(0.30, 0.90), P::cylinder(0.32, 1.00), P::capsule(0.45, 0.55),
                       P::cylinder(0.22, 1.00)},
                      z);
  }
  if (category == "bowl") {
    return ShapeBasis(category,
                      {P::cylinder(1.00, 0.40), P::sphere(1.0), P::cylinder(1.00, 0.20),
                       P::capsule(0.60, 0.05)},
                      z);
  }
  if (category == "can") {
    return ShapeBasis(category,
                      {P::cylinder(0.50, 0.75), P::cylinder(0.50, 0.45), P::capsule(0.50, 0.45),
                       P::cylinder(0.50, 1.10)},
                      z);
  }
  // Asymmetric categories trim one corner so no rotation maps the shape
  // onto itself.
  const Vec3 corner(1.0, 1.0, 1.0);
  if (category == "camera") {
    const Vec3 edge(1.0, 0.0, 1.0);
    return ShapeBasis(category,
                      {P::rounded_box({0.50, 0.28, 0.36}, 0.05, {0.08, -0.05, 0.04}).with_edge_cut(edge, 0.60),
                       P::box({0.50, 0.24, 0.42}, {0.06, -0.06, 0.06}).with_edge_cut(edge, 0.45),
                       P::rounded_box({0.44, 0.36, 0.34}, 0.12, {0.09, -0.03, 0.02}).with_corner_cut(corner, 0.70),
                       P::box({0.56, 0.30, 0.28}, {0.05, -0.07, 0.05}).with_edge_cut(edge, 0.75)});
  }
  if (category == "laptop") {
    return ShapeBasis(category,
                      {P::box({0.50, 0.38, 0.08}, {0.06, 0.08, -0.04}).with_corner_cut(corner, 0.40),
                       P::rounded_box({0.50, 0.44, 0.10}, 0.04, {0.05, 0.07, -0.05}).with_corner_cut(corner, 0.30),
                       P::box({0.56, 0.32, 0.14}, {0.07, 0.06, -0.02}).with_corner_cut(corner, 0.50),
                       P::box({0.46, 0.40, 0.20}, {0.04, 0.09, -0.06}).with_corner_cut(corner, 0.35)});
  }
  if (category == "mug") {
    // Cylinders lose their spin symmetry to a plane tilted across the rim.
    const Vec3 tilt = Vec3(1.0, 0.0, 1.0).normalized();
    auto rim_cut = [&](const Primitive& p, double depth) {
      const double support = p.kind == PrimitiveKind::Capsule
                                 ? p.radius + p.half_length * tilt.z()
                                 : p.radius * tilt.x() + p.half_length * tilt.z();
      return p.with_cut(tilt, support - depth * p.radius);
    };
    return ShapeBasis(category,
                      {rim_cut(P::cylinder(0.40, 0.45, {-0.09, 0.04, 0.03}), 0.35),
                       rim_cut(P::capsule(0.42, 0.20, {-0.07, 0.05, 0.01}), 0.25),
                       P::rounded_box({0.52, 0.40, 0.45}, 0.15, {-0.05, 0.03, 0.03}).with_corner_cut(corner, 0.45),
                       rim_cut(P::cylinder(0.46, 0.32, {-0.10, 0.02, 0.02}), 0.45)});
  }
  throw InvalidArgument("unknown category '" + category + "'");
}

namespace {

nlohmann::json vec_json(const Vec3& v) { return nlohmann::json::array({v.x(), v.y(), v.z()}); }

Vec3 vec_from(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3) throw InvalidArgument("expected a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace

nlohmann::json basis_to_json(const ShapeBasis& basis) {
  nlohmann::json prims = nlohmann::json::array();
  for (const Primitive& p : basis.primitives) {
    nlohmann::json e{{"type", to_string(p.kind)}, {"center", vec_json(p.center)}};
    switch (p.kind) {
      case PrimitiveKind::Sphere:
        e["radius"] = p.radius;
        break;
      case PrimitiveKind::RoundedBox:
        e["rounding"] = p.rounding;
        [[fallthrough]];
      case PrimitiveKind::Box:
        e["half_extents"] = vec_json(p.half_extents);
        break;
      case PrimitiveKind::CappedCylinder:
      case PrimitiveKind::Capsule:
        e["radius"] = p.radius;
        e["half_length"] = p.half_length;
        break;
    }
    if (p.cut) e["cut"] = {{"normal", vec_json(p.cut->normal)}, {"offset", p.cut->offset}};
    prims.push_back(std::move(e));
  }
  nlohmann::json j{{"category", basis.category}, {"primitives", std::move(prims)}};
  j["symmetry_axis"] = basis.symmetry_axis ? vec_json(*basis.symmetry_axis) : nlohmann::json(nullptr);
  return j;
}

ShapeBasis basis_from_json(const nlohmann::json& j) {
  std::vector<Primitive> prims;
  for (const auto& e : j.at("primitives")) {
    Primitive p;
    p.kind = primitive_kind_from_string(e.at("type").get<std::string>());
    p.center = e.contains("center") ? vec_from(e["center"]) : Vec3::Zero();
    switch (p.kind) {
      case PrimitiveKind::Sphere:
        p.radius = e.at("radius").get<double>();
        break;
      case PrimitiveKind::RoundedBox:
        p.rounding = e.at("rounding").get<double>();
        [[fallthrough]];
      case PrimitiveKind::Box:
        p.half_extents = vec_from(e.at("half_extents"));
        break;
      case PrimitiveKind::CappedCylinder:
      case PrimitiveKind::Capsule:
        p.radius = e.at("radius").get<double>();
        p.half_length = e.at("half_length").get<double>();
        break;
    }
    if (e.contains("cut")) {
      const auto& c = e.at("cut");
      p = p.with_cut(vec_from(c.at("normal")), c.at("offset").get<double>());
    }
    prims.push_back(p);
  }
  std::optional<Vec3> axis;
  if (j.contains("symmetry_axis") && !j["symmetry_axis"].is_null()) axis = vec_from(j["symmetry_axis"]);
  return ShapeBasis(j.at("category").get<std::string>(), std::move(prims), axis);
}

nlohmann::json latent_to_json(const ShapeLatent& latent) {
  return nlohmann::json(std::vector<double>(latent.raw().data(), latent.raw().data() + latent.size()));
}

ShapeLatent latent_from_json(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return ShapeLatent(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
}

}  // namespace shapetrack
