#include "shapetrack/refine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "shapetrack/error.hpp"

namespace shapetrack {

namespace {

constexpr double kArmijo = 1e-4;
constexpr std::size_t kMinPoints = 10;

double rho(double r, ResidualLoss loss, double delta) {
  const double a = std::abs(r);
  if (loss == ResidualLoss::L1) return a;
  return a <= delta ? 0.5 * r * r / delta : a - 0.5 * delta;
}

double rho_prime(double r, ResidualLoss loss, double delta) {
  if (loss == ResidualLoss::Huber && std::abs(r) <= delta) return r / delta;
  return r > 0.0 ? 1.0 : (r < 0.0 ? -1.0 : 0.0);
}

void require_points(const PointCloud& cloud, const char* what) {
  if (cloud.size() < kMinPoints) {
    throw InsufficientPoints(std::string(what) + ": need at least 10 points, got " +
                             std::to_string(cloud.size()));
  }
}

}  // namespace

void RefineConfig::validate() const {
  if (steps < 1 || rounds < 1 || interval < 1) throw InvalidArgument("refine: F, R, K must be >= 1");
  if (!(latent_reg >= 0.0)) throw InvalidArgument("refine: lambda must be non-negative");
  if (!(translation_step > 0.0) || !(rotation_step > 0.0) || !(size_step > 0.0) || !(latent_step > 0.0)) {
    throw InvalidArgument("refine: step sizes must be positive");
  }
  if (!(huber_delta > 0.0)) throw InvalidArgument("refine: huber_delta must be positive");
  if (latent_iterations < 1) throw InvalidArgument("refine: latent_iterations must be >= 1");
  if (erosion_radius < 0) throw InvalidArgument("refine: erosion_radius must be >= 0");
  if (max_points < static_cast<int>(kMinPoints)) throw InvalidArgument("refine: max_points must be >= 10");
}

double latent_objective(const PointCloud& normalized, const ShapeLatent& latent, const ShapeBasis& basis,
                        double lambda) {
  double total = 0.0;
  for (const Vec3& p : normalized.points) total += std::abs(sdf_eval(basis, latent, p));
  return total + lambda * latent.raw().squaredNorm();
}

ShapeLatent fit_latent(const PointCloud& normalized, const ShapeLatent& init, const ShapeBasis& basis,
                       const RefineConfig& cfg) {
  require_points(normalized, "fit_latent");
  if (init.size() != basis.size()) throw InvalidArgument("fit_latent: latent/basis size mismatch");
  const auto n = static_cast<Eigen::Index>(normalized.size());
  const auto b = static_cast<Eigen::Index>(basis.size());

  // Points are fixed, so primitive distances are computed once.
  Eigen::MatrixXd dist(n, b);
  Eigen::VectorXd row(b);
  for (Eigen::Index i = 0; i < n; ++i) {
    basis.evaluate(normalized.points[static_cast<std::size_t>(i)], row, nullptr);
    dist.row(i) = row.transpose();
  }

  const double lambda = cfg.latent_reg;
  auto objective = [&](const Eigen::VectorXd& raw) {
    const ShapeLatent z(raw);
    return (dist * z.weights()).cwiseAbs().sum() + lambda * raw.squaredNorm();
  };

  // Iteratively reweighted Gauss-Newton: |f| is majorized by f^2 / (2|f0|) + |f0| / 2
  // around the current residuals, the quadratic model is minimized with
  // Levenberg damping, and a step is kept only if the exact objective drops.
  constexpr double kResidualFloor = 1e-7;
  const Eigen::MatrixXd reg = 2.0 * lambda * Eigen::MatrixXd::Identity(b, b);
  Eigen::VectorXd raw = init.raw();
  double value = objective(raw);
  double mu = 1e-3;
  Eigen::MatrixXd jac(n, b);
  for (int it = 0; it < cfg.latent_iterations; ++it) {
    const ShapeLatent z(raw);
    const Eigen::VectorXd& w = z.weights();
    const Eigen::VectorXd f = dist * w;
    // d f_i / d raw_k = w_k (d_ik - f_i)
    for (Eigen::Index i = 0; i < n; ++i) jac.row(i) = (w.array() * (dist.row(i).transpose().array() - f[i])).transpose();
    const Eigen::VectorXd c = f.cwiseAbs().cwiseMax(kResidualFloor).cwiseInverse();
    const Eigen::MatrixXd h = jac.transpose() * c.asDiagonal() * jac + reg;
    const Eigen::VectorXd g = jac.transpose() * c.cwiseProduct(f) + 2.0 * lambda * raw;
    if (g.norm() < 1e-9) break;

    bool accepted = false;
    for (int tries = 0; tries < 30; ++tries, mu *= 4.0) {
      Eigen::MatrixXd damped = h;
      damped.diagonal().array() += mu * (h.diagonal().array() + 1e-12);
      Eigen::VectorXd step = -damped.ldlt().solve(g);
      const double len = step.norm();
      if (!std::isfinite(len)) continue;
      if (len > cfg.latent_step) step *= cfg.latent_step / len;
      const Eigen::VectorXd cand = raw + step;
      const double v = objective(cand);
      if (std::isfinite(v) && v < value) {
        const double gain = value - v;
        raw = cand;
        value = v;
        mu = std::max(mu / 3.0, 1e-9);
        accepted = gain > 1e-12 * (1.0 + value);
        break;
      }
    }
    if (!accepted) break;
  }
  return ShapeLatent(raw);
}

PoseObjective pose_objective(const PointCloud& camera_points, const ShapeLatent& latent,
                             const ShapeBasis& basis, const Pose& pose, double size, ResidualLoss loss,
                             double delta_m, bool with_gradient) {
  if (basis.size() != latent.size()) throw InvalidArgument("pose_objective: latent/basis size mismatch");
  const auto b = static_cast<Eigen::Index>(basis.size());
  const Mat3 r = pose.rotation.toRotationMatrix();
  const Mat3 rt = r.transpose();
  const Eigen::VectorXd& w = latent.weights();

  PoseObjective out;
  out.d_raw = Eigen::VectorXd::Zero(b);
  Eigen::VectorXd d(b);
  std::vector<Vec3> grads(basis.size());
  for (const Vec3& p : camera_points.points) {
    const Vec3 q = (p - pose.translation) / size;
    const Vec3 pn = rt * q;
    basis.evaluate(pn, d, with_gradient ? grads.data() : nullptr);
    const double f = w.dot(d);
    const double res = size * f;
    out.value += rho(res, loss, delta_m);
    if (!with_gradient) continue;
    Vec3 g = Vec3::Zero();
    for (Eigen::Index k = 0; k < b; ++k) g += w[k] * grads[static_cast<std::size_t>(k)];
    const double dr = rho_prime(res, loss, delta_m);
    const Vec3 rg = r * g;
    out.d_translation -= dr * rg;
    out.d_rotation += dr * size * rg.cross(q);
    out.d_size += dr * (f - g.dot(pn));
    out.d_raw.array() += dr * size * w.array() * (d.array() - f);
  }
  return out;
}

RefineResult refine_pose(const PointCloud& camera_points, const ShapeLatent& latent, const ShapeBasis& basis,
                         const Pose& pose0, double size0, const RefineConfig& cfg) {
  cfg.validate();
  require_points(camera_points, "refine_pose");
  if (!(size0 > 0.0)) throw InvalidArgument("refine_pose: size must be positive");
  const double delta = cfg.huber_delta * size0;
  constexpr double kMinSize = 1e-3;

  struct State {
    Pose pose;
    double size;
  };
  auto evaluate = [&](const State& s, bool grad) {
    PoseObjective o = pose_objective(camera_points, latent, basis, s.pose, s.size, cfg.loss, delta, grad);
    if (!std::isfinite(o.value)) throw RefinementDiverged("refine_pose: objective is not finite");
    return o;
  };
  // Tangent vector layout: [dT(3), dw(3), ds].
  using Vec7 = Eigen::Matrix<double, 7, 1>;
  auto retract = [&](const State& s, const Vec7& step) {
    State out = s;
    out.pose.translation += step.head<3>();
    out.pose.rotation = (exp_so3(step.segment<3>(3)) * s.pose.rotation).normalized();
    if (cfg.optimize_size) out.size = std::max(kMinSize, s.size + step[6]);
    return out;
  };
  auto pack = [&](const PoseObjective& o) {
    Vec7 g;
    g << o.d_translation, o.d_rotation, cfg.optimize_size ? o.d_size : 0.0;
    return g;
  };

  State state{pose0, size0};
  PoseObjective obj = evaluate(state, true);
  RefineResult result;
  result.objective_trace.push_back(obj.value);
  result.pose_trace.push_back(state.pose);

  // Block-scalar preconditioner from the mean squared Jacobian norm of each
  // block; scalar per block keeps the iteration equivariant under rigid
  // transforms of the scene.
  auto preconditioner = [&](const State& s) {
    double jt = 0.0;
    double jr = 0.0;
    for (const Vec3& p : camera_points.points) {
      const Vec3 q = (p - s.pose.translation) / s.size;
      jt += 1.0;
      jr += s.size * s.size * q.squaredNorm();
    }
    Vec7 pc;
    const double scale = 3.0 * (cfg.loss == ResidualLoss::Huber ? delta : 1.0);
    pc.head<3>().setConstant(scale / std::max(jt, 1e-12));
    pc.segment<3>(3).setConstant(scale / std::max(jr, 1e-12));
    pc[6] = cfg.optimize_size ? scale / std::max(jt, 1e-12) : 0.0;
    return pc;
  };

  Vec7 g = pack(obj);
  Vec7 pc = preconditioner(state);
  Vec7 dir = -pc.cwiseProduct(g);
  Vec7 prev_pg = pc.cwiseProduct(g);
  Vec7 prev_g = g;

  auto cap = [&](const Vec7& d) {
    double t = 1.0;
    const double nt = d.head<3>().norm();
    const double nr = d.segment<3>(3).norm();
    if (nt > cfg.translation_step) t = std::min(t, cfg.translation_step / nt);
    if (nr > cfg.rotation_step) t = std::min(t, cfg.rotation_step / nr);
    if (cfg.optimize_size && std::abs(d[6]) > cfg.size_step) t = std::min(t, cfg.size_step / std::abs(d[6]));
    return t;
  };

  double t_scale = 1.0;
  for (int step = 0; step < cfg.steps; ++step) {
    double slope = g.dot(dir);
    if (!(slope < 0.0)) {
      dir = -pc.cwiseProduct(g);
      slope = g.dot(dir);
      if (!(slope < 0.0)) break;
    }
    const double t_max = cap(dir);
    double t0 = std::min(t_max, t_scale);

    State best_state = state;
    double best_value = obj.value;
    bool accepted = false;
    const double f0 = obj.value;

    const double f_t0 = evaluate(retract(state, t0 * dir), false).value;
    if (f_t0 <= f0 + kArmijo * t0 * slope) {
      best_state = retract(state, t0 * dir);
      best_value = f_t0;
      accepted = true;
    }
    // Parabola through f(0), f'(0) and f(t0).
    const double curv = f_t0 - f0 - slope * t0;
    if (curv > 0.0) {
      const double tq = std::clamp(-slope * t0 * t0 / (2.0 * curv), 0.05 * t0, std::min(4.0 * t0, t_max));
      const State cand = retract(state, tq * dir);
      const double fq = evaluate(cand, false).value;
      if (fq <= f0 + kArmijo * tq * slope && (!accepted || fq < best_value)) {
        best_state = cand;
        best_value = fq;
        accepted = true;
        t0 = tq;
      }
    }
    if (!accepted) {
      double t = 0.5 * t0;
      for (int back = 0; back < 30; ++back, t *= 0.5) {
        const State cand = retract(state, t * dir);
        const double v = evaluate(cand, false).value;
        if (v <= f0 + kArmijo * t * slope) {
          best_state = cand;
          best_value = v;
          accepted = true;
          t0 = t;
          break;
        }
      }
    }
    if (!accepted || !(best_value <= f0)) break;

    state = best_state;
    obj = evaluate(state, true);
    result.objective_trace.push_back(obj.value);
    result.pose_trace.push_back(state.pose);
    ++result.accepted_steps;
    t_scale = std::min(1.0, 2.0 * t0);
    if (f0 - obj.value <= 1e-15 * std::max(1.0, f0)) break;

    // Polak-Ribiere+ on the preconditioned gradient.
    g = pack(obj);
    pc = preconditioner(state);
    const Vec7 pg = pc.cwiseProduct(g);
    const double denom = prev_g.dot(prev_pg);
    const double beta = denom > 0.0 ? std::max(0.0, pg.dot(g - prev_g) / denom) : 0.0;
    dir = -pg + beta * dir;
    prev_g = g;
    prev_pg = pg;
  }
  result.pose = state.pose;
  result.size = state.size;
  return result;
}

AlternateResult alternate(const PointCloud& camera_points, const Pose& pose0, double size0,
                          const ShapeLatent& latent0, const ShapeBasis& basis, const RefineConfig& cfg) {
  cfg.validate();
  require_points(camera_points, "alternate");
  AlternateResult out;
  out.pose = pose0;
  out.size = size0;
  out.latent = latent0;
  for (int round = 0; round < cfg.rounds; ++round) {
    try {
      const double delta = cfg.huber_delta * out.size;
      const PointCloud normalized = normalize_points(camera_points, out.pose, out.size);
      ShapeLatent latent = fit_latent(normalized, out.latent, basis, cfg);
      const double before =
          pose_objective(camera_points, out.latent, basis, out.pose, out.size, cfg.loss, delta, false).value;
      const double after =
          pose_objective(camera_points, latent, basis, out.pose, out.size, cfg.loss, delta, false).value;
      if (!(after <= before)) latent = out.latent;
      const RefineResult refined = refine_pose(camera_points, latent, basis, out.pose, out.size, cfg);
      out.pose = refined.pose;
      out.size = refined.size;
      out.latent = latent;
      out.round_residuals.push_back(refined.objective_trace.back());
    } catch (const InsufficientPoints&) {
      out.warning = true;
      break;
    } catch (const RefinementDiverged&) {
      out.warning = true;
      break;
    }
  }
  return out;
}

Mask erode_mask(const Mask& mask, int radius) {
  if (radius < 0) throw InvalidArgument("erode_mask: radius must be non-negative");
  if (radius == 0) return mask;
  Mask horiz(mask.width, mask.height);
  for (int v = 0; v < mask.height; ++v) {
    for (int u = 0; u < mask.width; ++u) {
      bool all = true;
      for (int k = -radius; k <= radius && all; ++k) all = mask.contains(u + k, v) && mask.at(u + k, v);
      horiz.set(u, v, all);
    }
  }
  Mask out(mask.width, mask.height);
  for (int v = 0; v < mask.height; ++v) {
    for (int u = 0; u < mask.width; ++u) {
      bool all = true;
      for (int k = -radius; k <= radius && all; ++k) all = horiz.contains(u, v + k) && horiz.at(u, v + k);
      out.set(u, v, all);
    }
  }
  return out;
}

}  // namespace shapetrack
