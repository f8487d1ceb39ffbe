#pragma once

#include <Eigen/Core>
#include <vector>

#include "shapetrack/geometry.hpp"
#include "shapetrack/image.hpp"
#include "shapetrack/shape.hpp"

namespace shapetrack {

enum class ResidualLoss { Huber, L1 };

struct RefineConfig {
  int steps = 50;     // F: outer steps per pose refinement
  int rounds = 2;     // R: shape/pose alternations per refined frame
  int interval = 1;   // K: refine every K-th frame
  double latent_reg = 1e-3;  // lambda on |raw|^2
  // Per-step trust caps; latent_step bounds the norm of a raw latent step.
  double translation_step = 0.02;
  double rotation_step = 0.1;
  double size_step = 0.01;
  double latent_step = 2.0;
  double huber_delta = 0.02;  // normalized object units
  ResidualLoss loss = ResidualLoss::Huber;
  bool optimize_size = false;
  int latent_iterations = 50;
  int erosion_radius = 2;
  int max_points = 1000;

  void validate() const;
};

/// sum_i |sdf(latent, p_i)| + lambda * |raw|^2 over normalized points.
double latent_objective(const PointCloud& normalized, const ShapeLatent& latent,
                        const ShapeBasis& basis, double lambda);

/// Reweighted Gauss-Newton on the raw latent, at most cfg.latent_iterations
/// iterations. Steps are accepted only when latent_objective decreases, so
/// the returned objective never exceeds the initial one.
/// Throws InsufficientPoints below 10 points.
ShapeLatent fit_latent(const PointCloud& normalized, const ShapeLatent& init, const ShapeBasis& basis,
                       const RefineConfig& cfg);

/// Value and analytic gradient of the pose objective
///   E = sum_i rho(s * sdf(latent, R^-1 (p_i - T) / s))
/// with rho = Huber(delta_m) or |.|. d_rotation is taken w.r.t. a left
/// axis-angle increment R <- exp(w) R at w = 0.
struct PoseObjective {
  double value = 0.0;
  Vec3 d_translation = Vec3::Zero();
  Vec3 d_rotation = Vec3::Zero();
  double d_size = 0.0;
  Eigen::VectorXd d_raw;
};

PoseObjective pose_objective(const PointCloud& camera_points, const ShapeLatent& latent,
                             const ShapeBasis& basis, const Pose& pose, double size,
                             ResidualLoss loss, double delta_m, bool with_gradient = true);

struct RefineResult {
  Pose pose;
  double size = 0.0;
  std::vector<double> objective_trace;  // initial value, then one per accepted step
  std::vector<Pose> pose_trace;         // pose after each trace entry
  int accepted_steps = 0;
};

/// Minimizes the pose objective over (T, R[, s]) with block-preconditioned
/// nonlinear conjugate gradients and a backtracking line search. Huber
/// threshold is cfg.huber_delta * size0 meters. Size is held fixed unless
/// cfg.optimize_size (lower bound 1e-3 m).
/// Throws InsufficientPoints below 10 points and RefinementDiverged on a
/// non-finite objective.
RefineResult refine_pose(const PointCloud& camera_points, const ShapeLatent& latent,
                         const ShapeBasis& basis, const Pose& pose0, double size0,
                         const RefineConfig& cfg);

struct AlternateResult {
  Pose pose;
  double size = 0.0;
  ShapeLatent latent;
  std::vector<double> round_residuals;  // pose objective after each round
  bool warning = false;                 // a round failed; last good state returned
};

/// cfg.rounds x (normalize points -> fit_latent -> refine_pose). A fitted
/// latent that raises the pose objective at the current pose is discarded,
/// so round residuals are non-increasing.
AlternateResult alternate(const PointCloud& camera_points, const Pose& pose0, double size0,
                          const ShapeLatent& latent0, const ShapeBasis& basis,
                          const RefineConfig& cfg);

/// Binary erosion with a (2r+1) x (2r+1) square; pixels outside the image
/// count as background.
Mask erode_mask(const Mask& mask, int radius);

}  // namespace shapetrack
