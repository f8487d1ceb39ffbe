#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <vector>

#include "shapetrack/codebook.hpp"
#include "shapetrack/geometry.hpp"
#include "shapetrack/image.hpp"
#include "shapetrack/render.hpp"

namespace shapetrack {

/// Rao-Blackwellized particle: sampled translation and size, with an
/// analytic distribution over the rotation-grid bins.
struct Particle {
  Vec3 translation = Vec3::Zero();
  double size = 1.0;
  Eigen::VectorXd rot_dist;
  double log_weight = 0.0;
};

using ParticleSet = std::vector<Particle>;

/// Which rotation prior multiplies the likelihood in the weight update.
enum class RotationPrior { Propagated, Uniform };
/// Where the likelihood Gaussian is centered: the frame-wide maximum
/// similarity over all particles, or each particle's own maximum.
enum class LikelihoodCenter { GlobalMax, PerParticleMax };

struct FilterConfig {
  int particles = 100;        // N
  int init_particles = 300;   // N_init
  int init_cycles = 10;       // update/resample cycles on the first frame
  double size_prior = 0.25;   // s0, meters
  double size_range = 0.10;   // delta s, meters
  double velocity_gain = 0.5; // alpha
  Vec3 translation_noise{0.004, 0.004, 0.008};
  double size_noise = 0.002;
  double rotation_mix = 0.02;  // epsilon, uniform mixing per propagation
  double sigma_phi = 0.02;
  double likelihood_floor = 1e-4;
  double log_likelihood_floor = -30.0;
  double depth_percentile_low = 5.0;
  double depth_percentile_high = 95.0;
  int lost_after = 5;
  bool viewpoint_correction = true;
  RotationPrior rotation_prior = RotationPrior::Propagated;
  LikelihoodCenter likelihood_center = LikelihoodCenter::GlobalMax;

  void validate() const;
};

/// Inclusive pixel bounds.
struct BBox {
  int u_min = 0;
  int v_min = 0;
  int u_max = 0;
  int v_max = 0;

  Vec2 center() const { return {0.5 * (u_min + u_max), 0.5 * (v_min + v_max)}; }
  int width() const { return u_max - u_min + 1; }
  int height() const { return v_max - v_min + 1; }
  bool operator==(const BBox&) const = default;
};

struct Detection {
  BBox bbox;
  Mask mask;
};

/// Tight bounding box of the mask; throws InvalidArgument for an empty mask.
BBox mask_bbox(const Mask& mask);

/// Last two frame estimates of the translation, newest first.
struct MotionHistory {
  std::optional<Vec3> last;
  std::optional<Vec3> previous;

  Vec3 velocity() const { return last && previous ? Vec3(*last - *previous) : Vec3::Zero(); }
  void push(const Vec3& t) {
    previous = last;
    last = t;
  }
};

struct PoseEstimate {
  Pose pose;
  double size = 0.0;
  std::size_t bin = 0;
};

struct UpdateStats {
  double global_max = 0.0;
  double mean_log_increment = 0.0;
  int floored = 0;
};

/// Counter-based per-particle random stream: a pure function of
/// (seed, stream, index), so particle order never changes the draws.
class CounterRng {
 public:
  using result_type = std::uint64_t;
  CounterRng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }
  result_type operator()();

 private:
  std::uint64_t state_;
};

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

/// Samples N_init particles from a 2D detection and the masked depth.
/// Throws InitializationError with fewer than 10 valid masked depths.
ParticleSet init_particles(const Detection& det, const DepthImage& depth,
                           const CameraIntrinsics& intr, const FilterConfig& cfg,
                           std::size_t rotation_bins, std::uint64_t seed);

/// Motion prior: T += alpha * velocity + N(0, Sigma_T), s ~ N(s, sigma_s)
/// truncated above 1e-3, rot_dist mixed with the uniform distribution.
ParticleSet propagate(const ParticleSet& ps, const MotionHistory& history, const FilterConfig& cfg,
                      std::uint64_t seed);

/// Codebook likelihoods, Bayes rotation update and importance-weight update.
ParticleSet update(const ParticleSet& ps, const DepthImage& frame, const CameraIntrinsics& intr,
                   const Codebook& cb, const FilterConfig& cfg, UpdateStats* stats = nullptr);

double effective_sample_size(const ParticleSet& ps);

/// Systematic resampling to `count` particles with an ESS > count/2 gate
/// (the gate applies only when the set already has `count` particles).
/// Throws DegenerateFilterError when no weight is finite.
ParticleSet resample(const ParticleSet& ps, int count, std::uint64_t seed);

/// Weighted mean translation and size; rotation is the argmax bin of the
/// weighted aggregate distribution (lowest index on ties), optionally
/// re-expressed relative to the viewing ray through the mean translation.
PoseEstimate estimate(const ParticleSet& ps, const RotationGrid& grid, bool viewpoint_correction = false);

struct FilterState {
  ParticleSet particles;
  MotionHistory history;
  int floor_streak = 0;
  bool lost = false;
  std::uint64_t steps = 0;
};

struct StepResult {
  PoseEstimate estimate;
  UpdateStats stats;
  bool reinitialized = false;
};

/// First-frame initialization: init_particles, then cfg.init_cycles rounds of
/// (propagate without velocity, except before the first round) -> update -> resample.
StepResult initialize_filter(FilterState& state, const Detection& det, const DepthImage& frame,
                             const CameraIntrinsics& intr, const Codebook& cb,
                             const FilterConfig& cfg, std::uint64_t seed);

/// propagate -> update -> resample -> estimate. A frame whose mean log
/// increment sits at the floor extends the lost streak; once lost, a
/// provided detection re-initializes the filter.
StepResult filter_step(FilterState& state, const DepthImage& frame, const Detection* det,
                       const CameraIntrinsics& intr, const Codebook& cb, const FilterConfig& cfg,
                       std::uint64_t seed);

/// Seeds used by filter_step for its propagate and resample calls.
std::uint64_t propagate_seed(std::uint64_t seed);
std::uint64_t resample_seed(std::uint64_t seed);

}  // namespace shapetrack
