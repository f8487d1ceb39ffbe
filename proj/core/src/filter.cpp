#include "shapetrack/filter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "shapetrack/error.hpp"

namespace shapetrack {

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t kStreamInit = 11;
constexpr std::uint64_t kStreamPropagate = 12;
constexpr std::uint64_t kStreamResample = 13;

double percentile(std::vector<double> sorted, double p) {
  const double pos = std::clamp(p, 0.0, 100.0) / 100.0 * (sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - lo) * (sorted[hi] - sorted[lo]);
}

std::vector<double> normalized_weights(const ParticleSet& ps) {
  double m = -std::numeric_limits<double>::infinity();
  for (const Particle& p : ps) {
    if (std::isfinite(p.log_weight)) m = std::max(m, p.log_weight);
  }
  if (!std::isfinite(m)) throw DegenerateFilterError("all particle weights are zero");
  std::vector<double> w(ps.size());
  double total = 0.0;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    w[i] = std::isfinite(ps[i].log_weight) ? std::exp(ps[i].log_weight - m) : 0.0;
    total += w[i];
  }
  for (double& x : w) x /= total;
  return w;
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) { return splitmix(a ^ splitmix(b + 0x632be59bd9b4e019ULL)); }

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index)
    : state_(mix_seed(mix_seed(seed, stream), index)) {}

CounterRng::result_type CounterRng::operator()() {
  state_ += 0x9e3779b97f4a7c15ULL;
  return splitmix(state_);
}

void FilterConfig::validate() const {
  if (particles < 1 || init_particles < 1) throw InvalidArgument("filter: particle counts must be >= 1");
  if (init_cycles < 1) throw InvalidArgument("filter: init_cycles must be >= 1");
  if (!(size_prior > 0.0) || !(size_range > 0.0) || !(size_prior - 0.5 * size_range > 0.0)) {
    throw InvalidArgument("filter: size prior must be positive with a positive range");
  }
  if (!(translation_noise.minCoeff() >= 0.0) || !(size_noise >= 0.0)) {
    throw InvalidArgument("filter: noise standard deviations must be non-negative");
  }
  if (!(rotation_mix >= 0.0 && rotation_mix < 1.0)) throw InvalidArgument("filter: rotation_mix must be in [0, 1)");
  if (!(sigma_phi > 0.0)) throw InvalidArgument("filter: sigma_phi must be positive");
  if (!(depth_percentile_low <= depth_percentile_high)) throw InvalidArgument("filter: bad depth percentiles");
  if (lost_after < 1) throw InvalidArgument("filter: lost_after must be >= 1");
}

BBox mask_bbox(const Mask& mask) {
  BBox box{mask.width, mask.height, -1, -1};
  for (int v = 0; v < mask.height; ++v) {
    for (int u = 0; u < mask.width; ++u) {
      if (!mask.at(u, v)) continue;
      box.u_min = std::min(box.u_min, u);
      box.v_min = std::min(box.v_min, v);
      box.u_max = std::max(box.u_max, u);
      box.v_max = std::max(box.v_max, v);
    }
  }
  if (box.u_max < 0) throw InvalidArgument("mask_bbox: empty mask");
  return box;
}

ParticleSet init_particles(const Detection& det, const DepthImage& depth, const CameraIntrinsics& intr,
                           const FilterConfig& cfg, std::size_t rotation_bins, std::uint64_t seed) {
  cfg.validate();
  if (rotation_bins == 0) throw InvalidArgument("init_particles: empty rotation grid");
  if (det.mask.width != depth.width || det.mask.height != depth.height) {
    throw InvalidArgument("init_particles: mask and depth dimensions differ");
  }
  std::vector<double> depths;
  for (int v = 0; v < depth.height; ++v) {
    for (int u = 0; u < depth.width; ++u) {
      if (det.mask.at(u, v) && depth.at(u, v) > 0.0f) depths.push_back(depth.at(u, v));
    }
  }
  if (depths.size() < 10) {
    throw InitializationError("init_particles: detection covers only " + std::to_string(depths.size()) +
                              " valid depth pixels");
  }
  std::sort(depths.begin(), depths.end());
  const double z_lo = percentile(depths, cfg.depth_percentile_low) - 0.5 * cfg.size_prior;
  const double z_hi = percentile(depths, cfg.depth_percentile_high) + 0.5 * cfg.size_prior;

  const Vec2 center = det.bbox.center();
  const double su = det.bbox.width() / 8.0;
  const double sv = det.bbox.height() / 8.0;
  const double uniform_mass = 1.0 / static_cast<double>(rotation_bins);

  ParticleSet ps(static_cast<std::size_t>(cfg.init_particles));
  for (std::size_t i = 0; i < ps.size(); ++i) {
    CounterRng rng(seed, kStreamInit, i);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double u = center.x() + su * gauss(rng);
    const double v = center.y() + sv * gauss(rng);
    const double z = z_lo + (z_hi - z_lo) * unit(rng);
    const double s = cfg.size_prior + cfg.size_range * (unit(rng) - 0.5);
    Particle& p = ps[i];
    p.translation = z * pixel_ray(u, v, intr);
    p.size = s;
    p.rot_dist = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(rotation_bins), uniform_mass);
    p.log_weight = 0.0;
  }
  return ps;
}

ParticleSet propagate(const ParticleSet& ps, const MotionHistory& history, const FilterConfig& cfg,
                      std::uint64_t seed) {
  const Vec3 drift = cfg.velocity_gain * history.velocity();
  ParticleSet out = ps;
  for (std::size_t i = 0; i < out.size(); ++i) {
    CounterRng rng(seed, kStreamPropagate, i);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Particle& p = out[i];
    for (int a = 0; a < 3; ++a) p.translation[a] += drift[a] + cfg.translation_noise[a] * gauss(rng);
    double s = p.size;
    for (int tries = 0; tries < 16; ++tries) {
      s = p.size + cfg.size_noise * gauss(rng);
      if (s > 1e-3) break;
    }
    p.size = std::max(s, 1e-3);
    if (cfg.rotation_mix > 0.0 && p.rot_dist.size() > 0) {
      const double u = cfg.rotation_mix / static_cast<double>(p.rot_dist.size());
      p.rot_dist = (1.0 - cfg.rotation_mix) * p.rot_dist.array() + u;
    }
  }
  return out;
}

ParticleSet update(const ParticleSet& ps, const DepthImage& frame, const CameraIntrinsics& intr,
                   const Codebook& cb, const FilterConfig& cfg, UpdateStats* stats) {
  cfg.validate();
  const auto bins = static_cast<Eigen::Index>(cb.size());
  const RenderConfig rc = cb.render_config();
  const double w0 = rc.canonical_crop(intr);

  ParticleSet out = ps;
  std::vector<std::size_t> active;
  std::vector<Code> codes;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const Particle& p = out[i];
    if (p.rot_dist.size() != bins) throw InvalidArgument("update: rotation distribution does not match codebook");
    if (!(p.translation.z() > 0.0) || !(p.size > 0.0)) continue;
    const RoI roi = roi_from_state(p.translation, p.size, intr, rc.z0, w0);
    const double half = 0.5 * roi.side;
    if (roi.center.x() + half < -0.5 || roi.center.x() - half > intr.width - 0.5 ||
        roi.center.y() + half < -0.5 || roi.center.y() - half > intr.height - 0.5) {
      continue;
    }
    active.push_back(i);
    codes.push_back(encode(normalize_depth_roi(frame, roi, p.translation.z(), p.size, rc.resolution)));
  }

  Eigen::MatrixXd sims;
  double global_max = 0.0;
  if (!active.empty()) {
    Eigen::MatrixXd batch(cb.dim(), static_cast<Eigen::Index>(active.size()));
    for (std::size_t k = 0; k < active.size(); ++k) batch.col(static_cast<Eigen::Index>(k)) = codes[k];
    sims = query_batch(cb, batch);
    global_max = sims.maxCoeff();
  }

  double increment_sum = 0.0;
  int floored = 0;
  std::vector<bool> handled(out.size(), false);
  const double uniform_mass = bins > 0 ? 1.0 / static_cast<double>(bins) : 0.0;
  for (std::size_t k = 0; k < active.size(); ++k) {
    Particle& p = out[active[k]];
    handled[active[k]] = true;
    const auto col = sims.col(static_cast<Eigen::Index>(k));
    const double center =
        cfg.likelihood_center == LikelihoodCenter::GlobalMax ? global_max : col.maxCoeff();
    const Eigen::VectorXd lik = likelihoods(col, center, cfg.sigma_phi, cfg.likelihood_floor);

    Eigen::VectorXd joint = cfg.rotation_prior == RotationPrior::Propagated
                                ? Eigen::VectorXd(lik.cwiseProduct(p.rot_dist))
                                : Eigen::VectorXd(lik * uniform_mass);
    const double mass = joint.sum();
    double increment = cfg.log_likelihood_floor;
    if (mass > 0.0) {
      increment = std::max(std::log(mass), cfg.log_likelihood_floor);
      p.rot_dist = cfg.rotation_prior == RotationPrior::Propagated
                       ? Eigen::VectorXd(joint / mass)
                       : Eigen::VectorXd(lik.cwiseProduct(p.rot_dist) / lik.cwiseProduct(p.rot_dist).sum());
      if (!p.rot_dist.allFinite()) p.rot_dist = lik / lik.sum();
    } else if (lik.sum() > 0.0) {
      // Likelihood only supports bins the prior has ruled out.
      p.rot_dist = lik / lik.sum();
    }
    if (increment <= cfg.log_likelihood_floor) ++floored;
    p.log_weight += increment;
    increment_sum += increment;
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (handled[i]) continue;
    out[i].log_weight += cfg.log_likelihood_floor;
    increment_sum += cfg.log_likelihood_floor;
    ++floored;
  }
  if (stats) {
    stats->global_max = global_max;
    stats->mean_log_increment = out.empty() ? cfg.log_likelihood_floor : increment_sum / out.size();
    stats->floored = floored;
  }
  return out;
}

double effective_sample_size(const ParticleSet& ps) {
  const std::vector<double> w = normalized_weights(ps);
  double s2 = 0.0;
  for (double x : w) s2 += x * x;
  return 1.0 / s2;
}

ParticleSet resample(const ParticleSet& ps, int count, std::uint64_t seed) {
  if (ps.empty()) throw DegenerateFilterError("resample: empty particle set");
  if (count < 1) throw InvalidArgument("resample: count must be >= 1");
  const std::vector<double> w = normalized_weights(ps);
  if (static_cast<int>(ps.size()) == count) {
    double s2 = 0.0;
    for (double x : w) s2 += x * x;
    if (1.0 / s2 > 0.5 * count) return ps;
  }
  CounterRng rng(seed, kStreamResample, 0);
  const double step = 1.0 / count;
  const double start = std::uniform_real_distribution<double>(0.0, step)(rng);
  ParticleSet out;
  out.reserve(static_cast<std::size_t>(count));
  double cumulative = w[0];
  std::size_t i = 0;
  for (int m = 0; m < count; ++m) {
    const double target = start + m * step;
    while (target > cumulative && i + 1 < w.size()) cumulative += w[++i];
    out.push_back(ps[i]);
    out.back().log_weight = 0.0;
  }
  return out;
}

PoseEstimate estimate(const ParticleSet& ps, const RotationGrid& grid, bool viewpoint_correction) {
  if (ps.empty()) throw InvalidArgument("estimate: empty particle set");
  const std::vector<double> w = normalized_weights(ps);
  Vec3 t = Vec3::Zero();
  double s = 0.0;
  Eigen::VectorXd agg = Eigen::VectorXd::Zero(ps.front().rot_dist.size());
  for (std::size_t i = 0; i < ps.size(); ++i) {
    t += w[i] * ps[i].translation;
    s += w[i] * ps[i].size;
    if (w[i] > 0.0) agg += w[i] * ps[i].rot_dist;
  }
  std::size_t best = 0;
  for (Eigen::Index j = 1; j < agg.size(); ++j) {
    if (agg[j] > agg[static_cast<Eigen::Index>(best)]) best = static_cast<std::size_t>(j);
  }
  PoseEstimate est;
  est.bin = best;
  est.size = s;
  Quat q = grid.bin(best);
  if (viewpoint_correction) q = viewing_ray_rotation(t) * q;
  est.pose = Pose(q, t);
  return est;
}

std::uint64_t propagate_seed(std::uint64_t seed) { return mix_seed(seed, 101); }
std::uint64_t resample_seed(std::uint64_t seed) { return mix_seed(seed, 202); }

StepResult initialize_filter(FilterState& state, const Detection& det, const DepthImage& frame,
                             const CameraIntrinsics& intr, const Codebook& cb, const FilterConfig& cfg,
                             std::uint64_t seed) {
  state.particles = init_particles(det, frame, intr, cfg, cb.size(), mix_seed(seed, 0));
  StepResult result;
  for (int c = 0; c < cfg.init_cycles; ++c) {
    const std::uint64_t cycle_seed = mix_seed(seed, static_cast<std::uint64_t>(c) + 1);
    if (c > 0) state.particles = propagate(state.particles, MotionHistory{}, cfg, propagate_seed(cycle_seed));
    state.particles = update(state.particles, frame, intr, cb, cfg, &result.stats);
    state.particles = resample(state.particles, cfg.particles, resample_seed(cycle_seed));
  }
  result.estimate = estimate(state.particles, cb.grid, cfg.viewpoint_correction);
  result.reinitialized = true;
  state.history = MotionHistory{};
  state.history.push(result.estimate.pose.translation);
  state.floor_streak = 0;
  state.lost = false;
  ++state.steps;
  return result;
}

StepResult filter_step(FilterState& state, const DepthImage& frame, const Detection* det,
                       const CameraIntrinsics& intr, const Codebook& cb, const FilterConfig& cfg,
                       std::uint64_t seed) {
  if (state.particles.empty()) throw InvalidArgument("filter_step: filter is not initialized");
  if (state.lost && det != nullptr) return initialize_filter(state, *det, frame, intr, cb, cfg, seed);

  StepResult result;
  state.particles = propagate(state.particles, state.history, cfg, propagate_seed(seed));
  state.particles = update(state.particles, frame, intr, cb, cfg, &result.stats);
  state.particles = resample(state.particles, cfg.particles, resample_seed(seed));
  result.estimate = estimate(state.particles, cb.grid, cfg.viewpoint_correction);
  state.history.push(result.estimate.pose.translation);

  if (result.stats.mean_log_increment <= cfg.log_likelihood_floor + 1e-9) {
    ++state.floor_streak;
  } else {
    state.floor_streak = 0;
  }
  state.lost = state.floor_streak >= cfg.lost_after;
  ++state.steps;
  return result;
}

}  // namespace shapetrack
