#include "shapetrack/tracking.hpp"

#include <chrono>
#include <numeric>

#include "shapetrack/error.hpp"
#include "shapetrack/metrics.hpp"

namespace shapetrack {

void RunConfig::validate() const {
  filter.validate();
  refine.validate();
  if (chamfer_points < 1) throw InvalidArgument("run: chamfer_points must be >= 1");
}

PointCloud refinement_points(const DepthImage& depth, const Mask& mask, const CameraIntrinsics& intr,
                             const RefineConfig& cfg) {
  PointCloud all = backproject(depth, erode_mask(mask, cfg.erosion_radius), intr);
  const auto limit = static_cast<std::size_t>(cfg.max_points);
  if (all.size() <= limit) return all;
  PointCloud out;
  out.frame = all.frame;
  out.points.reserve(limit);
  for (std::size_t i = 0; i < limit; ++i) out.points.push_back(all.points[i * all.size() / limit]);
  return out;
}

Summary summarize(const std::vector<FrameEstimate>& estimates, const std::vector<FrameMetrics>& metrics) {
  Summary s;
  s.frames = metrics.size();
  if (metrics.empty()) return s;
  std::vector<double> rerr;
  std::vector<double> terr;
  std::vector<double> cd;
  std::size_t ok = 0;
  std::size_t iou = 0;
  for (const FrameMetrics& m : metrics) {
    rerr.push_back(m.rerr_deg);
    terr.push_back(m.terr_cm);
    cd.push_back(m.cd * 1e3);
    ok += m.success_5deg5cm ? 1 : 0;
    iou += m.iou25 ? 1 : 0;
  }
  const double n = static_cast<double>(metrics.size());
  auto mean = [n](const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / n; };
  s.pct_5deg5cm = 100.0 * static_cast<double>(ok) / n;
  s.pct_iou25 = 100.0 * static_cast<double>(iou) / n;
  s.mean_rerr_deg = mean(rerr);
  s.median_rerr_deg = median(rerr);
  s.mean_terr_cm = mean(terr);
  s.median_terr_cm = median(terr);
  s.mean_cd_e3 = mean(cd);
  s.median_cd_e3 = median(cd);
  double total_ms = 0.0;
  for (const FrameEstimate& e : estimates) {
    total_ms += e.ms;
    s.lost_frames += e.lost ? 1 : 0;
  }
  s.mean_fps = total_ms > 0.0 ? 1000.0 * static_cast<double>(estimates.size()) / total_ms : 0.0;
  return s;
}

void evaluate_report(TrackReport& report, const GroundTruth& gt, bool symmetric_rotation_error,
                     std::size_t chamfer_points) {
  if (report.estimates.size() > gt.frames.size()) {
    throw InvalidArgument("evaluate_report: more estimates than ground-truth frames");
  }
  constexpr std::uint64_t kSurfaceSeed = 11;
  const std::optional<Vec3> axis = symmetric_rotation_error ? gt.basis.symmetry_axis : std::nullopt;
  report.rotation_error_mode = axis ? "symmetric" : "full";

  const PointCloud gt_surface = decode_surface(gt.basis, gt.latent, chamfer_points, kSurfaceSeed);
  const auto [gt_lo, gt_hi] = bounds(gt_surface);
  ShapeLatent cached_latent;
  PointCloud est_surface;
  std::pair<Vec3, Vec3> est_bounds;

  report.metrics.clear();
  for (const FrameEstimate& e : report.estimates) {
    if (e.frame < 0 || static_cast<std::size_t>(e.frame) >= gt.frames.size()) {
      throw InvalidArgument("evaluate_report: estimate frame index out of range");
    }
    const GroundTruthFrame& g = gt.frames[static_cast<std::size_t>(e.frame)];
    if (!(e.latent == cached_latent) || est_surface.empty()) {
      cached_latent = e.latent;
      est_surface = decode_surface(gt.basis, e.latent, chamfer_points, kSurfaceSeed);
      est_bounds = bounds(est_surface);
    }
    FrameMetrics m;
    m.terr_cm = 100.0 * translation_error_m(e.pose, g.pose);
    m.rerr_deg = rotation_error_deg(e.pose.rotation, g.pose.rotation, axis);
    m.success_5deg5cm = metric_5deg5cm(m.rerr_deg, m.terr_cm / 100.0);
    m.iou = iou3d(posed_box(est_bounds.first, est_bounds.second, e.pose, e.size),
                  posed_box(gt_lo, gt_hi, g.pose, g.size));
    m.iou25 = m.iou > 0.25;
    PointCloud a = est_surface;
    for (Vec3& p : a.points) p *= e.size;
    PointCloud b = gt_surface;
    for (Vec3& p : b.points) p *= g.size;
    m.cd = chamfer(a, b);
    report.metrics.push_back(m);
  }
  report.summary = summarize(report.estimates, report.metrics);
}

TrackReport run_tracking(const Sequence& seq, const Codebook& cb, const RunConfig& cfg,
                         const FrameCallback& on_frame) {
  cfg.validate();
  if (cb.category() != seq.category) {
    throw InvalidArgument("run_tracking: codebook category '" + cb.category() + "' does not match sequence '" +
                          seq.category + "'");
  }
  const ShapeBasis basis = cb.meta.contains("basis") ? basis_from_json(cb.meta.at("basis")) : builtin_basis(seq.category);
  const CameraIntrinsics& intr = seq.intrinsics;
  const int interval = cfg.refine.interval;

  TrackReport report;
  report.category = seq.category;
  FilterState state;
  ShapeLatent latent = canonical_latent(basis);

  for (std::size_t k = 0; k < seq.frames.size(); ++k) {
    const auto start = std::chrono::steady_clock::now();
    const SequenceFrame& frame = seq.frames[k];
    const std::uint64_t frame_seed = mix_seed(cfg.seed, k);

    StepResult step;
    if (k == 0 || cfg.single_frame) {
      state = FilterState{};
      if (cfg.single_frame) latent = canonical_latent(basis);
      step = initialize_filter(state, frame.detection, frame.depth, intr, cb, cfg.filter, frame_seed);
    } else {
      step = filter_step(state, frame.depth, &frame.detection, intr, cb, cfg.filter, frame_seed);
    }

    FrameEstimate out;
    out.frame = static_cast<int>(k);
    out.pose = step.estimate.pose;
    out.size = step.estimate.size;

    if (cfg.refine_enabled && k % static_cast<std::size_t>(interval) == 0) {
      const PointCloud points = refinement_points(frame.depth, frame.detection.mask, intr, cfg.refine);
      if (points.size() >= 10) {
        const AlternateResult alt = alternate(points, out.pose, out.size, latent, basis, cfg.refine);
        if (!alt.round_residuals.empty()) {
          const Vec3 shift = alt.pose.translation - out.pose.translation;
          const double grow = alt.size - out.size;
          for (Particle& p : state.particles) {
            p.translation += shift;
            p.size = std::max(1e-3, p.size + grow);
          }
          state.history.last = alt.pose.translation;
          out.pose = alt.pose;
          out.size = alt.size;
          latent = alt.latent;
          out.refined = true;
          out.residual = alt.round_residuals.back();
        }
      }
    }
    out.latent = latent;
    out.lost = state.lost;
    if (cfg.record_timing) {
      out.ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    }
    if (on_frame) on_frame(out);
    report.estimates.push_back(std::move(out));
  }

  evaluate_report(report, ground_truth_of(seq), cfg.symmetric_rotation_error, cfg.chamfer_points);
  return report;
}

}  // namespace shapetrack
