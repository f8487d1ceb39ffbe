#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "shapetrack/codebook.hpp"
#include "shapetrack/filter.hpp"
#include "shapetrack/refine.hpp"
#include "shapetrack/sequence.hpp"

namespace shapetrack {

struct RunConfig {
  FilterConfig filter;
  RefineConfig refine;
  bool refine_enabled = true;
  bool single_frame = false;
  std::uint64_t seed = 0;
  // Off makes reports byte-reproducible: the ms column is written as 0.
  bool record_timing = true;
  // Rotation errors about the basis symmetry axis when it has one.
  bool symmetric_rotation_error = true;
  std::size_t chamfer_points = 500;

  void validate() const;
};

struct FrameEstimate {
  int frame = 0;
  Pose pose;
  double size = 0.0;
  ShapeLatent latent;
  double ms = 0.0;
  bool refined = false;
  bool lost = false;
  double residual = 0.0;  // pose objective after refinement; 0 when not refined
};

struct FrameMetrics {
  double terr_cm = 0.0;
  double rerr_deg = 0.0;
  double iou = 0.0;
  double cd = 0.0;  // Chamfer, squared meters
  bool success_5deg5cm = false;
  bool iou25 = false;
};

struct Summary {
  std::size_t frames = 0;
  double pct_5deg5cm = 0.0;
  double pct_iou25 = 0.0;
  double mean_rerr_deg = 0.0;
  double median_rerr_deg = 0.0;
  double mean_terr_cm = 0.0;
  double median_terr_cm = 0.0;
  double mean_cd_e3 = 0.0;  // Chamfer x 1e-3
  double median_cd_e3 = 0.0;
  double mean_fps = 0.0;
  std::size_t lost_frames = 0;
};

struct TrackReport {
  std::string category;
  std::string rotation_error_mode = "full";  // or "symmetric"
  std::vector<FrameEstimate> estimates;
  std::vector<FrameMetrics> metrics;
  Summary summary;
};

/// Per-frame metrics of the estimates against ground truth, and their
/// summary. Pure in (estimates, ground truth, options).
void evaluate_report(TrackReport& report, const GroundTruth& gt, bool symmetric_rotation_error = true,
                     std::size_t chamfer_points = 500);

Summary summarize(const std::vector<FrameEstimate>& estimates, const std::vector<FrameMetrics>& metrics);

using FrameCallback = std::function<void(const FrameEstimate&)>;

/// Frame 0: initialize_filter on the detection. Later frames: filter_step,
/// with the detection offered for re-initialization once lost. Frames with
/// index % K == 0 are refined with alternate() on the eroded mask points and
/// the refined translation is fed back into the particles. In single-frame
/// mode every frame is initialized from its own detection.
/// Throws InvalidArgument when the codebook category differs from the sequence.
TrackReport run_tracking(const Sequence& seq, const Codebook& cb, const RunConfig& cfg,
                         const FrameCallback& on_frame = {});

/// Points used for refinement: backprojected eroded-mask pixels, evenly
/// strided down to at most max_points.
PointCloud refinement_points(const DepthImage& depth, const Mask& mask, const CameraIntrinsics& intr,
                             const RefineConfig& cfg);

}  // namespace shapetrack
