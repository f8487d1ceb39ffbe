// shapetrack: simulate sequences, build codebooks, track, evaluate, plot.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "shapetrack/codebook.hpp"
#include "shapetrack/config.hpp"
#include "shapetrack/error.hpp"
#include "shapetrack/report.hpp"
#include "shapetrack/sequence.hpp"
#include "shapetrack/tracking.hpp"

namespace fs = std::filesystem;
using namespace shapetrack;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitLost = 2;

void print_summary(const TrackReport& r) {
  nlohmann::json j = summary_to_json(r.summary);
  j["rotation_error_mode"] = r.rotation_error_mode;
  std::cout << j.dump(2) << '\n';
}

int cmd_simulate(const fs::path& config, const fs::path& out, const std::string& format) {
  const SceneConfig scene = scene_config_from_json(read_json_file(config));
  const Sequence seq = generate_sequence(scene);
  save_sequence(out, seq, format == "png16" ? DepthFormat::Png16 : DepthFormat::Raw);
  std::cerr << "wrote " << seq.frames.size() << " frames to " << out << '\n';
  return kExitOk;
}

int cmd_codebook(const std::string& category, int step, const fs::path& out,
                 const std::optional<fs::path>& render_config, bool quiet) {
  const ShapeBasis basis = builtin_basis(category);
  const RenderConfig cfg = render_config ? render_config_from_json(read_json_file(*render_config)) : RenderConfig{};
  const RotationGrid grid = build_rotation_grid(step);
  std::size_t last_pct = 101;
  const ProgressFn progress = [&](std::size_t done, std::size_t total) {
    if (quiet) return;
    const std::size_t pct = 100 * done / total;
    if (pct != last_pct && pct % 10 == 0) {
      std::cerr << "\rrendering " << pct << "% (" << done << "/" << total << ")" << std::flush;
      last_pct = pct;
    }
  };
  const Codebook cb = build_codebook(basis, canonical_latent(basis), grid, cfg, progress);
  if (!quiet) std::cerr << '\n';
  save_codebook(out, cb);
  std::cerr << "wrote " << cb.size() << " codes to " << out << '\n';
  return kExitOk;
}

int cmd_track(const fs::path& seq_dir, const fs::path& cb_path, const std::optional<fs::path>& config,
              const fs::path& out, const std::optional<fs::path>& plot, bool verbose) {
  const RunConfig cfg = config ? run_config_from_json(read_json_file(*config)) : RunConfig{};
  const Sequence seq = load_sequence(seq_dir);
  const Codebook cb = load_codebook(cb_path);
  const TrackReport report = run_tracking(seq, cb, cfg, [&](const FrameEstimate& e) {
    if (!verbose) return;
    std::fprintf(stderr, "frame %4d  t=(%.4f %.4f %.4f) s=%.4f%s\n", e.frame, e.pose.translation.x(),
                 e.pose.translation.y(), e.pose.translation.z(), e.size, e.lost ? "  LOST" : "");
  });
  emit_report(report, out, plot);
  print_summary(report);
  return report.summary.lost_frames > 0 ? kExitLost : kExitOk;
}

int cmd_eval(const fs::path& report_dir, const fs::path& gt_dir, const std::optional<fs::path>& out,
             bool full_rotation) {
  TrackReport report = read_report(report_dir);
  evaluate_report(report, load_ground_truth(gt_dir), !full_rotation);
  print_summary(report);
  if (out) emit_report(report, *out);
  return report.summary.lost_frames > 0 ? kExitLost : kExitOk;
}

int cmd_report(const fs::path& in, const std::optional<fs::path>& plot) {
  const TrackReport report = read_report(in);
  if (plot) write_plot_svg(*plot, report);
  print_summary(report);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Category-level 6D pose and shape tracking on depth sequences"};
  app.require_subcommand(1);

  fs::path scene_path;
  fs::path out_path;
  std::string depth_format = "f32";
  auto* simulate = app.add_subcommand("simulate", "Render a synthetic depth sequence from a scene config");
  simulate->add_option("--config", scene_path, "Scene config (JSON)")->required();
  simulate->add_option("--out", out_path, "Output directory")->required();
  simulate->add_option("--depth-format", depth_format, "f32 or png16")
      ->check(CLI::IsMember({"f32", "png16"}));

  auto* codebook = app.add_subcommand("codebook", "Codebook operations");
  codebook->require_subcommand(1);
  std::string category;
  int step = 10;
  std::optional<fs::path> render_config;
  bool quiet = false;
  auto* build = codebook->add_subcommand("build", "Render and encode the canonical shape over a rotation grid");
  build->add_option("--category", category, "Shape category")->required();
  build->add_option("--grid-step", step, "Grid step in degrees (divisor of 180)");
  build->add_option("--out", out_path, "Output .icbk file")->required();
  build->add_option("--render-config", render_config, "Render config (JSON)");
  build->add_flag("--quiet", quiet, "No progress output");

  fs::path seq_dir;
  fs::path cb_path;
  std::optional<fs::path> run_config;
  std::optional<fs::path> plot;
  bool verbose = false;
  auto* track = app.add_subcommand("track", "Track a sequence and write report.csv / report.json");
  track->add_option("--seq", seq_dir, "Sequence directory")->required();
  track->add_option("--codebook", cb_path, "Codebook file")->required();
  track->add_option("--config", run_config, "Run config (JSON)");
  track->add_option("--out", out_path, "Report directory")->required();
  track->add_option("--plot", plot, "Also write an SVG error plot");
  track->add_flag("-v,--verbose", verbose, "Per-frame progress");

  fs::path report_dir;
  fs::path gt_dir;
  std::optional<fs::path> eval_out;
  bool full_rotation = false;
  auto* eval = app.add_subcommand("eval", "Recompute metrics of a report against ground truth");
  eval->add_option("--report", report_dir, "Report directory")->required();
  eval->add_option("--gt", gt_dir, "Sequence directory with gt.json")->required();
  eval->add_option("--out", eval_out, "Write the re-evaluated report here");
  eval->add_flag("--full-rotation", full_rotation, "Ignore the basis symmetry axis in rotation errors");

  fs::path in_dir;
  auto* report = app.add_subcommand("report", "Summarize a report and optionally plot it");
  report->add_option("--in", in_dir, "Report directory")->required();
  report->add_option("--plot", plot, "SVG output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    if (*simulate) return cmd_simulate(scene_path, out_path, depth_format);
    if (*build) return cmd_codebook(category, step, out_path, render_config, quiet);
    if (*track) return cmd_track(seq_dir, cb_path, run_config, out_path, plot, verbose);
    if (*eval) return cmd_eval(report_dir, gt_dir, eval_out, full_rotation);
    if (*report) return cmd_report(in_dir, plot);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
