#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "shapetrack/tracking.hpp"

namespace shapetrack {

struct CsvRow {
  int frame = 0;
  double terr_cm = 0.0;
  double rerr_deg = 0.0;
  double iou = 0.0;
  double cd = 0.0;
  double ms = 0.0;
};

struct CsvTable {
  std::vector<CsvRow> rows;
  std::optional<CsvRow> summary;  // means over frames; frame field unused
};

// frame,terr_cm,rerr_deg,iou,cd,ms per frame, then a "summary" row of
// column means. An empty report is header only. Values use %.17g so the
// file round-trips exactly.
void write_report_csv(const std::filesystem::path& path, const TrackReport& report);
CsvTable read_report_csv(const std::filesystem::path& path);

nlohmann::json report_to_json(const TrackReport& report);
TrackReport report_from_json(const nlohmann::json& j);
nlohmann::json summary_to_json(const Summary& s);

/// Static line plot of per-frame translation (cm) and rotation (deg) errors.
void write_plot_svg(const std::filesystem::path& path, const TrackReport& report);

/// Writes dir/report.csv and dir/report.json, and the plot when requested.
void emit_report(const TrackReport& report, const std::filesystem::path& dir,
                 const std::optional<std::filesystem::path>& plot = std::nullopt);
TrackReport read_report(const std::filesystem::path& dir);

}  // namespace shapetrack
