#include "shapetrack/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "shapetrack/config.hpp"
#include "shapetrack/error.hpp"

namespace shapetrack {

namespace fs = std::filesystem;

namespace {

constexpr const char* kCsvHeader = "frame,terr_cm,rerr_deg,iou,cd,ms";

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

}  // namespace

void write_report_csv(const fs::path& path, const TrackReport& report) {
  if (report.metrics.size() != report.estimates.size()) {
    throw InvalidArgument("write_report_csv: report has not been evaluated");
  }
  std::ofstream out = open_out(path);
  out << kCsvHeader << '\n';
  CsvRow sum;
  for (std::size_t i = 0; i < report.estimates.size(); ++i) {
    const FrameEstimate& e = report.estimates[i];
    const FrameMetrics& m = report.metrics[i];
    out << e.frame << ',' << num(m.terr_cm) << ',' << num(m.rerr_deg) << ',' << num(m.iou) << ',' << num(m.cd)
        << ',' << num(e.ms) << '\n';
    sum.terr_cm += m.terr_cm;
    sum.rerr_deg += m.rerr_deg;
    sum.iou += m.iou;
    sum.cd += m.cd;
    sum.ms += e.ms;
  }
  if (!report.estimates.empty()) {
    const double n = static_cast<double>(report.estimates.size());
    out << "summary," << num(sum.terr_cm / n) << ',' << num(sum.rerr_deg / n) << ',' << num(sum.iou / n) << ','
        << num(sum.cd / n) << ',' << num(sum.ms / n) << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

CsvTable read_report_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw IoError(path.string() + ": unexpected CSV header");
  CsvTable table;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    if (cells.size() != 6) throw IoError(path.string() + ":" + std::to_string(lineno) + ": expected 6 columns");
    try {
      CsvRow row;
      row.terr_cm = std::stod(cells[1]);
      row.rerr_deg = std::stod(cells[2]);
      row.iou = std::stod(cells[3]);
      row.cd = std::stod(cells[4]);
      row.ms = std::stod(cells[5]);
      if (cells[0] == "summary") {
        table.summary = row;
      } else {
        row.frame = std::stoi(cells[0]);
        table.rows.push_back(row);
      }
    } catch (const std::logic_error&) {
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": malformed number");
    }
  }
  return table;
}

nlohmann::json summary_to_json(const Summary& s) {
  return {{"frames", s.frames},
          {"pct_5deg5cm", s.pct_5deg5cm},
          {"pct_iou25", s.pct_iou25},
          {"mean_rerr_deg", s.mean_rerr_deg},
          {"median_rerr_deg", s.median_rerr_deg},
          {"mean_terr_cm", s.mean_terr_cm},
          {"median_terr_cm", s.median_terr_cm},
          {"mean_cd_e3", s.mean_cd_e3},
          {"median_cd_e3", s.median_cd_e3},
          {"mean_fps", s.mean_fps},
          {"lost_frames", s.lost_frames}};
}

nlohmann::json report_to_json(const TrackReport& report) {
  nlohmann::json frames = nlohmann::json::array();
  for (std::size_t i = 0; i < report.estimates.size(); ++i) {
    const FrameEstimate& e = report.estimates[i];
    nlohmann::json f = {{"frame", e.frame},
                        {"pose", pose_to_json(e.pose)},
                        {"size", e.size},
                        {"latent", latent_to_json(e.latent)},
                        {"ms", e.ms},
                        {"refined", e.refined},
                        {"lost", e.lost},
                        {"residual", e.residual}};
    if (i < report.metrics.size()) {
      const FrameMetrics& m = report.metrics[i];
      f["metrics"] = {{"terr_cm", m.terr_cm}, {"rerr_deg", m.rerr_deg},         {"iou", m.iou},
                      {"cd", m.cd},           {"success_5deg5cm", m.success_5deg5cm}, {"iou25", m.iou25}};
    }
    frames.push_back(std::move(f));
  }
  return {{"category", report.category},
          {"rotation_error_mode", report.rotation_error_mode},
          {"frames", std::move(frames)},
          {"summary", summary_to_json(report.summary)}};
}

TrackReport report_from_json(const nlohmann::json& j) {
  TrackReport r;
  try {
    r.category = j.at("category").get<std::string>();
    r.rotation_error_mode = j.value("rotation_error_mode", std::string("full"));
    bool all_metrics = true;
    for (const auto& f : j.at("frames")) {
      FrameEstimate e;
      e.frame = f.at("frame").get<int>();
      e.pose = pose_from_json(f.at("pose"));
      e.size = f.at("size").get<double>();
      e.latent = latent_from_json(f.at("latent"));
      e.ms = f.value("ms", 0.0);
      e.refined = f.value("refined", false);
      e.lost = f.value("lost", false);
      e.residual = f.value("residual", 0.0);
      r.estimates.push_back(std::move(e));
      if (f.contains("metrics")) {
        const auto& mj = f.at("metrics");
        FrameMetrics m;
        m.terr_cm = mj.at("terr_cm").get<double>();
        m.rerr_deg = mj.at("rerr_deg").get<double>();
        m.iou = mj.at("iou").get<double>();
        m.cd = mj.at("cd").get<double>();
        m.success_5deg5cm = mj.at("success_5deg5cm").get<bool>();
        m.iou25 = mj.at("iou25").get<bool>();
        r.metrics.push_back(m);
      } else {
        all_metrics = false;
      }
    }
    if (!all_metrics) r.metrics.clear();
    r.summary = summarize(r.estimates, r.metrics);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed report: ") + e.what());
  }
  return r;
}

void write_plot_svg(const fs::path& path, const TrackReport& report) {
  constexpr double kW = 800.0;
  constexpr double kH = 400.0;
  constexpr double kPad = 50.0;
  std::vector<double> terr;
  std::vector<double> rerr;
  for (const FrameMetrics& m : report.metrics) {
    terr.push_back(m.terr_cm);
    rerr.push_back(m.rerr_deg);
  }
  double ymax = 1.0;
  for (double v : terr) ymax = std::max(ymax, v);
  for (double v : rerr) ymax = std::max(ymax, v);
  const std::size_t n = std::max<std::size_t>(terr.size(), 2);
  auto px = [&](std::size_t i) { return kPad + (kW - 2 * kPad) * static_cast<double>(i) / static_cast<double>(n - 1); };
  auto py = [&](double v) { return kH - kPad - (kH - 2 * kPad) * v / ymax; };
  auto polyline = [&](const std::vector<double>& v, const char* color) {
    std::string pts;
    for (std::size_t i = 0; i < v.size(); ++i) pts += num(px(i)) + "," + num(py(v[i])) + " ";
    return "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
  };

  std::ofstream out = open_out(path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<line x1=\"" << kPad << "\" y1=\"" << kH - kPad << "\" x2=\"" << kW - kPad << "\" y2=\"" << kH - kPad
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << kPad << "\" y1=\"" << kPad << "\" x2=\"" << kPad << "\" y2=\"" << kH - kPad
      << "\" stroke=\"black\"/>\n";
  out << "<text x=\"" << kPad << "\" y=\"" << kPad - 10 << "\" font-size=\"12\">max " << num(ymax) << "</text>\n";
  out << "<text x=\"" << kW / 2 << "\" y=\"" << kH - 15 << "\" font-size=\"12\">frame</text>\n";
  out << polyline(terr, "#1f77b4") << polyline(rerr, "#d62728");
  out << "<text x=\"" << kW - 200 << "\" y=\"" << kPad - 10
      << "\" font-size=\"12\" fill=\"#1f77b4\">translation error (cm)</text>\n";
  out << "<text x=\"" << kW - 200 << "\" y=\"" << kPad + 5
      << "\" font-size=\"12\" fill=\"#d62728\">rotation error (deg)</text>\n";
  out << "</svg>\n";
  if (!out) throw IoError("failed writing " + path.string());
}

void emit_report(const TrackReport& report, const fs::path& dir, const std::optional<fs::path>& plot) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  write_report_csv(dir / "report.csv", report);
  write_json_file(dir / "report.json", report_to_json(report));
  if (plot) write_plot_svg(*plot, report);
}

TrackReport read_report(const fs::path& dir) { return report_from_json(read_json_file(dir / "report.json")); }

}  // namespace shapetrack
