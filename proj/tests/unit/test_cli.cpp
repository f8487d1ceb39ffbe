#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "shapetrack/config.hpp"
#include "shapetrack/report.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(SHAPETRACK_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  static fs::path dir;

  static void SetUpTestSuite() {
    dir = fs::temp_directory_path() / "shapetrack_test_cli";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const json scene = {
        {"category", "camera"},
        {"size", 0.25},
        {"frames", 6},
        {"waypoints", json::array({json{{"euler_deg", {30, 20, 0}}, {"translation", {0, 0, 0.8}}},
                                   json{{"euler_deg", {40, 20, 0}}, {"translation", {0.01, 0, 0.8}}}})},
        {"intrinsics", {{"fx", 200}, {"fy", 200}, {"cx", 79.5}, {"cy", 59.5}, {"width", 160}, {"height", 120}}},
        {"depth_noise", 0.001},
        {"seed", 3}};
    shapetrack::write_json_file(dir / "scene.json", scene);
    const json cfg = {{"filter", {{"particles", 20}, {"init_particles", 40}, {"init_cycles", 2}}},
                      {"refine", {{"steps", 5}, {"rounds", 1}, {"max_points", 200}}},
                      {"run", {{"seed", 1}, {"record_timing", false}, {"chamfer_points", 500}}}};
    shapetrack::write_json_file(dir / "run.json", cfg);
    ASSERT_EQ(run("simulate --config " + (dir / "scene.json").string() + " --out " + (dir / "seq").string()), 0);
    ASSERT_EQ(run("codebook build --category camera --grid-step 90 --quiet --out " + (dir / "cb.icbk").string()), 0);
  }

  static std::string track_args(const std::string& out) {
    return "track --seq " + (dir / "seq").string() + " --codebook " + (dir / "cb.icbk").string() + " --config " +
           (dir / "run.json").string() + " --out " + (dir / out).string();
  }
};

fs::path Cli::dir;

}  // namespace

TEST_F(Cli, SimulateWritesSequence) {
  EXPECT_TRUE(fs::exists(dir / "seq" / "gt.json"));
  EXPECT_TRUE(fs::exists(dir / "cb.icbk"));
}

TEST_F(Cli, TrackWritesReportAndIsDeterministic) {
  const int code = run(track_args("r1") + " --plot " + (dir / "r1.svg").string());
  ASSERT_TRUE(code == 0 || code == 2);
  ASSERT_EQ(run(track_args("r2")), code);
  EXPECT_TRUE(fs::exists(dir / "r1.svg"));
  const std::string a = slurp(dir / "r1" / "report.csv");
  EXPECT_EQ(a.rfind("frame,terr_cm,rerr_deg,iou,cd,ms\n", 0), 0u);
  EXPECT_EQ(a, slurp(dir / "r2" / "report.csv"));
  EXPECT_EQ(shapetrack::read_report_csv(dir / "r1" / "report.csv").rows.size(), 6u);
}

TEST_F(Cli, EvalReproducesTrackMetrics) {
  const int code = run(track_args("r3"));
  ASSERT_TRUE(code == 0 || code == 2);
  EXPECT_EQ(run("eval --report " + (dir / "r3").string() + " --gt " + (dir / "seq").string() + " --out " +
                (dir / "r3e").string()),
            code);
  EXPECT_EQ(slurp(dir / "r3" / "report.csv"), slurp(dir / "r3e" / "report.csv"));
  EXPECT_EQ(run("report --in " + (dir / "r3").string() + " --plot " + (dir / "r3.svg").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "r3.svg"));
}

TEST_F(Cli, ErrorsExitWithOne) {
  EXPECT_EQ(run(""), 1);
  EXPECT_EQ(run("track --seq " + (dir / "nope").string() + " --codebook " + (dir / "cb.icbk").string() +
                " --out " + (dir / "x").string()),
            1);
  EXPECT_EQ(run("codebook build --category camera --grid-step 7 --quiet --out " + (dir / "bad.icbk").string()), 1);
  EXPECT_EQ(run("codebook build --category teapot --grid-step 90 --quiet --out " + (dir / "bad.icbk").string()), 1);
  EXPECT_EQ(run("simulate --config " + (dir / "run.json").string() + " --out " + (dir / "bad").string()), 1);
  EXPECT_EQ(run("--help"), 0);
}
