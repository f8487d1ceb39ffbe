#include <benchmark/benchmark.h>

#include <random>

#include "shapetrack/codebook.hpp"
#include "shapetrack/filter.hpp"
#include "shapetrack/refine.hpp"
#include "shapetrack/render.hpp"
#include "shapetrack/shape.hpp"

using namespace shapetrack;

namespace {

const ShapeBasis& camera() {
  static const ShapeBasis b = builtin_basis("camera");
  return b;
}

const Codebook& codebook_30() {
  static const Codebook cb =
      build_codebook(camera(), canonical_latent(camera()), build_rotation_grid(30), RenderConfig{});
  return cb;
}

void BM_SdfEval(benchmark::State& state) {
  const ShapeLatent z = canonical_latent(camera());
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  std::vector<Vec3> xs(1024);
  for (Vec3& x : xs) x = Vec3(u(rng), u(rng), u(rng));
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(sdf_eval(camera(), z, xs[i++ & 1023]));
  }
}
BENCHMARK(BM_SdfEval);

void BM_RenderNormalized(benchmark::State& state) {
  const ShapeLatent z = canonical_latent(camera());
  RenderConfig cfg;
  cfg.resolution = static_cast<int>(state.range(0));
  const Quat q = rotation_from_euler_deg(30, 20, 10);
  for (auto _ : state) benchmark::DoNotOptimize(render_normalized(camera(), z, q, cfg));
}
BENCHMARK(BM_RenderNormalized)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_Encode(benchmark::State& state) {
  const NormalizedDepthMap map =
      render_normalized(camera(), canonical_latent(camera()), rotation_from_euler_deg(30, 20, 10), RenderConfig{});
  for (auto _ : state) benchmark::DoNotOptimize(encode(map));
}
BENCHMARK(BM_Encode);

void BM_CodebookQueryBatch(benchmark::State& state) {
  const Codebook& cb = codebook_30();
  const Eigen::MatrixXd codes = Eigen::MatrixXd::Random(kCodeDim, state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(query_batch(cb, codes));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_CodebookQueryBatch)->Arg(1)->Arg(100)->Unit(benchmark::kMicrosecond);

void BM_RefinePose(benchmark::State& state) {
  const ShapeLatent z = canonical_latent(camera());
  const Pose gt(rotation_from_euler_deg(40, 20, 10), Vec3(0.02, -0.01, 0.8));
  const PointCloud pts = denormalize_points(decode_surface(camera(), z, 1000, 3), gt, 0.25);
  const Pose start(exp_so3(Vec3(0.1, 0.05, 0.0)) * gt.rotation, gt.translation + Vec3(0.01, 0, 0));
  RefineConfig cfg;
  cfg.steps = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(refine_pose(pts, z, camera(), start, 0.25, cfg));
}
BENCHMARK(BM_RefinePose)->Arg(50)->Unit(benchmark::kMillisecond);

void BM_FitLatent(benchmark::State& state) {
  const ShapeLatent z = canonical_latent(camera());
  const PointCloud pts = decode_surface(camera(), z, 1000, 4);
  for (auto _ : state) {
    benchmark::DoNotOptimize(fit_latent(pts, ShapeLatent::uniform(camera().size()), camera(), RefineConfig{}));
  }
}
BENCHMARK(BM_FitLatent)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
