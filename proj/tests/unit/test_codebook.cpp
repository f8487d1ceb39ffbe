#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "fixtures.hpp"
#include "shapetrack/codebook.hpp"
#include "shapetrack/error.hpp"

using namespace shapetrack;
using namespace shapetrack::testing;
namespace fs = std::filesystem;

namespace {

NormalizedDepthMap random_map(std::mt19937_64& rng, int s = 64) {
  std::uniform_real_distribution<float> u(0.0f, 0.8f);
  NormalizedDepthMap m;
  m.resolution = s;
  m.data.resize(static_cast<std::size_t>(s) * s);
  for (float& v : m.data) v = u(rng);
  return m;
}

const Codebook& camera_codebook_30() {
  static const Codebook cb = [] {
    const ShapeBasis b = builtin_basis("camera");
    return build_codebook(b, canonical_latent(b), build_rotation_grid(30), RenderConfig{});
  }();
  return cb;
}

}  // namespace

TEST(Encode, ConstantMapIsZeroCode) {
  NormalizedDepthMap m;
  m.resolution = 64;
  m.data.assign(64 * 64, 0.37f);
  const Code c = encode(m);
  EXPECT_EQ(c.size(), kCodeDim);
  EXPECT_EQ(c.norm(), 0.0);
}

TEST(Encode, UnitNormAndSelfSimilarity) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 20; ++i) {
    const Code c = encode(random_map(rng));
    EXPECT_NEAR(c.norm(), 1.0, 1e-9);
    EXPECT_NEAR(c.dot(c), 1.0, 1e-9);
  }
}

TEST(Encode, OffsetInvariant) {
  std::mt19937_64 rng(2);
  const NormalizedDepthMap m = random_map(rng);
  NormalizedDepthMap shifted = m;
  for (float& v : shifted.data) v += 0.1f;
  const Code a = encode(m);
  const Code b = encode(shifted);
  EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Encode, BlockMeans) {
  NormalizedDepthMap m;
  m.resolution = 32;
  m.data.assign(32 * 32, 0.0f);
  // One 2x2 block set to 1.
  m.data[0] = m.data[1] = m.data[32] = m.data[33] = 1.0f;
  const Code c = encode(m);
  const double hi = 1.0 - 1.0 / kCodeDim;
  const double lo = -1.0 / kCodeDim;
  const double norm = std::sqrt(hi * hi + (kCodeDim - 1) * lo * lo);
  EXPECT_NEAR(c[0], hi / norm, 1e-12);
  EXPECT_NEAR(c[1], lo / norm, 1e-12);
}

TEST(Encode, RejectsSmallMaps) {
  NormalizedDepthMap m;
  m.resolution = 15;
  m.data.assign(15 * 15, 0.5f);
  EXPECT_THROW(encode(m), InvalidArgument);
}

TEST(Query, Examples) {
  const Codebook& cb = camera_codebook_30();
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::size_t> pick(0, cb.size() - 1);
  for (int i = 0; i < 20; ++i) {
    const std::size_t j = pick(rng);
    const Code row = cb.codes.row(static_cast<Eigen::Index>(j)).transpose();
    const Eigen::VectorXd s = query(cb, row);
    EXPECT_NEAR(s[static_cast<Eigen::Index>(j)], 1.0, 1e-9);
    EXPECT_LE(s.maxCoeff(), 1.0 + 1e-9);
    EXPECT_GE(s.minCoeff(), -1.0 - 1e-9);
    const Eigen::VectorXd neg = query(cb, -row);
    EXPECT_LT((neg + s).cwiseAbs().maxCoeff(), 1e-12);
  }
  const Eigen::VectorXd z = query(cb, Code::Zero(kCodeDim));
  EXPECT_EQ(z.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_THROW(query(cb, Code::Zero(10)), InvalidArgument);
}

TEST(Query, BatchMatchesSingle) {
  const Codebook& cb = camera_codebook_30();
  Eigen::MatrixXd codes(kCodeDim, 3);
  for (int k = 0; k < 3; ++k) codes.col(k) = cb.codes.row(k * 100).transpose();
  const Eigen::MatrixXd batch = query_batch(cb, codes);
  for (int k = 0; k < 3; ++k) EXPECT_LT((batch.col(k) - query(cb, codes.col(k))).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Likelihoods, Examples) {
  const double sigma = 0.05;
  Eigen::VectorXd sims(4);
  sims << 0.9, 0.9 - sigma, 0.9 - 10 * sigma, 0.5;
  const Eigen::VectorXd l = likelihoods(sims, 0.9, sigma);
  EXPECT_DOUBLE_EQ(l[0], 1.0);
  EXPECT_NEAR(l[1], 0.6065306597126334, 1e-15);
  EXPECT_EQ(l[2], 0.0);
  EXPECT_EQ(l[3], 0.0);
  EXPECT_THROW(likelihoods(sims, 0.9, 0.0), InvalidArgument);
  EXPECT_THROW(likelihoods(sims, 0.9, -1.0), InvalidArgument);
}

TEST(Likelihoods, MonotoneInSimilarity) {
  Eigen::VectorXd sims = Eigen::VectorXd::LinSpaced(2001, -1.0, 1.0);
  const Eigen::VectorXd l = likelihoods(sims, 1.0, 0.2);
  for (Eigen::Index i = 1; i < l.size(); ++i) EXPECT_GE(l[i], l[i - 1]);
  EXPECT_GE(l.minCoeff(), 0.0);
}

TEST(BuildCodebook, RowCountAndUnitRows) {
  const ShapeBasis b = builtin_basis("camera");
  const Codebook cb = build_codebook(b, canonical_latent(b), build_rotation_grid(90), RenderConfig{});
  EXPECT_EQ(cb.size(), 48u);
  EXPECT_EQ(cb.dim(), kCodeDim);
  for (Eigen::Index j = 0; j < cb.codes.rows(); ++j) {
    const double n = cb.codes.row(j).norm();
    EXPECT_TRUE(n == 0.0 || std::abs(n - 1.0) < 1e-9);
  }
  EXPECT_EQ(cb.category(), "camera");
  EXPECT_EQ(cb.render_config(), RenderConfig{});
}

TEST(BuildCodebook, Deterministic) {
  const ShapeBasis b = builtin_basis("laptop");
  const RotationGrid g = build_rotation_grid(90);
  std::size_t calls = 0;
  const Codebook a = build_codebook(b, canonical_latent(b), g, RenderConfig{},
                                    [&](std::size_t done, std::size_t total) {
                                      ++calls;
                                      EXPECT_LE(done, total);
                                    });
  const Codebook c = build_codebook(b, canonical_latent(b), g, RenderConfig{});
  EXPECT_TRUE(a.codes == c.codes);
  EXPECT_EQ(a.meta, c.meta);
  EXPECT_GE(calls, 1u);
}

TEST(BuildCodebook, SelfRetrievalWithinOneStep) {
  const Codebook& cb = camera_codebook_30();
  const RenderConfig cfg = cb.render_config();
  const ShapeBasis b = builtin_basis("camera");
  const ShapeLatent z = canonical_latent(b);
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<std::size_t> pick(0, cb.size() - 1);
  int hits = 0;
  const int n = 100;
  for (int i = 0; i < n; ++i) {
    const std::size_t j = pick(rng);
    const Eigen::VectorXd s = query(cb, encode(render_normalized(b, z, cb.grid.bin(j), cfg)));
    Eigen::Index best = 0;
    s.maxCoeff(&best);
    EXPECT_NEAR(s[static_cast<Eigen::Index>(j)], 1.0, 1e-9);
    if (rotation_error_deg(cb.grid.bin(static_cast<std::size_t>(best)), cb.grid.bin(j)) <= 30.0 + 1e-6) ++hits;
  }
  EXPECT_GE(hits, 98);
}

TEST(CodebookIo, RoundTripAndLayout) {
  const ShapeBasis b = builtin_basis("camera");
  const Codebook cb = build_codebook(b, canonical_latent(b), build_rotation_grid(90), RenderConfig{});
  const fs::path dir = fs::temp_directory_path() / "shapetrack_test_codebook";
  fs::create_directories(dir);
  const fs::path p = dir / "cb.icbk";
  save_codebook(p, cb);

  std::ifstream in(p, std::ios::binary);
  char magic[4];
  in.read(magic, 4);
  EXPECT_EQ(std::string(magic, 4), "ICBK");
  std::uint32_t header[4];
  in.read(reinterpret_cast<char*>(header), sizeof(header));
  EXPECT_EQ(header[0], 1u);
  EXPECT_EQ(header[1], 90000u);
  EXPECT_EQ(header[2], 48u);
  EXPECT_EQ(header[3], static_cast<std::uint32_t>(kCodeDim));
  in.close();

  const Codebook r = load_codebook(p);
  EXPECT_EQ(r.size(), cb.size());
  EXPECT_EQ(r.grid.step_deg(), 90);
  EXPECT_EQ(r.meta, cb.meta);
  EXPECT_LT((r.codes - cb.codes).cwiseAbs().maxCoeff(), 1e-7);
  // Rows are stored as f32 and renormalized on load.
  for (Eigen::Index j = 0; j < r.codes.rows(); ++j) {
    const Eigen::VectorXd f32 = cb.codes.row(j).transpose().cast<float>().cast<double>();
    if (f32.norm() < 0.5) continue;
    EXPECT_EQ(r.codes.row(j).transpose(), f32 / f32.norm());
  }
}

TEST(CodebookIo, RejectsGarbage) {
  const fs::path dir = fs::temp_directory_path() / "shapetrack_test_codebook";
  fs::create_directories(dir);
  const fs::path p = dir / "bad.icbk";
  std::ofstream(p) << "not a codebook";
  EXPECT_THROW(load_codebook(p), IoError);
  EXPECT_THROW(load_codebook(dir / "missing.icbk"), IoError);
}
