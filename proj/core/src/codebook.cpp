#include "shapetrack/codebook.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "shapetrack/error.hpp"

namespace shapetrack {

Code encode(const NormalizedDepthMap& map) {
  const int s = map.resolution;
  if (s < kCodeGrid) throw InvalidArgument("encode: map must be at least 16x16");
  Code code(kCodeDim);
  for (int by = 0; by < kCodeGrid; ++by) {
    const int y0 = by * s / kCodeGrid;
    const int y1 = (by + 1) * s / kCodeGrid;
    for (int bx = 0; bx < kCodeGrid; ++bx) {
      const int x0 = bx * s / kCodeGrid;
      const int x1 = (bx + 1) * s / kCodeGrid;
      double acc = 0.0;
      for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) acc += map.at(x, y);
      }
      code[by * kCodeGrid + bx] = acc / ((y1 - y0) * (x1 - x0));
    }
  }
  code.array() -= code.mean();
  const double n = code.norm();
  if (n < 1e-8) return Code::Zero(kCodeDim);
  return code / n;
}

RenderConfig Codebook::render_config() const {
  RenderConfig cfg;
  if (meta.contains("render")) {
    const auto& r = meta["render"];
    cfg.z0 = r.value("z0", cfg.z0);
    cfg.crop_extent = r.value("crop_extent", cfg.crop_extent);
    cfg.resolution = r.value("resolution", cfg.resolution);
  }
  return cfg;
}

Codebook build_codebook(const ShapeBasis& basis, const ShapeLatent& latent, const RotationGrid& grid,
                        const RenderConfig& cfg, const ProgressFn& progress) {
  cfg.validate();
  if (grid.size() == 0) throw InvalidArgument("build_codebook: empty grid");
  Codebook cb;
  cb.grid = grid;
  cb.codes.resize(static_cast<Eigen::Index>(grid.size()), kCodeDim);
  for (std::size_t j = 0; j < grid.size(); ++j) {
    try {
      cb.codes.row(static_cast<Eigen::Index>(j)) =
          encode(render_normalized(basis, latent, grid.bin(j), cfg)).transpose();
    } catch (const std::exception& e) {
      throw RenderError("build_codebook: bin " + std::to_string(j) + ": " + e.what());
    }
    if (progress && ((j + 1) % 256 == 0 || j + 1 == grid.size())) progress(j + 1, grid.size());
  }
  cb.meta = {{"category", basis.category},
             {"basis", basis_to_json(basis)},
             {"latent", latent_to_json(latent)},
             {"grid_step_deg", grid.step_deg()},
             {"encoder", "blockmean16"},
             {"render",
              {{"z0", cfg.z0}, {"crop_extent", cfg.crop_extent}, {"resolution", cfg.resolution}}}};
  return cb;
}

Eigen::VectorXd query(const Codebook& cb, const Code& code) {
  if (code.size() != cb.codes.cols()) throw InvalidArgument("query: code dimension mismatch");
  return cb.codes * code;
}

Eigen::MatrixXd query_batch(const Codebook& cb, const Eigen::MatrixXd& codes) {
  if (codes.rows() != cb.codes.cols()) throw InvalidArgument("query_batch: code dimension mismatch");
  return cb.codes * codes;
}

Eigen::VectorXd likelihoods(const Eigen::VectorXd& similarities, double global_max, double sigma,
                            double floor) {
  if (!(sigma > 0.0)) throw InvalidArgument("likelihoods: sigma must be positive");
  const double inv = 1.0 / (2.0 * sigma * sigma);
  Eigen::VectorXd out(similarities.size());
  for (Eigen::Index j = 0; j < similarities.size(); ++j) {
    const double d = similarities[j] - global_max;
    const double l = std::exp(-d * d * inv);
    out[j] = l <= floor ? 0.0 : l;
  }
  return out;
}

namespace {

static_assert(std::endian::native == std::endian::little,
              "codebook I/O assumes a little-endian host");

constexpr char kMagic[4] = {'I', 'C', 'B', 'K'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ofstream& out, std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); }

std::uint32_t get_u32(std::ifstream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), 4);
  return v;
}

}  // namespace

void save_codebook(const std::filesystem::path& path, const Codebook& cb) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string());
  out.write(kMagic, 4);
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(cb.grid.step_deg()) * 1000u);
  put_u32(out, static_cast<std::uint32_t>(cb.codes.rows()));
  put_u32(out, static_cast<std::uint32_t>(cb.codes.cols()));
  std::vector<float> row(static_cast<std::size_t>(cb.codes.cols()));
  for (Eigen::Index j = 0; j < cb.codes.rows(); ++j) {
    for (Eigen::Index d = 0; d < cb.codes.cols(); ++d) row[d] = static_cast<float>(cb.codes(j, d));
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size() * 4));
  }
  const std::string trailer = cb.meta.dump();
  out.write(trailer.data(), static_cast<std::streamsize>(trailer.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

Codebook load_codebook(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  char magic[4] = {};
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) throw IoError("not a codebook file: " + path.string());
  const std::uint32_t version = get_u32(in);
  if (version != kVersion) throw IoError("unsupported codebook version " + std::to_string(version));
  const std::uint32_t step_milli = get_u32(in);
  const std::uint32_t rows = get_u32(in);
  const std::uint32_t cols = get_u32(in);
  if (!in || step_milli % 1000 != 0) throw IoError("corrupt codebook header: " + path.string());

  Codebook cb;
  cb.grid = RotationGrid(static_cast<int>(step_milli / 1000));
  if (rows != cb.grid.size()) throw IoError("codebook row count does not match its grid");
  cb.codes.resize(rows, cols);
  std::vector<float> row(cols);
  for (std::uint32_t j = 0; j < rows; ++j) {
    in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(cols * 4));
    if (!in) throw IoError("truncated codebook: " + path.string());
    Eigen::VectorXd r(cols);
    for (std::uint32_t d = 0; d < cols; ++d) r[d] = row[d];
    // f32 storage perturbs the norm; restore the unit-norm invariant.
    const double n = r.norm();
    cb.codes.row(j) = (n > 0.5 ? Eigen::VectorXd(r / n) : Eigen::VectorXd::Zero(cols)).transpose();
  }
  const std::string trailer((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    cb.meta = nlohmann::json::parse(trailer);
  } catch (const nlohmann::json::exception& e) {
    throw IoError("codebook metadata is not valid JSON: " + std::string(e.what()));
  }
  return cb;
}

}  // namespace shapetrack
