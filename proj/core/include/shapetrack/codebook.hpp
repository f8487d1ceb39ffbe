#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <functional>

#include <nlohmann/json.hpp>

#include "shapetrack/geometry.hpp"
#include "shapetrack/render.hpp"
#include "shapetrack/shape.hpp"

namespace shapetrack {

/// Descriptor of a normalized depth map: unit L2 norm, or all zeros.
using Code = Eigen::VectorXd;

inline constexpr int kCodeGrid = 16;
inline constexpr int kCodeDim = kCodeGrid * kCodeGrid;

/// Block-mean downsample to 16 x 16, subtract the mean, L2-normalize.
/// Returns the zero code when the centered norm is below 1e-8.
/// Throws InvalidArgument for maps smaller than 16 x 16.
Code encode(const NormalizedDepthMap& map);

/// Codes of the canonical shape rendered at every rotation-grid bin.
struct Codebook {
  RotationGrid grid{180};
  Eigen::MatrixXd codes;  // J x D, one row per bin
  nlohmann::json meta;

  std::size_t size() const { return static_cast<std::size_t>(codes.rows()); }
  int dim() const { return static_cast<int>(codes.cols()); }
  std::string category() const { return meta.value("category", std::string()); }
  RenderConfig render_config() const;
};

using ProgressFn = std::function<void(std::size_t done, std::size_t total)>;

Codebook build_codebook(const ShapeBasis& basis, const ShapeLatent& latent, const RotationGrid& grid,
                        const RenderConfig& cfg, const ProgressFn& progress = {});

/// Cosine similarity against every row. The zero code maps to all zeros.
Eigen::VectorXd query(const Codebook& cb, const Code& code);

/// Column-wise batch of query(): codes is D x N, result is J x N.
Eigen::MatrixXd query_batch(const Codebook& cb, const Eigen::MatrixXd& codes);

/// exp(-(x - global_max)^2 / (2 sigma^2)); entries <= floor (relative to the
/// unit peak) are set to 0. Throws InvalidArgument for sigma <= 0.
Eigen::VectorXd likelihoods(const Eigen::VectorXd& similarities, double global_max, double sigma,
                            double floor = 1e-4);

// Binary layout: "ICBK", u32 version, u32 grid step in millidegrees, u32 J,
// u32 D, J*D little-endian f32, then a UTF-8 JSON trailer to end of file.
void save_codebook(const std::filesystem::path& path, const Codebook& cb);
Codebook load_codebook(const std::filesystem::path& path);

}  // namespace shapetrack
