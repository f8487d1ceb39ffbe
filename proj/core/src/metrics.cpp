#include "shapetrack/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "shapetrack/error.hpp"

namespace shapetrack {

bool metric_5deg5cm(double rotation_error_deg, double translation_error_m) {
  return rotation_error_deg < 5.0 && translation_error_m < 0.05;
}

double translation_error_m(const Pose& est, const Pose& gt) {
  return (est.translation - gt.translation).norm();
}

bool metric_5deg5cm(const Pose& est, const Pose& gt, const std::optional<Vec3>& symmetry_axis) {
  return metric_5deg5cm(rotation_error_deg(est.rotation, gt.rotation, symmetry_axis),
                        translation_error_m(est, gt));
}

bool OrientedBox::contains(const Vec3& x) const {
  const Vec3 local = rotation.conjugate() * (x - center);
  return std::abs(local.x()) <= half_extents.x() && std::abs(local.y()) <= half_extents.y() &&
         std::abs(local.z()) <= half_extents.z();
}

std::vector<Vec3> OrientedBox::corners() const {
  std::vector<Vec3> out;
  out.reserve(8);
  for (int i = 0; i < 8; ++i) {
    const Vec3 sign((i & 1) ? 1.0 : -1.0, (i & 2) ? 1.0 : -1.0, (i & 4) ? 1.0 : -1.0);
    out.push_back(center + rotation * sign.cwiseProduct(half_extents));
  }
  return out;
}

double iou3d(const OrientedBox& a, const OrientedBox& b) {
  for (const OrientedBox* box : {&a, &b}) {
    if (!(box->half_extents.minCoeff() > 0.0) || !box->half_extents.allFinite()) {
      throw InvalidArgument("iou3d: box extents must be positive");
    }
  }
  constexpr int kGrid = 64;
  constexpr int kSub = 4;
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  for (const OrientedBox* box : {&a, &b}) {
    for (const Vec3& c : box->corners()) {
      lo = lo.cwiseMin(c);
      hi = hi.cwiseMax(c);
    }
  }
  const Vec3 cell = (hi - lo) / kGrid;

  // Membership on the (kGrid+1)^3 corner lattice, bit 0 = a, bit 1 = b.
  constexpr int kL = kGrid + 1;
  std::vector<std::uint8_t> lattice(static_cast<std::size_t>(kL) * kL * kL);
  auto lidx = [](int i, int j, int k) { return (static_cast<std::size_t>(i) * kL + j) * kL + k; };
  for (int i = 0; i < kL; ++i) {
    for (int j = 0; j < kL; ++j) {
      for (int k = 0; k < kL; ++k) {
        const Vec3 x = lo + Vec3(i, j, k).cwiseProduct(cell);
        lattice[lidx(i, j, k)] = static_cast<std::uint8_t>((a.contains(x) ? 1 : 0) | (b.contains(x) ? 2 : 0));
      }
    }
  }

  // Counts in units of 1/kSub^3 of a cell.
  constexpr long long kFull = kSub * kSub * kSub;
  long long inter = 0;
  long long uni = 0;
  for (int i = 0; i < kGrid; ++i) {
    for (int j = 0; j < kGrid; ++j) {
      for (int k = 0; k < kGrid; ++k) {
        std::uint8_t all = 3;
        std::uint8_t any = 0;
        for (int c = 0; c < 8; ++c) {
          const std::uint8_t m = lattice[lidx(i + (c & 1), j + ((c >> 1) & 1), k + ((c >> 2) & 1))];
          all &= m;
          any |= m;
        }
        if (all == any) {
          if (any == 3) inter += kFull;
          if (any != 0) uni += kFull;
          continue;
        }
        const Vec3 base = lo + Vec3(i, j, k).cwiseProduct(cell);
        for (int si = 0; si < kSub; ++si) {
          for (int sj = 0; sj < kSub; ++sj) {
            for (int sk = 0; sk < kSub; ++sk) {
              const Vec3 x = base + Vec3((si + 0.5) / kSub, (sj + 0.5) / kSub, (sk + 0.5) / kSub).cwiseProduct(cell);
              const bool in_a = a.contains(x);
              const bool in_b = b.contains(x);
              if (in_a && in_b) ++inter;
              if (in_a || in_b) ++uni;
            }
          }
        }
      }
    }
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

OrientedBox posed_box(const Vec3& lo, const Vec3& hi, const Pose& pose, double size) {
  if (!(size > 0.0)) throw InvalidArgument("posed_box: size must be positive");
  OrientedBox box;
  box.rotation = pose.rotation;
  box.center = pose.apply(size * 0.5 * (lo + hi));
  box.half_extents = (0.5 * size * (hi - lo)).cwiseMax(1e-9);
  return box;
}

std::pair<Vec3, Vec3> bounds(const PointCloud& cloud) {
  if (cloud.empty()) throw InvalidArgument("bounds: empty point cloud");
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  for (const Vec3& p : cloud.points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  return {lo, hi};
}

OrientedBox shape_box(const ShapeBasis& basis, const ShapeLatent& latent, const Pose& pose, double size,
                      std::size_t samples, std::uint64_t seed) {
  const auto [lo, hi] = bounds(decode_surface(basis, latent, samples, seed));
  return posed_box(lo, hi, pose, size);
}

KdTree::KdTree(const std::vector<Vec3>& points) : points_(points) {
  std::vector<std::size_t> idx(points_.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  nodes_.reserve(points_.size());
  root_ = build(idx, 0, idx.size(), 0);
}

int KdTree::build(std::vector<std::size_t>& idx, std::size_t lo, std::size_t hi, int depth) {
  if (lo >= hi) return -1;
  const int axis = depth % 3;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::nth_element(idx.begin() + static_cast<std::ptrdiff_t>(lo), idx.begin() + static_cast<std::ptrdiff_t>(mid),
                   idx.begin() + static_cast<std::ptrdiff_t>(hi), [&](std::size_t x, std::size_t y) {
                     const double px = points_[x][axis];
                     const double py = points_[y][axis];
                     return px < py || (px == py && x < y);
                   });
  const int node = static_cast<int>(nodes_.size());
  nodes_.push_back({idx[mid], axis});
  const int left = build(idx, lo, mid, depth + 1);
  const int right = build(idx, mid + 1, hi, depth + 1);
  nodes_[static_cast<std::size_t>(node)].left = left;
  nodes_[static_cast<std::size_t>(node)].right = right;
  return node;
}

void KdTree::search(int node, const Vec3& q, std::size_t& best, double& best_d2) const {
  if (node < 0) return;
  const Node& n = nodes_[static_cast<std::size_t>(node)];
  const double d2 = (q - points_[n.point]).squaredNorm();
  if (d2 < best_d2 || (d2 == best_d2 && n.point < best)) {
    best_d2 = d2;
    best = n.point;
  }
  const double diff = q[n.axis] - points_[n.point][n.axis];
  const int near = diff < 0.0 ? n.left : n.right;
  const int far = diff < 0.0 ? n.right : n.left;
  search(near, q, best, best_d2);
  if (diff * diff <= best_d2) search(far, q, best, best_d2);
}

std::pair<std::size_t, double> KdTree::nearest(const Vec3& q) const {
  if (root_ < 0) throw InvalidArgument("KdTree: empty point set");
  std::size_t best = std::numeric_limits<std::size_t>::max();
  double best_d2 = std::numeric_limits<double>::infinity();
  search(root_, q, best, best_d2);
  return {best, best_d2};
}

namespace {

void require_nonempty(const PointCloud& a, const PointCloud& b) {
  if (a.empty() || b.empty()) throw InvalidArgument("chamfer: point clouds must be nonempty");
}

double directed(const PointCloud& from, const KdTree& to) {
  double sum = 0.0;
  for (const Vec3& p : from.points) sum += to.nearest(p).second;
  return sum / static_cast<double>(from.size());
}

}  // namespace

double chamfer(const PointCloud& a, const PointCloud& b) {
  require_nonempty(a, b);
  const KdTree ta(a.points);
  const KdTree tb(b.points);
  return directed(a, tb) + directed(b, ta);
}

double chamfer_brute_force(const PointCloud& a, const PointCloud& b) {
  require_nonempty(a, b);
  auto one_way = [](const PointCloud& from, const PointCloud& to) {
    double sum = 0.0;
    for (const Vec3& p : from.points) {
      double best = std::numeric_limits<double>::infinity();
      for (const Vec3& q : to.points) best = std::min(best, (p - q).squaredNorm());
      sum += best;
    }
    return sum / static_cast<double>(from.size());
  };
  return one_way(a, b) + one_way(b, a);
}

}  // namespace shapetrack
