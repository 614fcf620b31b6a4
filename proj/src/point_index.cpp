#include "arecon/point_index.hpp"

#include <algorithm>

namespace arecon {

PointIndex::PointIndex(std::span<const Vec3> points) : points_(points.begin(), points.end()) {
  order_.resize(points_.size());
  for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
  build(0, order_.size(), 0);
}

void PointIndex::build(std::size_t lo, std::size_t hi, int depth) {
  if (hi - lo <= 1) return;
  const int axis = depth % 3;
  const std::size_t mid = (lo + hi) / 2;
  std::nth_element(order_.begin() + lo, order_.begin() + mid, order_.begin() + hi,
                   [&](std::size_t a, std::size_t b) {
                     const double pa = points_[a][axis];
                     const double pb = points_[b][axis];
                     return pa < pb || (pa == pb && a < b);
                   });
  build(lo, mid, depth + 1);
  build(mid + 1, hi, depth + 1);
}

Neighbor PointIndex::nearest(const Vec3& query) const {
  Neighbor best;
  if (!points_.empty()) search(0, order_.size(), 0, query, best);
  return best;
}

void PointIndex::search(std::size_t lo, std::size_t hi, int depth, const Vec3& q, Neighbor& best) const {
  if (lo >= hi) return;
  const std::size_t mid = (lo + hi) / 2;
  const std::size_t idx = order_[mid];
  const double d2 = (points_[idx] - q).squaredNorm();
  if (d2 < best.dist2 || (d2 == best.dist2 && idx < best.index)) best = {idx, d2};

  const int axis = depth % 3;
  const double diff = q[axis] - points_[idx][axis];
  const bool left_first = diff <= 0.0;
  if (left_first) {
    search(lo, mid, depth + 1, q, best);
    if (diff * diff <= best.dist2) search(mid + 1, hi, depth + 1, q, best);
  } else {
    search(mid + 1, hi, depth + 1, q, best);
    if (diff * diff <= best.dist2) search(lo, mid, depth + 1, q, best);
  }
}

std::size_t PointIndex::count_within(const Vec3& query, double radius, std::size_t limit) const {
  std::size_t n = 0;
  if (!points_.empty() && limit > 0) count(0, order_.size(), 0, query, radius * radius, limit, n);
  return n;
}

void PointIndex::count(std::size_t lo, std::size_t hi, int depth, const Vec3& q, double r2, std::size_t limit,
                       std::size_t& n) const {
  if (lo >= hi || n >= limit) return;
  const std::size_t mid = (lo + hi) / 2;
  const std::size_t idx = order_[mid];
  if ((points_[idx] - q).squaredNorm() <= r2) ++n;
  const int axis = depth % 3;
  const double diff = q[axis] - points_[idx][axis];
  if (diff <= 0.0 || diff * diff <= r2) count(lo, mid, depth + 1, q, r2, limit, n);
  if (diff >= 0.0 || diff * diff <= r2) count(mid + 1, hi, depth + 1, q, r2, limit, n);
}

std::vector<std::size_t> PointIndex::within(const Vec3& query, double radius) const {
  std::vector<std::size_t> out;
  if (!points_.empty()) collect(0, order_.size(), 0, query, radius * radius, out);
  std::sort(out.begin(), out.end());
  return out;
}

void PointIndex::collect(std::size_t lo, std::size_t hi, int depth, const Vec3& q, double r2,
                         std::vector<std::size_t>& out) const {
  if (lo >= hi) return;
  const std::size_t mid = (lo + hi) / 2;
  const std::size_t idx = order_[mid];
  if ((points_[idx] - q).squaredNorm() <= r2) out.push_back(idx);
  const int axis = depth % 3;
  const double diff = q[axis] - points_[idx][axis];
  if (diff <= 0.0 || diff * diff <= r2) collect(lo, mid, depth + 1, q, r2, out);
  if (diff >= 0.0 || diff * diff <= r2) collect(mid + 1, hi, depth + 1, q, r2, out);
}

}  // namespace arecon
