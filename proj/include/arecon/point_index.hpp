#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "arecon/mesh.hpp"

namespace arecon {

struct Neighbor {
  std::size_t index = std::numeric_limits<std::size_t>::max();
  double dist2 = std::numeric_limits<double>::infinity();
};

// Static kd-tree over a point set. Nearest-neighbour ties resolve to the
// lowest point index, so query results do not depend on tree layout.
class PointIndex {
 public:
  PointIndex() = default;
  explicit PointIndex(std::span<const Vec3> points);

  bool empty() const { return points_.empty(); }
  std::size_t size() const { return points_.size(); }
  const Vec3& point(std::size_t i) const { return points_[i]; }

  Neighbor nearest(const Vec3& query) const;
  // Points within `radius` of `query`, counting stops at `limit`.
  std::size_t count_within(const Vec3& query, double radius, std::size_t limit) const;
  // Indices of points within `radius` of `query`, ascending.
  std::vector<std::size_t> within(const Vec3& query, double radius) const;

 private:
  void build(std::size_t lo, std::size_t hi, int depth);
  void search(std::size_t lo, std::size_t hi, int depth, const Vec3& q, Neighbor& best) const;
  void count(std::size_t lo, std::size_t hi, int depth, const Vec3& q, double r2, std::size_t limit,
             std::size_t& n) const;
  void collect(std::size_t lo, std::size_t hi, int depth, const Vec3& q, double r2,
               std::vector<std::size_t>& out) const;

  std::vector<Vec3> points_;
  std::vector<std::size_t> order_;  // tree layout: node of [lo, hi) sits at (lo + hi) / 2
};

}  // namespace arecon
