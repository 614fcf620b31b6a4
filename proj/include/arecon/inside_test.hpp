#pragma once

#include <vector>

#include "arecon/mesh.hpp"

namespace arecon {

// Point-in-solid test for one closed, consistently oriented triangle shell.
// Casts a ray along +z and counts crossings; a ray that grazes an edge or
// vertex, or a query lying on the surface, is retried from a slightly
// jittered origin.
class InsideTester {
 public:
  explicit InsideTester(const TriangleMesh& shell);

  bool inside(const Vec3& p) const;

 private:
  enum class Cast { kOk, kDegenerate };
  Cast crossings(double x, double y, double z, int& count) const;

  TriangleMesh mesh_;
  Vec3 lo_, hi_;
  int grid_ = 1;
  double cell_x_ = 1.0, cell_y_ = 1.0;
  std::vector<std::vector<std::uint32_t>> buckets_;
};

}  // namespace arecon
