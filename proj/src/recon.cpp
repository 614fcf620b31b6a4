#include "arecon/recon.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <cstdlib>
#include <string>

#include "arecon/point_index.hpp"
#include "binio.hpp"

namespace arecon {

std::size_t VoxelFeatureGrid::occupied_count() const {
  return static_cast<std::size_t>(std::count_if(counts.begin(), counts.end(), [](auto c) { return c > 0; }));
}

std::size_t VoxelFeatureGrid::voxel_of(const Vec3& p) const {
  std::uint32_t ijk[3];
  for (int a = 0; a < 3; ++a) {
    const double x = std::clamp(p[a], 0.0, 1.0);
    ijk[a] = std::min(static_cast<std::uint32_t>(x * resolution), resolution - 1);
  }
  return index(ijk[0], ijk[1], ijk[2]);
}

VoxelFeatureGrid voxelize(const FeaturedPointCloud& cloud, std::uint32_t resolution) {
  if (resolution < 8) throw Error("voxelize: resolution must be at least 8");
  if (cloud.empty()) throw Error("voxelize: empty cloud");
  VoxelFeatureGrid g;
  g.resolution = resolution;
  g.channels = cloud.channels;
  const std::size_t cells = static_cast<std::size_t>(resolution) * resolution * resolution;
  g.counts.assign(cells, 0);
  g.mean_features.assign(cells * g.channels, 0.0);
  const std::size_t C = g.channels;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const std::size_t v = g.voxel_of(cloud.points[i]);
    ++g.counts[v];
    for (std::size_t k = 0; k < C; ++k) g.mean_features[v * C + k] += cloud.features[i * C + k];
  }
  // float features summed in double: order effects stay at double rounding
  for (std::size_t v = 0; v < cells; ++v) {
    if (!g.counts[v]) continue;
    for (std::size_t k = 0; k < C; ++k) g.mean_features[v * C + k] /= g.counts[v];
  }
  return g;
}

Vec3 ScalarField::lattice_point(std::uint32_t x, std::uint32_t y, std::uint32_t z) const {
  const double h = 1.0 / (resolution - 1);
  return {x * h, y * h, z * h};
}

void ScalarField::validate() const {
  if (resolution < 2) throw Error("field: resolution must be at least 2");
  if (values.size() != static_cast<std::size_t>(resolution) * resolution * resolution) {
    throw Error("field: value count does not match resolution");
  }
  if (!(iso > 0.0 && iso < 1.0)) throw Error("field: iso level must lie in (0, 1)");
  for (double v : values) {
    if (!std::isfinite(v)) throw Error("field: non-finite value");
  }
}

FieldParams FieldParams::for_resolution(std::uint32_t resolution) {
  return {resolution, 1.5 / resolution, 4.0 * resolution, 0.75, 2};
}

void FieldParams::validate() const {
  if (resolution < 2) throw Error("field resolution must be at least 2");
  if (!(tau > 0.0) || !std::isfinite(tau)) throw Error("field tau must be positive");
  if (!(beta > 0.0) || !std::isfinite(beta)) throw Error("field beta must be positive");
  if (!(shrink >= 0.0 && shrink < 1.0)) throw Error("field shrink must lie in [0, 1)");
}

ScalarField occupancy_field(std::span<const Vec3> points, const FieldParams& params) {
  params.validate();
  if (points.empty()) throw Error("occupancy_field: empty cloud");
  const PointIndex index(points);
  ScalarField f;
  f.resolution = params.resolution;
  const std::uint32_t n = params.resolution;
  f.values.resize(static_cast<std::size_t>(n) * n * n);
  std::size_t k = 0;
  for (std::uint32_t z = 0; z < n; ++z) {
    for (std::uint32_t y = 0; y < n; ++y) {
      for (std::uint32_t x = 0; x < n; ++x) {
        const double d = std::sqrt(index.nearest(f.lattice_point(x, y, z)).dist2);
        f.values[k++] = 1.0 / (1.0 + std::exp(-params.beta * (params.tau - d)));
      }
    }
  }
  return f;
}

ScalarField occupancy_field(const FeaturedPointCloud& cloud, const FieldParams& params) {
  return occupancy_field(std::span<const Vec3>(cloud.points), params);
}

std::vector<Vec3> drop_isolated(std::span<const Vec3> points, double radius, std::uint32_t min_neighbors) {
  if (min_neighbors == 0) return {points.begin(), points.end()};
  const PointIndex index(points);
  std::vector<Vec3> kept;
  kept.reserve(points.size());
  for (const auto& p : points)
    if (index.count_within(p, radius, min_neighbors + 1) > min_neighbors) kept.push_back(p);
  return kept;
}

void shrink_to_points(TriangleMesh& mesh, std::span<const Vec3> points, const FieldParams& params) {
  params.validate();
  if (params.shrink == 0.0 || points.empty()) return;
  const PointIndex index(points);
  const double radius = 2.5 * params.tau;
  for (auto& v : mesh.vertices) {
    const auto near = index.within(v, radius);
    if (near.size() < 3) {
      const Vec3& p = index.point(index.nearest(v).index);
      v = p + (1.0 - params.shrink) * (v - p);
      continue;
    }
    Vec3 c = Vec3::Zero();
    for (auto i : near) c += index.point(i);
    c /= static_cast<double>(near.size());
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (auto i : near) {
      const Vec3 d = index.point(i) - c;
      cov += d * d.transpose();
    }
    // Least-variance direction of the neighbourhood is the local normal.
    const Vec3 n = Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(cov).eigenvectors().col(0);
    v -= params.shrink * (v - c).dot(n) * n;
  }
}

TriangleMesh mesh_from_points(std::span<const Vec3> points, const FieldParams& params) {
  params.validate();
  std::vector<Vec3> kept = drop_isolated(points, 2.0 * params.tau, params.min_neighbors);
  // Nothing dense enough: mesh what there is rather than nothing.
  if (kept.empty()) kept.assign(points.begin(), points.end());
  TriangleMesh mesh = marching_cubes(occupancy_field(kept, params));
  shrink_to_points(mesh, kept, params);
  return mesh;
}

std::string encode_field(const ScalarField& field) {
  field.validate();
  binio::Writer w;
  w.raw("FLD1");
  w.put(field.resolution);
  w.put(static_cast<float>(field.iso));
  for (double v : field.values) w.put(static_cast<float>(v));
  return w.take();
}

ScalarField decode_field(std::string_view bytes) {
  binio::Reader r(bytes, "field dump");
  if (r.raw(4) != "FLD1") throw Error("field dump: bad magic");
  ScalarField f;
  f.resolution = r.get<std::uint32_t>();
  f.iso = r.get<float>();
  const std::size_t n = static_cast<std::size_t>(f.resolution) * f.resolution * f.resolution;
  if (r.remaining() != n * 4) throw Error("field dump: body size does not match resolution");
  f.values.resize(n);
  for (auto& v : f.values) v = r.get<float>();
  f.validate();
  return f;
}

}  // namespace arecon
