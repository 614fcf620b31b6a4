#include "arecon/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>

namespace arecon {

Mat3 axis_angle_matrix(const Vec3& axis, double angle) {
  return Eigen::AngleAxisd(angle, axis).toRotationMatrix();
}

Mat3 rotation_from_vector(const Vec3& rotvec) {
  const double angle = rotvec.norm();
  if (angle == 0.0) return Mat3::Identity();
  return axis_angle_matrix(rotvec / angle, angle);
}

Vec3 wrap_rotation(const Vec3& rotvec) {
  const double angle = rotvec.norm();
  if (angle <= std::numbers::pi) return rotvec;
  // Reduce to (-pi, pi] about the same axis.
  double wrapped = std::remainder(angle, 2.0 * std::numbers::pi);
  return rotvec * (wrapped / angle);
}

Aabb TriangleMesh::bounds() const {
  Aabb box;
  for (const auto& v : vertices) box.extend(v);
  return box;
}

double TriangleMesh::face_area(std::size_t f) const {
  const auto& t = faces[f];
  return 0.5 * (vertices[t[1]] - vertices[t[0]]).cross(vertices[t[2]] - vertices[t[0]]).norm();
}

Vec3 TriangleMesh::face_normal(std::size_t f) const {
  const auto& t = faces[f];
  Vec3 n = (vertices[t[1]] - vertices[t[0]]).cross(vertices[t[2]] - vertices[t[0]]);
  const double len = n.norm();
  return len > 0.0 ? Vec3(n / len) : Vec3::Zero();
}

double TriangleMesh::area() const {
  double total = 0.0;
  for (std::size_t f = 0; f < faces.size(); ++f) total += face_area(f);
  return total;
}

void TriangleMesh::validate() const {
  for (const auto& v : vertices) {
    if (!v.allFinite()) throw Error("mesh: non-finite vertex coordinate");
  }
  for (const auto& t : faces) {
    for (auto i : t) {
      if (i >= vertices.size()) throw Error("mesh: face index out of range");
    }
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) {
      throw Error("mesh: face references the same vertex twice");
    }
  }
}

void TriangleMesh::append(const TriangleMesh& other) {
  const auto base = static_cast<std::uint32_t>(vertices.size());
  vertices.insert(vertices.end(), other.vertices.begin(), other.vertices.end());
  for (const auto& t : other.faces) faces.push_back({t[0] + base, t[1] + base, t[2] + base});
}

MeshTopology analyze_topology(const TriangleMesh& mesh) {
  MeshTopology topo;
  topo.faces = mesh.faces.size();
  // (min, max) -> (use count, net orientation)
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::pair<int, int>> edges;
  std::vector<bool> used(mesh.vertices.size(), false);
  for (const auto& t : mesh.faces) {
    for (int k = 0; k < 3; ++k) {
      const auto a = t[k];
      const auto b = t[(k + 1) % 3];
      used[a] = true;
      auto& e = edges[{std::min(a, b), std::max(a, b)}];
      e.first += 1;
      e.second += a < b ? 1 : -1;
    }
  }
  topo.vertices = static_cast<std::size_t>(std::count(used.begin(), used.end(), true));
  topo.edges = edges.size();
  for (const auto& [key, e] : edges) {
    if (e.first == 1) ++topo.boundary_edges;
    if (e.first > 2) ++topo.nonmanifold_edges;
    if (e.first == 2 && e.second != 0) ++topo.misoriented_edges;
  }
  return topo;
}

double signed_volume(const TriangleMesh& mesh) {
  double vol = 0.0;
  for (const auto& t : mesh.faces) {
    vol += mesh.vertices[t[0]].dot(mesh.vertices[t[1]].cross(mesh.vertices[t[2]]));
  }
  return vol / 6.0;
}

TriangleMesh make_box(const Vec3& size) {
  const Vec3 h = 0.5 * size;
  TriangleMesh m;
  for (int i = 0; i < 8; ++i) {
    m.vertices.emplace_back((i & 1) ? h.x() : -h.x(), (i & 2) ? h.y() : -h.y(), (i & 4) ? h.z() : -h.z());
  }
  // Two triangles per side, counter-clockwise seen from outside.
  m.faces = {{0, 2, 1}, {1, 2, 3},   // -z
             {4, 5, 6}, {5, 7, 6},   // +z
             {0, 1, 4}, {1, 5, 4},   // -y
             {2, 6, 3}, {3, 6, 7},   // +y
             {0, 4, 2}, {2, 4, 6},   // -x
             {1, 3, 5}, {3, 7, 5}};  // +x
  return m;
}

TriangleMesh make_cylinder(double radius, double height, int segments) {
  if (segments < 3) throw Error("cylinder: need at least 3 segments");
  TriangleMesh m;
  const double hz = 0.5 * height;
  const auto n = static_cast<std::uint32_t>(segments);
  for (std::uint32_t i = 0; i < n; ++i) {
    const double a = 2.0 * std::numbers::pi * i / n;
    m.vertices.emplace_back(radius * std::cos(a), radius * std::sin(a), -hz);
    m.vertices.emplace_back(radius * std::cos(a), radius * std::sin(a), hz);
  }
  const std::uint32_t bottom = 2 * n;
  const std::uint32_t top = 2 * n + 1;
  m.vertices.emplace_back(0.0, 0.0, -hz);
  m.vertices.emplace_back(0.0, 0.0, hz);
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::uint32_t j = (i + 1) % n;
    const std::uint32_t b0 = 2 * i, t0 = 2 * i + 1, b1 = 2 * j, t1 = 2 * j + 1;
    m.faces.push_back({b0, b1, t0});
    m.faces.push_back({t0, b1, t1});
    m.faces.push_back({bottom, b1, b0});
    m.faces.push_back({top, t0, t1});
  }
  return m;
}

std::vector<Vec3> sample_surface(const TriangleMesh& mesh, std::size_t n, std::uint64_t seed) {
  if (mesh.faces.empty()) throw Error("sample_surface: empty mesh");
  if (n == 0) throw Error("sample_surface: n must be positive");
  std::vector<double> cumulative(mesh.faces.size());
  double total = 0.0;
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    total += mesh.face_area(f);
    cumulative[f] = total;
  }
  if (!(total > 0.0)) throw Error("sample_surface: zero-area mesh");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::vector<Vec3> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double pick = uni(rng) * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), pick);
    const std::size_t f = std::min<std::size_t>(it - cumulative.begin(), mesh.faces.size() - 1);
    const double r1 = std::sqrt(uni(rng));
    const double r2 = uni(rng);
    const auto& t = mesh.faces[f];
    out.push_back((1.0 - r1) * mesh.vertices[t[0]] + r1 * (1.0 - r2) * mesh.vertices[t[1]] +
                  r1 * r2 * mesh.vertices[t[2]]);
  }
  return out;
}

}  // namespace arecon
