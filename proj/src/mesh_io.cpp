#include <charconv>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "arecon/recon.hpp"
#include "binio.hpp"

namespace arecon {
namespace {

void check_parts(const TriangleMesh& mesh, const std::vector<int>* parts) {
  if (parts && parts->size() != mesh.vertices.size()) {
    throw Error("export_mesh: part assignment length does not match vertex count");
  }
}

std::string to_obj(const TriangleMesh& mesh) {
  std::string out;
  char buf[128];
  for (const auto& v : mesh.vertices) {
    std::snprintf(buf, sizeof buf, "v %.17g %.17g %.17g\n", v.x(), v.y(), v.z());
    out += buf;
  }
  for (const auto& f : mesh.faces) {
    std::snprintf(buf, sizeof buf, "f %u %u %u\n", f[0] + 1, f[1] + 1, f[2] + 1);
    out += buf;
  }
  return out;
}

double parse_double(std::string_view tok) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || p != tok.data() + tok.size()) throw Error("obj: bad number '" + std::string(tok) + "'");
  return v;
}

TriangleMesh from_obj(std::string_view text) {
  TriangleMesh mesh;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      std::string a, b, c;
      if (!(ls >> a >> b >> c)) throw Error("obj: vertex needs three coordinates");
      mesh.vertices.emplace_back(parse_double(a), parse_double(b), parse_double(c));
    } else if (tag == "f") {
      std::vector<long> idx;
      std::string tok;
      while (ls >> tok) {
        // "i", "i/t", "i//n" and "i/t/n" all start with the vertex index.
        const auto slash = tok.find('/');
        idx.push_back(std::stol(tok.substr(0, slash)));
      }
      if (idx.size() < 3) throw Error("obj: face with fewer than three vertices");
      for (auto& i : idx) {
        if (i < 0) i += static_cast<long>(mesh.vertices.size()) + 1;
        if (i < 1) throw Error("obj: face index out of range");
        --i;
      }
      for (std::size_t k = 1; k + 1 < idx.size(); ++k) {
        mesh.faces.push_back({static_cast<std::uint32_t>(idx[0]), static_cast<std::uint32_t>(idx[k]),
                              static_cast<std::uint32_t>(idx[k + 1])});
      }
    }
  }
  return mesh;
}

std::string to_ply(const TriangleMesh& mesh, const std::vector<int>* parts) {
  std::ostringstream h;
  h << "ply\nformat binary_little_endian 1.0\n";
  h << "element vertex " << mesh.vertices.size() << "\n";
  h << "property double x\nproperty double y\nproperty double z\n";
  if (parts) h << "property int part\n";
  h << "element face " << mesh.faces.size() << "\n";
  h << "property list uchar uint vertex_indices\nend_header\n";
  binio::Writer w;
  w.raw(h.str());
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    for (int a = 0; a < 3; ++a) w.put(mesh.vertices[i][a]);
    if (parts) w.put(static_cast<std::int32_t>((*parts)[i]));
  }
  for (const auto& f : mesh.faces) {
    w.put(static_cast<std::uint8_t>(3));
    for (auto i : f) w.put(i);
  }
  return w.take();
}

TriangleMesh from_ply(std::string_view bytes, std::vector<int>* parts) {
  binio::Reader r(bytes, "mesh ply");
  if (r.line() != "ply") throw Error("mesh ply: missing magic");
  if (r.line() != "format binary_little_endian 1.0") throw Error("mesh ply: unsupported format");
  long long nv = -1, nf = -1;
  bool has_part = false;
  for (;;) {
    const std::string line(r.line());
    if (line == "end_header") break;
    if (line.rfind("element vertex ", 0) == 0) nv = std::stoll(line.substr(15));
    if (line.rfind("element face ", 0) == 0) nf = std::stoll(line.substr(13));
    if (line == "property int part") has_part = true;
  }
  if (nv < 0 || nf < 0) throw Error("mesh ply: missing element counts");
  TriangleMesh mesh;
  if (parts) parts->clear();
  for (long long i = 0; i < nv; ++i) {
    Vec3 p;
    for (int a = 0; a < 3; ++a) p[a] = r.get<double>();
    mesh.vertices.push_back(p);
    if (has_part) {
      const int part = r.get<std::int32_t>();
      if (parts) parts->push_back(part);
    }
  }
  for (long long i = 0; i < nf; ++i) {
    if (r.get<std::uint8_t>() != 3) throw Error("mesh ply: only triangles are supported");
    Face f;
    for (auto& k : f) k = r.get<std::uint32_t>();
    mesh.faces.push_back(f);
  }
  if (!r.done()) throw Error("mesh ply: trailing bytes after body");
  return mesh;
}

std::string to_json(const TriangleMesh& mesh, const std::vector<int>* parts) {
  nlohmann::json j;
  auto& vs = j["vertices"] = nlohmann::json::array();
  for (const auto& v : mesh.vertices) vs.push_back({v.x(), v.y(), v.z()});
  auto& fs = j["faces"] = nlohmann::json::array();
  for (const auto& f : mesh.faces) fs.push_back({f[0], f[1], f[2]});
  if (parts) j["part_assignment"] = *parts;
  return j.dump();
}

TriangleMesh from_json(std::string_view text, std::vector<int>* parts) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("mesh json: ") + e.what());
  }
  TriangleMesh mesh;
  try {
    for (const auto& v : j.at("vertices")) {
      mesh.vertices.emplace_back(v.at(0).get<double>(), v.at(1).get<double>(), v.at(2).get<double>());
    }
    for (const auto& f : j.at("faces")) {
      mesh.faces.push_back({f.at(0).get<std::uint32_t>(), f.at(1).get<std::uint32_t>(), f.at(2).get<std::uint32_t>()});
    }
    if (parts) {
      parts->clear();
      if (j.contains("part_assignment")) *parts = j["part_assignment"].get<std::vector<int>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("mesh json: ") + e.what());
  }
  return mesh;
}

}  // namespace

MeshFormat parse_mesh_format(std::string_view name) {
  if (name == "obj") return MeshFormat::kObj;
  if (name == "ply") return MeshFormat::kPly;
  if (name == "json" || name == "mesh-json") return MeshFormat::kJson;
  throw Error("unknown mesh format '" + std::string(name) + "'");
}

std::string export_mesh(const TriangleMesh& mesh, MeshFormat format, const std::vector<int>* part_assignment) {
  mesh.validate();
  check_parts(mesh, part_assignment);
  switch (format) {
    case MeshFormat::kObj: return to_obj(mesh);
    case MeshFormat::kPly: return to_ply(mesh, part_assignment);
    case MeshFormat::kJson: return to_json(mesh, part_assignment);
  }
  throw Error("unknown mesh format");
}

TriangleMesh parse_mesh(std::string_view bytes, MeshFormat format, std::vector<int>* part_assignment) {
  TriangleMesh mesh;
  switch (format) {
    case MeshFormat::kObj: mesh = from_obj(bytes); break;
    case MeshFormat::kPly: mesh = from_ply(bytes, part_assignment); break;
    case MeshFormat::kJson: mesh = from_json(bytes, part_assignment); break;
  }
  if (format == MeshFormat::kObj && part_assignment) part_assignment->clear();
  mesh.validate();
  return mesh;
}

}  // namespace arecon
