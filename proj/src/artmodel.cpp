#include "arecon/artmodel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "arecon/inside_test.hpp"

namespace arecon {
namespace {

using nlohmann::json;

constexpr double kAxisTolerance = 1e-3;

Vec3 read_vec3(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) {
    throw Error(std::string("model spec: ") + what + " must be an array of 3 numbers");
  }
  Vec3 v;
  for (int i = 0; i < 3; ++i) {
    if (!j[i].is_number()) throw Error(std::string("model spec: ") + what + " must be numeric");
    v[i] = j[i].get<double>();
  }
  return v;
}

json write_vec3(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

TriangleMesh read_mesh_arrays(const json& j) {
  TriangleMesh mesh;
  if (!j.contains("vertices") || !j.contains("faces")) {
    throw Error("model spec: explicit mesh needs `vertices` and `faces`");
  }
  for (const auto& v : j.at("vertices")) mesh.vertices.push_back(read_vec3(v, "vertex"));
  for (const auto& f : j.at("faces")) {
    if (!f.is_array() || f.size() != 3) throw Error("model spec: faces must be index triples");
    Face face{};
    for (int i = 0; i < 3; ++i) {
      if (!f[i].is_number_integer() || f[i].get<long long>() < 0) {
        throw Error("model spec: face index must be a non-negative integer");
      }
      face[i] = f[i].get<std::uint32_t>();
    }
    mesh.faces.push_back(face);
  }
  return mesh;
}

void transform_mesh(TriangleMesh& mesh, const json& prim) {
  Mat3 rot = Mat3::Identity();
  Vec3 shift = Vec3::Zero();
  if (prim.contains("rotate")) rot = rotation_from_vector(read_vec3(prim.at("rotate"), "rotate"));
  if (prim.contains("translate")) shift = read_vec3(prim.at("translate"), "translate");
  for (auto& v : mesh.vertices) v = rot * v + shift;
}

TriangleMesh read_primitive(const json& prim) {
  TriangleMesh mesh;
  if (prim.contains("box")) {
    const Vec3 size = read_vec3(prim.at("box"), "box");
    if ((size.array() <= 0.0).any()) throw Error("model spec: box dimensions must be positive");
    mesh = make_box(size);
  } else if (prim.contains("cylinder")) {
    const auto& c = prim.at("cylinder");
    const double radius = c.at("radius").get<double>();
    const double height = c.at("height").get<double>();
    const int segments = c.value("segments", 24);
    if (radius <= 0.0 || height <= 0.0) throw Error("model spec: cylinder dimensions must be positive");
    mesh = make_cylinder(radius, height, segments);
  } else if (prim.contains("mesh")) {
    mesh = read_mesh_arrays(prim.at("mesh"));
  } else {
    throw Error("model spec: primitive must be one of box, cylinder, mesh");
  }
  transform_mesh(mesh, prim);
  return mesh;
}

int resolve_part(const json& ref, const std::vector<Part>& parts) {
  if (ref.is_number_integer()) {
    const auto id = ref.get<long long>();
    if (id < 0 || id >= static_cast<long long>(parts.size())) {
      throw Error("model spec: dangling reference to part id " + std::to_string(id));
    }
    return static_cast<int>(id);
  }
  if (ref.is_string()) {
    const auto name = ref.get<std::string>();
    for (const auto& p : parts) {
      if (p.name == name) return p.id;
    }
    throw Error("model spec: dangling reference to part '" + name + "'");
  }
  throw Error("model spec: part reference must be an id or a name");
}

}  // namespace

TriangleMesh Part::mesh() const {
  TriangleMesh out;
  for (const auto& s : shells) out.append(s);
  return out;
}

int ArticulatedModel::base_part() const {
  for (const auto& p : parts) {
    if (p.joint < 0) return p.id;
  }
  return -1;
}

std::vector<int> ArticulatedModel::part_joints() const {
  std::vector<int> out;
  out.reserve(parts.size());
  for (const auto& p : parts) out.push_back(p.joint);
  return out;
}

std::size_t ArticulatedModel::vertex_count() const {
  std::size_t n = 0;
  for (const auto& p : parts) {
    for (const auto& s : p.shells) n += s.vertices.size();
  }
  return n;
}

void ArticulatedModel::validate() const {
  if (parts.size() < 2) throw Error("model: need at least 2 parts");
  if (joints.empty()) throw Error("model: need at least 1 joint");
  if (auto shape = known_category(category)) {
    if (shape->parts != parts.size() || shape->joints != joints.size()) {
      throw Error("model: category '" + category + "' requires " + std::to_string(shape->parts) +
                  " parts and " + std::to_string(shape->joints) + " joints");
    }
  }
  int bases = 0;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const auto& p = parts[i];
    if (p.id != static_cast<int>(i)) throw Error("model: part ids must be consecutive");
    if (p.shells.empty()) throw Error("model: part '" + p.name + "' has no geometry");
    for (const auto& s : p.shells) {
      s.validate();
      if (s.faces.empty()) throw Error("model: part '" + p.name + "' has an empty shell");
      if (!analyze_topology(s).closed_manifold()) {
        throw Error("model: part '" + p.name + "' is not watertight");
      }
    }
    if (p.joint < 0) ++bases;
  }
  if (bases != 1) throw Error("model: exactly one base part required");
  const int base = base_part();
  for (std::size_t j = 0; j < joints.size(); ++j) {
    const auto& jt = joints[j];
    if (jt.id != static_cast<int>(j)) throw Error("model: joint ids must be consecutive");
    if (jt.moving_part < 0 || jt.moving_part >= static_cast<int>(parts.size()) || jt.base_part < 0 ||
        jt.base_part >= static_cast<int>(parts.size())) {
      throw Error("model: dangling reference in joint " + std::to_string(j));
    }
    if (jt.moving_part == jt.base_part) throw Error("model: joint moves its own base");
    if (jt.base_part != base) throw Error("model: multi-level kinematic chains are not supported");
    if (parts[jt.moving_part].joint != jt.id) throw Error("model: part/joint ownership mismatch");
    if (std::abs(jt.axis.norm() - 1.0) > 1e-9) throw Error("model: joint axis must be unit length");
    if (!(jt.lower <= 0.0 && 0.0 <= jt.upper)) throw Error("model: joint limits must bracket 0");
    if (!jt.pivot.allFinite()) throw Error("model: non-finite pivot");
  }
}

std::optional<CategoryShape> known_category(std::string_view category) {
  if (category == "laptop") return CategoryShape{2, 1};
  if (category == "oven") return CategoryShape{2, 1};
  if (category == "eyeglasses") return CategoryShape{3, 2};
  return std::nullopt;
}

ArticulatedModel parse_model(std::string_view spec_text) {
  json doc;
  try {
    doc = json::parse(spec_text.begin(), spec_text.end(), nullptr, true, /*ignore_comments=*/true);
  } catch (const json::exception& e) {
    throw Error(std::string("model spec: malformed document: ") + e.what());
  }
  ArticulatedModel model;
  try {
    if (!doc.is_object()) throw Error("model spec: malformed document: top level must be an object");
    model.category = doc.at("category").get<std::string>();

    for (const auto& pj : doc.at("parts")) {
      Part part;
      part.id = static_cast<int>(model.parts.size());
      part.name = pj.value("name", "part" + std::to_string(part.id));
      if (pj.contains("primitives")) {
        for (const auto& prim : pj.at("primitives")) part.shells.push_back(read_primitive(prim));
      }
      if (pj.contains("vertices") || pj.contains("faces")) part.shells.push_back(read_mesh_arrays(pj));
      model.parts.push_back(std::move(part));
    }

    for (const auto& jj : doc.at("joints")) {
      Joint joint;
      joint.id = static_cast<int>(model.joints.size());
      joint.name = jj.value("name", "joint" + std::to_string(joint.id));
      const auto type = jj.value("type", std::string("revolute"));
      if (type != "revolute") {
        throw Error("model spec: joint '" + joint.name + "' has unsupported type '" + type +
                    "' (only revolute joints are supported)");
      }
      joint.base_part = resolve_part(jj.at("base"), model.parts);
      joint.moving_part = resolve_part(jj.at("moving"), model.parts);
      joint.pivot = read_vec3(jj.at("pivot"), "pivot");
      Vec3 axis = read_vec3(jj.at("axis"), "axis");
      const double len = axis.norm();
      if (std::abs(len - 1.0) > kAxisTolerance) {
        throw Error("model spec: joint '" + joint.name + "' axis is not unit length");
      }
      joint.axis = axis / len;
      const auto& lim = jj.at("limits");
      if (!lim.is_array() || lim.size() != 2) throw Error("model spec: limits must be [min, max]");
      joint.lower = lim[0].get<double>();
      joint.upper = lim[1].get<double>();
      if (model.parts[joint.moving_part].joint >= 0) {
        throw Error("model spec: part '" + model.parts[joint.moving_part].name + "' is moved by two joints");
      }
      model.parts[joint.moving_part].joint = joint.id;
      model.joints.push_back(std::move(joint));
    }
  } catch (const json::exception& e) {
    throw Error(std::string("model spec: malformed document: ") + e.what());
  }
  model.validate();
  return model;
}

std::string serialize_model(const ArticulatedModel& model) {
  json doc;
  doc["category"] = model.category;
  doc["parts"] = json::array();
  for (const auto& p : model.parts) {
    json pj;
    pj["name"] = p.name;
    pj["primitives"] = json::array();
    for (const auto& s : p.shells) {
      json verts = json::array();
      for (const auto& v : s.vertices) verts.push_back(write_vec3(v));
      json faces = json::array();
      for (const auto& f : s.faces) faces.push_back({f[0], f[1], f[2]});
      pj["primitives"].push_back({{"mesh", {{"vertices", verts}, {"faces", faces}}}});
    }
    doc["parts"].push_back(pj);
  }
  doc["joints"] = json::array();
  for (const auto& j : model.joints) {
    doc["joints"].push_back({{"name", j.name},
                             {"type", "revolute"},
                             {"base", j.base_part},
                             {"moving", j.moving_part},
                             {"pivot", write_vec3(j.pivot)},
                             {"axis", write_vec3(j.axis)},
                             {"limits", {j.lower, j.upper}}});
  }
  return doc.dump(1);
}

ArticulatedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open model spec " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_model(buf.str());
}

ArticulatedModel normalize_to_container(const ArticulatedModel& model) {
  Aabb box;
  for (const auto& p : model.parts) {
    for (const auto& s : p.shells) {
      for (const auto& v : s.vertices) box.extend(v);
    }
  }
  const double longest = box.empty() ? 0.0 : box.extent().maxCoeff();
  if (!(longest > 0.0)) throw Error("normalize: degenerate model (zero extent)");
  const double scale = 1.0 / longest;
  const Vec3 center = box.center();
  const Vec3 target = Vec3::Constant(0.5);
  auto map = [&](const Vec3& v) -> Vec3 { return (v - center) * scale + target; };

  ArticulatedModel out = model;
  for (auto& p : out.parts) {
    for (auto& s : p.shells) {
      for (auto& v : s.vertices) v = map(v);
    }
  }
  for (auto& j : out.joints) j.pivot = map(j.pivot);
  return out;
}

ArticulatedModel scale_model(const ArticulatedModel& model, const Vec3& factors) {
  if ((factors.array() <= 0.0).any()) throw Error("scale_model: factors must be positive");
  ArticulatedModel out = model;
  for (auto& p : out.parts) {
    for (auto& s : p.shells) {
      for (auto& v : s.vertices) v = v.cwiseProduct(factors);
    }
  }
  for (auto& j : out.joints) {
    j.pivot = j.pivot.cwiseProduct(factors);
    j.axis = j.axis.cwiseProduct(factors).normalized();
  }
  return out;
}

std::vector<std::vector<Vec3>> forward_kinematics(const ArticulatedModel& model, const Pose& pose) {
  if (pose.angles.size() != model.num_joints()) {
    throw Error("forward_kinematics: pose has " + std::to_string(pose.angles.size()) + " angles, model has " +
                std::to_string(model.num_joints()) + " joints");
  }
  std::vector<std::vector<Vec3>> out;
  out.reserve(model.parts.size());
  for (const auto& p : model.parts) {
    std::vector<Vec3> verts;
    for (const auto& s : p.shells) verts.insert(verts.end(), s.vertices.begin(), s.vertices.end());
    if (p.joint >= 0) {
      const auto& j = model.joints[p.joint];
      const Mat3 rot = axis_angle_matrix(j.axis, pose.angles[p.joint]);
      for (auto& v : verts) v = rotate_about(v, j.pivot, rot);
    }
    out.push_back(std::move(verts));
  }
  return out;
}

ArticulatedModel posed_model(const ArticulatedModel& model, const Pose& pose) {
  const auto posed = forward_kinematics(model, pose);
  ArticulatedModel out = model;
  for (std::size_t i = 0; i < out.parts.size(); ++i) {
    std::size_t k = 0;
    for (auto& s : out.parts[i].shells) {
      for (auto& v : s.vertices) v = posed[i][k++];
    }
  }
  return out;
}

TriangleMesh posed_mesh(const ArticulatedModel& model, const Pose& pose, std::vector<int>* face_parts) {
  const ArticulatedModel posed = posed_model(model, pose);
  TriangleMesh out;
  if (face_parts) face_parts->clear();
  for (const auto& p : posed.parts) {
    for (const auto& s : p.shells) {
      out.append(s);
      if (face_parts) face_parts->insert(face_parts->end(), s.faces.size(), p.id);
    }
  }
  return out;
}

std::vector<bool> gt_occupancy(const ArticulatedModel& model, const Pose& pose, std::span<const Vec3> queries) {
  const ArticulatedModel posed = posed_model(model, pose);
  std::vector<InsideTester> testers;
  for (const auto& p : posed.parts) {
    for (const auto& s : p.shells) testers.emplace_back(s);
  }
  std::vector<bool> out(queries.size(), false);
  for (std::size_t i = 0; i < queries.size(); ++i) {
    for (const auto& t : testers) {
      if (t.inside(queries[i])) {
        out[i] = true;
        break;
      }
    }
  }
  return out;
}

Pose clamp_pose(const ArticulatedModel& model, const Pose& pose, bool* clamped) {
  if (pose.angles.size() != model.num_joints()) throw Error("pose length does not match joint count");
  Pose out = pose;
  bool any = false;
  for (std::size_t j = 0; j < out.angles.size(); ++j) {
    const double c = std::clamp(out.angles[j], model.joints[j].lower, model.joints[j].upper);
    if (c != out.angles[j]) any = true;
    out.angles[j] = c;
  }
  if (clamped) *clamped = any;
  return out;
}

void require_pose_in_limits(const ArticulatedModel& model, const Pose& pose) {
  if (pose.angles.size() != model.num_joints()) throw Error("pose length does not match joint count");
  for (std::size_t j = 0; j < pose.angles.size(); ++j) {
    if (pose.angles[j] < model.joints[j].lower || pose.angles[j] > model.joints[j].upper) {
      throw Error("pose angle " + std::to_string(j) + " outside joint limits");
    }
  }
}

}  // namespace arecon
