#include "arecon/session.hpp"

#include "arecon/fileio.hpp"

namespace arecon {
namespace {

using nlohmann::json;

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }
Vec3 json_vec(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }

json rig_json(const Rig& rig) {
  json j;
  j["part_joints"] = rig.part_joints;
  j["joints"] = json::array();
  for (const auto& r : rig.joints) {
    j["joints"].push_back({{"name", r.name},
                           {"center", vec_json(r.center)},
                           {"axis", vec_json(r.axis)},
                           {"limits", {r.lower, r.upper}}});
  }
  return j;
}

Rig rig_from_json(const json& j) {
  Rig rig;
  rig.part_joints = j.at("part_joints").get<std::vector<int>>();
  for (const auto& r : j.at("joints")) {
    rig.joints.push_back({r.at("name").get<std::string>(), json_vec(r.at("center")), json_vec(r.at("axis")),
                          r.at("limits").at(0).get<double>(), r.at("limits").at(1).get<double>()});
  }
  return rig;
}

bool same_mesh(const TriangleMesh& a, const TriangleMesh& b) {
  return a.vertices == b.vertices && a.faces == b.faces;
}

bool same_estimate(const JointEstimate& a, const JointEstimate& b) {
  if (a.center != b.center || a.rotation != b.rotation || a.total_weight != b.total_weight) return false;
  if (a.per_view.size() != b.per_view.size()) return false;
  for (std::size_t i = 0; i < a.per_view.size(); ++i) {
    const auto &x = a.per_view[i], &y = b.per_view[i];
    if (x.view_id != y.view_id || x.center != y.center || x.rotation != y.rotation || x.total_weight != y.total_weight)
      return false;
  }
  return true;
}

}  // namespace

json estimates_to_json(const std::vector<JointEstimate>& estimates) {
  json out = json::array();
  for (const auto& e : estimates) {
    json j{{"center", vec_json(e.center)}, {"rotation", vec_json(e.rotation)}, {"total_weight", e.total_weight}};
    j["per_view"] = json::array();
    for (const auto& v : e.per_view) {
      j["per_view"].push_back({{"view", v.view_id},
                               {"center", vec_json(v.center)},
                               {"rotation", vec_json(v.rotation)},
                               {"total_weight", v.total_weight}});
    }
    out.push_back(j);
  }
  return out;
}

std::vector<JointEstimate> estimates_from_json(const json& arr) {
  std::vector<JointEstimate> out;
  for (const auto& j : arr) {
    JointEstimate e;
    e.center = json_vec(j.at("center"));
    e.rotation = json_vec(j.at("rotation"));
    e.total_weight = j.at("total_weight").get<double>();
    for (const auto& v : j.at("per_view")) {
      e.per_view.push_back({v.at("view").get<std::uint32_t>(), json_vec(v.at("center")), json_vec(v.at("rotation")),
                            v.at("total_weight").get<double>()});
    }
    out.push_back(std::move(e));
  }
  return out;
}

void Session::validate() const {
  const ArticulatedModel m = model();
  if (binding.size() != mesh.vertices.size()) throw Error("session: binding and mesh vertex counts differ");
  if (rig.num_joints() != m.num_joints() || rig.part_joints.size() != m.num_parts()) {
    throw Error("session: rig does not match the model");
  }
  if (estimates.size() != m.num_joints()) throw Error("session: joint estimates do not match the model");
  if (cloud.num_joints != m.num_joints()) throw Error("session: cloud joint count does not match the model");
  mesh.validate();
  for (std::size_t i = 0; i < binding.size(); ++i) {
    if (binding.parts[i] < 0 || static_cast<std::size_t>(binding.parts[i]) >= m.num_parts()) {
      throw Error("session: binding references an unknown part");
    }
    if (binding.sources[i] >= cloud.size()) throw Error("session: binding references a missing cloud point");
  }
}

bool same_session(const Session& a, const Session& b) {
  if (a.id != b.id || a.model_spec != b.model_spec || !(a.cloud == b.cloud) || !(a.rig == b.rig)) return false;
  if (!same_mesh(a.mesh, b.mesh) || !(a.binding == b.binding) || a.provenance != b.provenance) return false;
  if (a.field.resolution != b.field.resolution || a.field.tau != b.field.tau || a.field.beta != b.field.beta ||
      a.field.shrink != b.field.shrink || a.field.min_neighbors != b.field.min_neighbors)
    return false;
  if (a.estimates.size() != b.estimates.size()) return false;
  for (std::size_t i = 0; i < a.estimates.size(); ++i) {
    if (!same_estimate(a.estimates[i], b.estimates[i])) return false;
  }
  return true;
}

void save_session(const Session& s, const std::filesystem::path& dir) {
  s.validate();
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create session directory " + dir.string() + ": " + ec.message());
  write_file_atomic(dir / "model.spec", s.model_spec);
  write_file_atomic(dir / "cloud.ply", encode_cloud_ply(s.cloud));
  write_file_atomic(dir / "mesh.obj", export_mesh(s.mesh, MeshFormat::kObj));
  write_file_atomic(dir / "binding.bin", encode_binding(s.binding));
  json meta;
  meta["format"] = "arecon-session";
  meta["version"] = 1;
  meta["id"] = s.id;
  meta["rig"] = rig_json(s.rig);
  meta["estimates"] = estimates_to_json(s.estimates);
  meta["field"] = {{"resolution", s.field.resolution}, {"tau", s.field.tau}, {"beta", s.field.beta},
                   {"shrink", s.field.shrink}, {"min_neighbors", s.field.min_neighbors}};
  meta["provenance"] = s.provenance;
  write_file_atomic(dir / "meta.json", meta.dump(1) + "\n");
}

Session load_session(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw Error("session directory " + dir.string() + " does not exist");
  Session s;
  try {
    const json meta = json::parse(read_file(dir / "meta.json"));
    if (meta.value("format", "") != "arecon-session") throw Error("session: meta.json has the wrong format tag");
    s.id = meta.at("id").get<std::string>();
    s.rig = rig_from_json(meta.at("rig"));
    s.estimates = estimates_from_json(meta.at("estimates"));
    const auto& f = meta.at("field");
    s.field = {f.at("resolution").get<std::uint32_t>(), f.at("tau").get<double>(), f.at("beta").get<double>(),
               f.at("shrink").get<double>(), f.at("min_neighbors").get<std::uint32_t>()};
    s.provenance = meta.at("provenance");
  } catch (const json::exception& e) {
    throw Error(std::string("session: corrupt meta.json: ") + e.what());
  }
  s.model_spec = read_file(dir / "model.spec");
  s.cloud = decode_cloud_ply(read_file(dir / "cloud.ply"));
  s.mesh = parse_mesh(read_file(dir / "mesh.obj"), MeshFormat::kObj);
  s.binding = decode_binding(read_file(dir / "binding.bin"));
  s.validate();
  return s;
}

}  // namespace arecon
