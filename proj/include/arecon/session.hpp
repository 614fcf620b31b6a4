#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "arecon/canon.hpp"
#include "arecon/recon.hpp"
#include "arecon/repose.hpp"

namespace arecon {

// A reconstruction ready for reposing. On disk: model.spec, cloud.ply,
// mesh.obj, binding.bin and meta.json in one directory.
struct Session {
  std::string id;
  std::string model_spec;  // serialized, normalized model
  FeaturedPointCloud cloud;  // canonical union
  std::vector<JointEstimate> estimates;
  Rig rig;
  TriangleMesh mesh;  // canonical
  SkinBinding binding;
  FieldParams field;
  nlohmann::json provenance = nlohmann::json::object();

  ArticulatedModel model() const { return parse_model(model_spec); }
  /// Throws when mesh, binding, cloud and rig disagree.
  void validate() const;
};

bool same_session(const Session& a, const Session& b);

void save_session(const Session& session, const std::filesystem::path& dir);
Session load_session(const std::filesystem::path& dir);

nlohmann::json estimates_to_json(const std::vector<JointEstimate>& estimates);
std::vector<JointEstimate> estimates_from_json(const nlohmann::json& j);

}  // namespace arecon
