#include "arecon/service.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>

#include <httplib.h>
#include <json.hpp>

#include "arecon/harness.hpp"

namespace arecon {
namespace {

using nlohmann::json;

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

ReposeService::Response error_response(int status, const std::string& message) {
  return {status, json{{"error", message}}.dump()};
}

json mesh_json(const TriangleMesh& mesh, const std::vector<int>& parts) {
  json j;
  auto& vs = j["vertices"] = json::array();
  for (const auto& v : mesh.vertices) vs.push_back({v.x(), v.y(), v.z()});
  auto& fs = j["faces"] = json::array();
  for (const auto& f : mesh.faces) fs.push_back({f[0], f[1], f[2]});
  j["part_assignment"] = parts;
  return j;
}

template <typename F>
ReposeService::Response timed(F&& f) {
  const auto start = std::chrono::steady_clock::now();
  ReposeService::Response r = f();
  r.elapsed_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return r;
}

}  // namespace

ReposeService::ReposeService(Session session) : session_(std::move(session)) {
  session_.validate();
  model_ = session_.model();
}

ReposeService::Response ReposeService::session_info() const {
  return timed([&] {
    json j{{"id", session_.id},
           {"category", model_.category},
           {"num_joints", model_.num_joints()},
           {"num_parts", model_.num_parts()},
           {"mesh", {{"vertex_count", session_.mesh.vertices.size()}, {"face_count", session_.mesh.faces.size()}}},
           {"cloud_points", session_.cloud.size()},
           {"field",
            {{"resolution", session_.field.resolution},
             {"tau", session_.field.tau},
             {"beta", session_.field.beta},
             {"shrink", session_.field.shrink},
             {"min_neighbors", session_.field.min_neighbors}}},
           {"strategies", {"mesh-skin", "cloud-recon"}},
           {"provenance", session_.provenance}};
    return Response{200, j.dump()};
  });
}

ReposeService::Response ReposeService::joints() const {
  return timed([&] {
    json arr = json::array();
    for (std::size_t i = 0; i < session_.rig.num_joints(); ++i) {
      const auto& r = session_.rig.joints[i];
      arr.push_back({{"index", i},
                     {"name", r.name},
                     {"center", vec_json(r.center)},
                     {"axis", vec_json(r.axis)},
                     {"lower", r.lower},
                     {"upper", r.upper}});
    }
    return Response{200, json{{"joints", arr}}.dump()};
  });
}

ReposeService::Response ReposeService::mesh() const {
  return timed([&] { return Response{200, mesh_json(session_.mesh, session_.binding.parts).dump()}; });
}

ReposeService::Response ReposeService::health() const {
  return timed([] { return Response{200, R"({"status":"ok"})"}; });
}

ReposeService::Response ReposeService::repose(std::string_view body, bool strict) const {
  return timed([&]() -> Response {
    json req;
    try {
      req = json::parse(body);
    } catch (const json::exception&) {
      return error_response(400, "request body is not valid JSON");
    }
    if (!req.is_object() || !req.contains("angles") || !req["angles"].is_array()) {
      return error_response(400, "request needs an 'angles' array");
    }
    Pose requested;
    for (const auto& a : req["angles"]) {
      if (!a.is_number() || !std::isfinite(a.get<double>())) return error_response(400, "angles must be finite numbers");
      requested.angles.push_back(a.get<double>());
    }
    if (requested.angles.size() != session_.rig.num_joints()) {
      return error_response(400, "expected " + std::to_string(session_.rig.num_joints()) + " angles, got " +
                                     std::to_string(requested.angles.size()));
    }
    std::string strategy = "mesh-skin";
    if (req.contains("strategy")) {
      if (!req["strategy"].is_string()) return error_response(422, "strategy must be a string");
      strategy = req["strategy"].get<std::string>();
    }
    if (strategy != "mesh-skin" && strategy != "cloud-recon") {
      return error_response(422, "unknown strategy '" + strategy + "' (expected mesh-skin or cloud-recon)");
    }
    bool clamped = false;
    const Pose pose = clamp_to_rig(session_.rig, requested, &clamped);
    if (clamped && strict) return error_response(422, "angles outside joint limits (strict mode)");

    TriangleMesh mesh;
    std::vector<int> parts;
    if (strategy == "mesh-skin") {
      mesh = repose_mesh(session_.mesh, session_.binding, session_.rig, pose);
      parts = session_.binding.parts;
    } else {
      recon_slots_.acquire();
      try {
        const FeaturedPointCloud posed = repose_cloud(session_.cloud, session_.rig, pose);
        mesh = mesh_from_points(posed.points, session_.field);
        parts = bind_mesh(mesh, posed).parts;
      } catch (...) {
        recon_slots_.release();
        throw;
      }
      recon_slots_.release();
    }
    json out{{"strategy", strategy},
             {"requested", requested.angles},
             {"angles", pose.angles},
             {"clamped", clamped},
             {"vertex_count", mesh.vertices.size()},
             {"face_count", mesh.faces.size()},
             {"mesh", mesh_json(mesh, parts)}};
    return Response{200, out.dump()};
  });
}

void install_routes(httplib::Server& server, const ReposeService& service) {
  auto send = [](httplib::Response& res, const ReposeService::Response& r) {
    char ms[32];
    std::snprintf(ms, sizeof ms, "%.3f", r.elapsed_ms);
    res.status = r.status;
    // Timing travels in a header so identical requests get identical bodies.
    res.set_header("X-Elapsed-Ms", ms);
    res.set_content(r.body, "application/json");
  };
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                              {"Access-Control-Allow-Headers", "Content-Type"},
                              {"Access-Control-Expose-Headers", "X-Elapsed-Ms"}});
  server.Get("/healthz", [&, send](const httplib::Request&, httplib::Response& res) { send(res, service.health()); });
  server.Get("/session", [&, send](const httplib::Request&, httplib::Response& res) { send(res, service.session_info()); });
  server.Get("/joints", [&, send](const httplib::Request&, httplib::Response& res) { send(res, service.joints()); });
  server.Get("/mesh", [&, send](const httplib::Request&, httplib::Response& res) { send(res, service.mesh()); });
  server.Post("/repose", [&, send](const httplib::Request& req, httplib::Response& res) {
    const bool strict = req.has_param("strict") && req.get_param_value("strict") == "1";
    try {
      send(res, service.repose(req.body, strict));
    } catch (const std::exception& e) {
      send(res, error_response(500, e.what()));
    }
  });
  server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
}

void serve(const std::filesystem::path& session_dir, const std::string& host, int port,
           const std::function<void(int)>& on_ready) {
  const ReposeService service(load_session(session_dir));
  httplib::Server server;
  install_routes(server, service);
  const int bound = port == 0 ? server.bind_to_any_port(host) : (server.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw Error("cannot bind " + host + ":" + std::to_string(port));
  if (on_ready) on_ready(bound);
  server.listen_after_bind();
}

}  // namespace arecon
