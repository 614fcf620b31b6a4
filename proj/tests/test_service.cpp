#include <doctest.h>

#include <chrono>
#include <future>
#include <thread>

#include <json.hpp>

#include "arecon/harness.hpp"
#include "arecon/service.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

// After Eigen: <resolv.h> defines a `_res` macro that collides with Eigen's
// parameter names.
#include <httplib.h>

using namespace arecon;
using nlohmann::json;

namespace {

Session laptop_session() {
  const auto m = fixtures::golden("laptop");
  std::vector<MapBundle> views;
  const std::vector<std::pair<double, Vec3>> setup = {
      {0.3, Vec3(0.3, -1, 0.8)}, {1.1, Vec3(-0.4, 1, 0.6)}, {0.8, Vec3(1, 0.2, -0.5)}, {1.6, Vec3(-1, -0.3, -0.4)}};
  for (const auto& [theta, dir] : setup) {
    views.push_back(render_view(m, fixtures::pose_of({theta}), fixtures::camera_from(dir, 96)));
    views.back().view_id = static_cast<int>(views.size() - 1);
  }
  const PipelineConfig cfg;
  const auto r = reconstruct(m, views, cfg);
  Session s;
  s.id = "test-laptop";
  s.model_spec = serialize_model(m);
  s.cloud = r.cloud;
  s.estimates = r.estimates;
  s.rig = r.rig;
  s.mesh = r.mesh;
  s.binding = r.binding;
  s.field = cfg.field;
  return s;
}

const ReposeService& service() {
  static const ReposeService svc(laptop_session());
  return svc;
}

TriangleMesh mesh_of(const json& j) {
  TriangleMesh m;
  for (const auto& v : j["vertices"]) m.vertices.emplace_back(v[0].get<double>(), v[1].get<double>(), v[2].get<double>());
  for (const auto& f : j["faces"]) m.faces.push_back({f[0].get<std::uint32_t>(), f[1].get<std::uint32_t>(), f[2].get<std::uint32_t>()});
  return m;
}

double dihedral_of(const json& mesh_json, const Rig& rig) {
  const TriangleMesh m = mesh_of(mesh_json);
  const auto parts = mesh_json["part_assignment"].get<std::vector<int>>();
  std::vector<std::size_t> base, lid;
  for (std::size_t f = 0; f < m.faces.size(); ++f) {
    int lid_votes = 0;
    for (auto v : m.faces[f]) lid_votes += rig.part_joints[parts[v]] == 0;
    if (lid_votes == 3) lid.push_back(f);
    if (lid_votes == 0) base.push_back(f);
  }
  return oracle::slab_dihedral(m, base, lid);
}

// Runs the real HTTP routes on a free port for the lifetime of the object.
struct LiveServer {
  httplib::Server server;
  std::thread thread;
  int port = 0;

  explicit LiveServer(const ReposeService& svc) {
    install_routes(server, svc);
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~LiveServer() {
    server.stop();
    thread.join();
  }
};

}  // namespace

TEST_SUITE("service") {

TEST_CASE("joints echo the rig") {
  const auto r = service().joints();
  CHECK(r.status == 200);
  const auto j = json::parse(r.body);
  REQUIRE(j["joints"].size() == 1);
  const auto& joint = j["joints"][0];
  CHECK(joint["name"] == "hinge");
  CHECK(joint["lower"] == 0.0);
  CHECK(joint["upper"] == 2.0);
  CHECK(std::abs(joint["axis"][0].get<double>() + 1.0) < 1e-6);
  CHECK(json::parse(service().health().body)["status"] == "ok");
  CHECK(json::parse(service().session_info().body)["num_joints"] == 1);
}

TEST_CASE("zero pose returns the canonical mesh") {
  const auto r = service().repose(R"({"angles": [0]})", false);
  REQUIRE(r.status == 200);
  const auto j = json::parse(r.body);
  CHECK(j["clamped"] == false);
  CHECK(j["strategy"] == "mesh-skin");
  const auto m = mesh_of(j["mesh"]);
  CHECK(m.vertices.size() == service().session().mesh.vertices.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < m.vertices.size(); ++i)
    worst = std::max(worst, (m.vertices[i] - service().session().mesh.vertices[i]).norm());
  CHECK(worst < 1e-12);
  CHECK(json::parse(service().mesh().body)["faces"].size() == m.faces.size());
}

TEST_CASE("mesh-skin keeps connectivity and is valid") {
  const auto r = service().repose(R"({"angles": [1.0], "strategy": "mesh-skin"})", false);
  REQUIRE(r.status == 200);
  const auto j = json::parse(r.body);
  const auto m = mesh_of(j["mesh"]);
  CHECK(j["vertex_count"] == service().session().mesh.vertices.size());
  CHECK(m.faces == service().session().mesh.faces);
  CHECK_NOTHROW(m.validate());
  CHECK_NOTHROW(export_mesh(m, MeshFormat::kObj));
  CHECK(r.elapsed_ms < 2000.0);
}

TEST_CASE("out-of-limit angles are clamped, or refused in strict mode") {
  const auto r = service().repose(R"({"angles": [3.5]})", false);
  REQUIRE(r.status == 200);
  const auto j = json::parse(r.body);
  CHECK(j["clamped"] == true);
  CHECK(j["angles"][0] == 2.0);
  CHECK(j["requested"][0] == 3.5);
  const auto same = service().repose(R"({"angles": [2.0]})", false);
  CHECK(json::parse(same.body)["mesh"] == j["mesh"]);
  CHECK(service().repose(R"({"angles": [-0.5]})", true).status == 422);
  CHECK(service().repose(R"({"angles": [0.5]})", true).status == 200);
}

TEST_CASE("request errors") {
  CHECK(service().repose("{angles", false).status == 400);
  CHECK(service().repose(R"({"angles": [0.1, 0.2]})", false).status == 400);
  CHECK(service().repose(R"({"angles": []})", false).status == 400);
  CHECK(service().repose(R"({"pose": [0.1]})", false).status == 400);
  CHECK(service().repose(R"({"angles": ["a"]})", false).status == 400);
  CHECK(service().repose(R"({"angles": [0.1], "strategy": "morph"})", false).status == 422);
  const auto e = json::parse(service().repose(R"({"angles": [0.1], "strategy": "morph"})", false).body);
  CHECK(e["error"].get<std::string>().find("morph") != std::string::npos);
}

TEST_CASE("identical requests give identical bytes") {
  const std::string body = R"({"angles": [0.77], "strategy": "mesh-skin"})";
  CHECK(service().repose(body, false).body == service().repose(body, false).body);
  const std::string recon = R"({"angles": [0.4], "strategy": "cloud-recon"})";
  CHECK(service().repose(recon, false).body == service().repose(recon, false).body);
}

TEST_CASE("cloud-recon gives a watertight mesh at the requested opening") {
  const auto r = service().repose(R"({"angles": [1.0], "strategy": "cloud-recon"})", false);
  REQUIRE(r.status == 200);
  const auto j = json::parse(r.body);
  const auto m = mesh_of(j["mesh"]);
  CHECK(analyze_topology(m).closed_manifold());
  const double angle = dihedral_of(j["mesh"], service().session().rig);
  MESSAGE("cloud-recon dihedral " << angle);
  CHECK(std::abs(angle - 1.0) < 0.05);
}

TEST_CASE("concurrent requests match serial ones") {
  const std::vector<std::string> bodies = {R"({"angles": [0.2], "strategy": "cloud-recon"})",
                                           R"({"angles": [1.4]})", R"({"angles": [0.9], "strategy": "cloud-recon"})",
                                           R"({"angles": [1.9], "strategy": "cloud-recon"})"};
  std::vector<std::string> serial;
  for (const auto& b : bodies) serial.push_back(service().repose(b, false).body);
  std::vector<std::future<std::string>> futures;
  for (const auto& b : bodies)
    futures.push_back(std::async(std::launch::async, [&b] { return service().repose(b, false).body; }));
  for (std::size_t i = 0; i < bodies.size(); ++i) CHECK(futures[i].get() == serial[i]);
}

TEST_CASE("HTTP routes, CORS and status codes") {
  LiveServer live(service());
  REQUIRE(live.port > 0);
  httplib::Client client("127.0.0.1", live.port);

  auto joints = client.Get("/joints");
  REQUIRE(joints);
  CHECK(joints->status == 200);
  CHECK(joints->get_header_value("Access-Control-Allow-Origin") == "*");
  CHECK(joints->get_header_value("Content-Type").find("application/json") != std::string::npos);

  const std::string body = R"({"angles": [1.2]})";
  const auto t0 = std::chrono::steady_clock::now();
  auto a = client.Post("/repose", body, "application/json");
  const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  auto b = client.Post("/repose", body, "application/json");
  REQUIRE(a);
  REQUIRE(b);
  CHECK(a->status == 200);
  CHECK(ms < 2000.0);
  CHECK(a->body == b->body);
  CHECK_FALSE(a->get_header_value("X-Elapsed-Ms").empty());
  CHECK_NOTHROW(mesh_of(json::parse(a->body)["mesh"]).validate());

  auto clamped = client.Post("/repose", R"({"angles": [9]})", "application/json");
  REQUIRE(clamped);
  CHECK(json::parse(clamped->body)["clamped"] == true);
  auto strict = client.Post("/repose?strict=1", R"({"angles": [9]})", "application/json");
  REQUIRE(strict);
  CHECK(strict->status == 422);
  auto bad = client.Post("/repose", "nope", "application/json");
  REQUIRE(bad);
  CHECK(bad->status == 400);

  auto pre = client.Options("/repose");
  REQUIRE(pre);
  CHECK(pre->status == 204);
  CHECK(pre->get_header_value("Access-Control-Allow-Origin") == "*");
  CHECK(client.Get("/healthz")->status == 200);
  CHECK(client.Get("/nothing")->status == 404);
}

TEST_CASE("serve refuses a missing session") {
  CHECK_THROWS_AS(serve(fixtures::scratch_dir("service_empty"), "127.0.0.1", 0), Error);
}

}  // TEST_SUITE
