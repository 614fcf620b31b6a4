#pragma once

#include <filesystem>
#include <functional>
#include <semaphore>
#include <string>
#include <string_view>

#include "arecon/session.hpp"

namespace httplib {
class Server;
}

namespace arecon {

// Request handling over one read-only session, independent of the HTTP
// transport so it can be exercised directly.
class ReposeService {
 public:
  struct Response {
    int status = 200;
    std::string body;
    double elapsed_ms = 0.0;
  };

  explicit ReposeService(Session session);

  Response session_info() const;
  Response joints() const;
  Response mesh() const;
  Response health() const;
  /// Body: {"angles": [...], "strategy": "mesh-skin" | "cloud-recon"}.
  Response repose(std::string_view body, bool strict) const;

  const Session& session() const { return session_; }

 private:
  Session session_;
  ArticulatedModel model_;
  // cloud-recon rebuilds a field and a mesh per request; cap how many run at once.
  mutable std::counting_semaphore<2> recon_slots_{2};
};

/// Registers the HTTP routes (with permissive CORS) on `server`.
void install_routes(httplib::Server& server, const ReposeService& service);

// Loads the session and serves until the process is stopped. `on_ready`
// receives the bound port (useful with port 0).
void serve(const std::filesystem::path& session_dir, const std::string& host, int port,
           const std::function<void(int)>& on_ready = {});

}  // namespace arecon
