// Command-line front end: dataset generation, reconstruction, experiments and
// the repose service.

#include <cstdio>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "arecon/fileio.hpp"
#include "arecon/harness.hpp"
#include "arecon/service.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kValidationError = 2;
constexpr int kTrendFailure = 3;

json read_config(const std::string& path) {
  if (path.empty()) return json::object();
  try {
    return json::parse(arecon::read_file(path), nullptr, true, true);
  } catch (const json::exception& e) {
    throw arecon::Error("config " + path + ": " + e.what());
  }
}

void write_report(const arecon::EvalReport& report, const std::string& out, const std::string& extra) {
  std::cout << report.summary_text() << extra;
  if (out.empty()) return;
  fs::create_directories(out);
  arecon::write_file_atomic(fs::path(out) / "report.csv", report.to_csv());
  arecon::write_file_atomic(fs::path(out) / "summary.txt", report.summary_text() + extra);
}

arecon::ExperimentConfig experiment_config(const std::string& config_path, const std::string& noise,
                                           std::optional<int> trials, std::optional<int> views, bool sweep) {
  auto cfg = arecon::ExperimentConfig::from_json(read_config(config_path));
  if (!noise.empty()) {
    cfg.pipeline.noise = arecon::NoiseModel::preset(noise);
    cfg.pipeline.noise_name = noise;
  }
  if (trials) cfg.trials = *trials;
  if (views) {
    if (*views < 1) throw arecon::Error("--views must be >= 1");
    if (sweep) {
      std::vector<int> counts;
      for (int c : {1, 2, 4, 6})
        if (c < *views) counts.push_back(c);
      counts.push_back(*views);
      cfg.views = counts;
    } else {
      cfg.views = {*views};
    }
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Articulated multi-view reconstruction toolkit"};
  app.require_subcommand(1);

  std::string config, out, noise, session_dir, host = "127.0.0.1";
  std::uint64_t seed = 0;
  std::optional<int> trials, views;
  std::vector<std::string> bundles;
  bool assert_trend = false;
  int port = 8080;

  auto* gen = app.add_subcommand("gen-data", "render a synthetic multi-view dataset");
  gen->add_option("--config", config, "dataset config (JSON)")->required();
  gen->add_option("--out", out, "output directory")->required();
  gen->add_option("--seed", seed, "base seed");

  auto* rec = app.add_subcommand("reconstruct", "reconstruct a session from NMAP bundles");
  rec->add_option("bundles", bundles, "NMAP files from one dataset")->required();
  rec->add_option("--config", config, "pipeline config (JSON)");
  rec->add_option("--noise", noise, "noise preset")->check(CLI::IsMember({"clean", "mild", "heavy"}));
  rec->add_option("--views", views, "use only the first N bundles");
  rec->add_option("--out", out, "session directory")->required();
  rec->add_option("--seed", seed, "noise seed");

  auto* sweep = app.add_subcommand("view-sweep", "reconstruction accuracy against view count");
  sweep->add_option("--config", config, "experiment config (JSON)");
  sweep->add_option("--noise", noise, "noise preset")->check(CLI::IsMember({"clean", "mild", "heavy"}));
  sweep->add_option("--trials", trials, "trials per view count");
  sweep->add_option("--views", views, "largest view count");
  sweep->add_option("--out", out, "directory for report.csv and summary.txt");
  sweep->add_option("--seed", seed, "base seed");
  sweep->add_flag("--assert", assert_trend, "exit 3 unless the accuracy trend holds");

  auto* ablate = app.add_subcommand("ablate", "paired comparison of aggregation variants");
  ablate->add_option("--config", config, "experiment config (JSON)");
  ablate->add_option("--noise", noise, "noise preset")->check(CLI::IsMember({"clean", "mild", "heavy"}));
  ablate->add_option("--trials", trials, "paired trials");
  ablate->add_option("--views", views, "view count");
  ablate->add_option("--out", out, "directory for report.csv and summary.txt");
  ablate->add_option("--seed", seed, "base seed");

  auto* srv = app.add_subcommand("serve", "HTTP repose service over a session");
  srv->add_option("--session", session_dir, "session directory")->required();
  srv->add_option("--host", host, "bind address");
  srv->add_option("--port", port, "port (0 picks a free one)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kValidationError;
  }

  try {
    if (*gen) {
      const auto manifest = arecon::cmd_gen_data(read_config(config), fs::path(config).parent_path(), out, seed);
      std::printf("wrote %zu bundles for %zu models to %s (manifest digest %016llx)\n", manifest.bundle_count(),
                  manifest.models.size(), out.c_str(),
                  static_cast<unsigned long long>(arecon::fnv1a64(manifest.to_text())));
    } else if (*rec) {
      auto cfg = arecon::PipelineConfig::from_json(read_config(config));
      if (!noise.empty()) {
        cfg.noise = arecon::NoiseModel::preset(noise);
        cfg.noise_name = noise;
      }
      std::vector<fs::path> paths(bundles.begin(), bundles.end());
      if (views) {
        if (*views < 1 || static_cast<std::size_t>(*views) > paths.size()) {
          throw arecon::Error("--views must be between 1 and the number of bundles");
        }
        paths.resize(*views);
      }
      const auto s = arecon::cmd_reconstruct(paths, cfg, out, seed);
      std::printf("session %s: %zu cloud points, mesh %zu vertices / %zu faces -> %s\n", s.id.c_str(), s.cloud.size(),
                  s.mesh.vertices.size(), s.mesh.faces.size(), out.c_str());
    } else if (*sweep) {
      const auto cfg = experiment_config(config, noise, trials, views, true);
      const auto report = arecon::cmd_view_sweep(cfg, seed);
      const auto verdict = arecon::view_trend(report);
      write_report(report, out, "trend: " + verdict.text + "\n");
      if (assert_trend && !verdict.ok()) return kTrendFailure;
    } else if (*ablate) {
      const auto cfg = experiment_config(config, noise, trials, views, false);
      const auto report = arecon::cmd_ablate(cfg, seed);
      std::string extra;
      for (const auto& w : arecon::ablation_wins(report)) {
        extra += w.baseline + " beats " + w.variant + " at " + std::to_string(w.views) + " view(s): " +
                 std::to_string(w.baseline_wins) + "/" + std::to_string(w.trials) + "\n";
      }
      write_report(report, out, extra);
    } else if (*srv) {
      arecon::serve(session_dir, host, port, [&](int bound) {
        std::printf("serving %s on http://%s:%d\n", session_dir.c_str(), host.c_str(), bound);
        std::fflush(stdout);
      });
    }
  } catch (const arecon::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kValidationError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kValidationError;
  }
  return 0;
}
