#include <optional>
#include <string>
#include <utility>

#include <CLI11.hpp>

#include "graph_nls/workflows.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Normalized NLS solutions on metric graphs"};
  app.require_subcommand(1);
  std::string config;
  std::string out;
  const std::pair<const char*, const char*> commands[] = {
      {"solve", "compute and certify one solution"},
      {"continue", "warm-started run along the config schedule"},
      {"verify", "recompute the certificate of a stored solution"},
      {"convergence", "observed order of lambda over mesh.h_list"}};
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("config", config, "run configuration (JSON)")->required();
    sub->add_option("--out", out, "output directory, overrides output_dir");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : graph_nls::kExitConfig;
  }
  const std::string command = app.get_subcommands().front()->get_name();
  return graph_nls::run_command(command, config, out.empty() ? std::nullopt : std::optional<std::string>(out));
}
