#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "spikesim/workloads.hpp"

namespace {

int run(const std::string& workload, const std::string& config_path,
        const std::string& out_dir, long long seed, bool seed_set,
        const std::vector<std::string>& overrides) {
  nlohmann::json user;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw std::runtime_error("cannot open config " + config_path);
    try {
      in >> user;
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error("config " + config_path +
                               " is not valid JSON: " + e.what());
    }
  }

  std::vector<std::string> all = overrides;
  if (seed_set) all.push_back("seed=" + std::to_string(seed));

  const nlohmann::json resolved =
      spikesim::resolve_config(workload, user, all);
  spikesim::run_workload(resolved, out_dir);
  std::cout << "wrote " << out_dir << "/report.json\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"event-driven spiking-neuron benchmark harness"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "bench-out";
  long long seed = 0;
  std::vector<std::string> overrides;

  std::string workload;
  for (const char* name :
       {"stft-chirp", "sdnn-video", "sigma-delta-sweep"}) {
    auto* sub = app.add_subcommand(name);
    sub->fallthrough();  // --config etc. may follow the subcommand
    sub->callback([&workload, name] { workload = name; });
  }
  app.add_option("--config", config_path, "JSON config file");
  app.add_option("--out", out_dir, "output directory");
  auto* seed_opt = app.add_option("--seed", seed, "seed override");
  app.add_option("--override", overrides,
                 "dotted-path config override, key=value");

  CLI11_PARSE(app, argc, argv);

  try {
    return run(workload, config_path, out_dir, seed, seed_opt->count() > 0,
               overrides);
  } catch (const std::exception& e) {
    const nlohmann::json err{
        {"error", {{"type", "invalid_input"}, {"message", e.what()}}}};
    std::cerr << err.dump() << std::endl;
    return 1;
  }
}
