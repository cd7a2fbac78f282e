#include <CLI11.hpp>

#include <iostream>

#include "coclab/config.hpp"
#include "coclab/experiment.hpp"
#include "coclab/parallel.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Linear cocycle experiments over hyperbolic toral automorphisms"};
  std::string command, config_path, out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::string commands;
  for (const auto& c : coclab::command_names()) commands += (commands.empty() ? "" : ", ") + c;
  app.add_option("command", command, "one of: " + commands)->required();
  app.add_option("--config", config_path, "INI-style experiment config")->required();
  app.add_option("--out", out_dir, "directory for CSV and JSON output (JSON goes to stdout if omitted)");
  app.add_option("--seed", seed, "overrides run.seed");
  app.add_option("--threads", threads, "overrides run.threads (0 = hardware concurrency)");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    auto cfg = coclab::load_config(config_path);
    coclab::apply_env_overrides(cfg);
    if (seed) cfg.seed = *seed;
    if (threads) cfg.threads = *threads;
    coclab::set_thread_count(cfg.threads);
    const auto rec = coclab::run_command(command, cfg, out_dir);
    if (out_dir.empty())
      std::cout << rec.json.dump(2) << "\n";
    else
      std::cout << command << ": " << (rec.pass ? "pass" : "fail") << " (" << out_dir << "/" << command << ".json)\n";
    if (!rec.pass) std::cerr << rec.json["reason"]["code"].get<std::string>() << ": " << rec.json["reason"]["message"].get<std::string>() << "\n";
    return rec.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return coclab::exit_code_for(e);
  }
}
