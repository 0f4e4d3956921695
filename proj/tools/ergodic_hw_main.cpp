#include <CLI11.hpp>
#include <iostream>

#include "ergodic_hw/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Ergodic control of multi-class many-server queues in the Halfin-Whitt regime"};
  std::string kind, config_path, out_dir = "out";
  std::optional<std::uint64_t> seed;
  app.add_option("kind", kind, "experiment kind")
      ->required()
      ->check(CLI::IsMember(ergodic_hw::experiment_kinds()));
  app.add_option("--config", config_path, "JSON config file")->required();
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--seed", seed, "override sim.seed and sde.seed");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : ergodic_hw::kExitError;
  }

  try {
    auto cfg = ergodic_hw::load_config(config_path);
    if (seed) cfg.set_seed(*seed);
    const int code = ergodic_hw::run_experiment(kind, cfg, out_dir);
    if (code == ergodic_hw::kExitFlagged)
      std::cerr << kind << ": property check flagged, see " << out_dir << '\n';
    return code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return ergodic_hw::kExitError;
  }
}
