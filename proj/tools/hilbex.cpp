#include <cstdio>

#include "CLI11.hpp"
#include "hilbex/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"hilbex: multiscale boundary-layer expansion toolkit for a kinetic half-space"};
  app.set_version_flag("--version", hilbex::kToolVersion);

  std::string config_path;
  hilbex::RunOptions opt;

  CLI::App* run = app.add_subcommand("run", "execute a scenario from a JSON configuration");
  run->add_option("config", config_path, "path to the scenario configuration")->required();
  run->add_option("--out", opt.out_override, "override the output directory");
  run->add_option("--threads", opt.threads, "cap on internal worker threads");
  run->add_flag("--validate-only", opt.validate_only, "parse and validate, then exit");
  run->add_flag("-v", opt.verbosity, "verbose progress output");
  app.require_subcommand(1);

  CLI11_PARSE(app, argc, argv);

  hilbex::Scenario sc;
  try {
    sc = hilbex::load_scenario_file(config_path);
  } catch (const hilbex::ConfigError& ex) {
    std::fprintf(stderr, "%s\n", ex.what());
    return 2;
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "config error: %s\n", ex.what());
    return 2;
  }
  if (opt.verbosity > 0)
    std::fprintf(stderr, "scenario %s (config %s)\n", sc.name.c_str(), sc.config_hash.c_str());

  try {
    const hilbex::RunRecord rec = hilbex::run_scenario(sc, opt);
    if (opt.verbosity > 0)
      for (const auto& s : rec.stages)
        std::fprintf(stderr, "stage %-12s %s %s\n", s.name.c_str(), s.status.c_str(),
                     s.detail.c_str());
    return rec.exit_code;
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "fatal: %s\n", ex.what());
    return 3;
  }
}
