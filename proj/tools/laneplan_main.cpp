#include <cstdio>
#include <cstdlib>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "laneplan.h"

namespace {

struct ConfigHandle {
  lp_config* cfg = lp_config_create();
  ~ConfigHandle() { lp_config_destroy(cfg); }
};

int fail(int status) {
  std::fprintf(stderr, "laneplan: %s\n", lp_last_error());
  switch (status) {
    case LP_ERR_CONFIG:
      return 2;
    default:
      return 3;
  }
}

int apply(lp_config* cfg, const std::string& config_path,
          const std::vector<std::string>& sets) {
  if (!config_path.empty()) {
    if (int st = lp_config_load_file(cfg, config_path.c_str())) return st;
  }
  for (const std::string& kv : sets) {
    const std::size_t eq = kv.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "laneplan: --set expects key=value, got '%s'\n",
                   kv.c_str());
      return LP_ERR_CONFIG;
    }
    if (int st = lp_config_set(cfg, kv.substr(0, eq).c_str(),
                               kv.substr(eq + 1).c_str())) {
      return st;
    }
  }
  return LP_OK;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lane-change planning experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> sets;
  std::string out_dir;
  std::string seed;
  app.add_option("--config", config_path, "flat key = value config file");
  app.add_option("--set", sets, "override one config key (key=value)")
      ->take_all();
  app.add_option("--out", out_dir, "output directory (default from config)");
  app.add_option("--seed", seed, "base random seed");

  std::string planner;
  std::string iterations;
  std::string episodes;
  std::string planner_list;
  CLI::App* episode = app.add_subcommand("episode", "run one traced episode");
  episode->add_option("--planner", planner, "planner for this episode");
  episode->add_option("--iterations", iterations, "search iterations per step");

  const char* sweep_names[] = {"pareto", "correlation",
                               "robustness-correlation", "robustness-domain"};
  const char* sweep_help[] = {
      "success/safety trade-off across reward ratios",
      "performance across driver-parameter correlation",
      "fixed-correlation planners on mismatched worlds",
      "nominal planners on expanded or shrunk parameter ranges"};
  std::vector<CLI::App*> sweeps;
  for (int i = 0; i < 4; ++i) {
    CLI::App* s = app.add_subcommand(sweep_names[i], sweep_help[i]);
    s->add_option("--episodes", episodes, "episodes per cell");
    s->add_option("--iterations", iterations, "search iterations per step");
    s->add_option("--planners", planner_list, "comma-separated planner list");
    sweeps.push_back(s);
  }
  CLI::App* validate =
      app.add_subcommand("validate", "equation checks and crash-freedom fuzz");
  validate->add_option("--episodes", episodes, "fuzz episodes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  ConfigHandle handle;
  lp_config* cfg = handle.cfg;
  if (int st = apply(cfg, config_path, sets)) return fail(st);

  // Convenience flags are sugar over config keys; --set always wins when the
  // same key appears, since these run afterwards only when the flag is given.
  if (!seed.empty()) {
    if (int st = lp_config_set(cfg, "run.seed", seed.c_str())) return fail(st);
  }
  if (!planner.empty()) {
    if (int st = lp_config_set(cfg, "run.planner", planner.c_str())) {
      return fail(st);
    }
  }
  if (!planner_list.empty()) {
    if (int st = lp_config_set(cfg, "sweep.planners", planner_list.c_str())) {
      return fail(st);
    }
  }
  if (!episodes.empty()) {
    if (int st = lp_config_set(cfg, "sweep.episodes", episodes.c_str())) {
      return fail(st);
    }
  }
  if (!iterations.empty()) {
    const char* key =
        episode->parsed() ? "planner.iterations" : "sweep.iterations";
    if (int st = lp_config_set(cfg, key, iterations.c_str())) return fail(st);
  }
  if (out_dir.empty()) {
    if (const char* env = std::getenv("LANEPLAN_OUT")) out_dir = env;
  }
  if (!out_dir.empty()) {
    if (int st = lp_config_set(cfg, "run.out", out_dir.c_str())) {
      return fail(st);
    }
  }

  std::vector<char> echo_buf(lp_config_echo(cfg, nullptr, 0) + 1);
  lp_config_echo(cfg, echo_buf.data(), echo_buf.size());
  const std::string effective_out(echo_buf.data());
  std::string dir = "out";
  {
    const std::string key = "run.out = ";
    const std::size_t at = effective_out.find(key);
    if (at != std::string::npos) {
      const std::size_t end = effective_out.find('\n', at);
      dir = effective_out.substr(at + key.size(), end - (at + key.size()));
    }
  }

  if (episode->parsed()) {
    char summary[256];
    if (int st = lp_run_episode(cfg, dir.c_str(), summary, sizeof summary)) {
      return fail(st);
    }
    std::printf("%s\n", summary);
    return 0;
  }
  for (int i = 0; i < 4; ++i) {
    if (sweeps[i]->parsed()) {
      if (int st = lp_run_sweep(cfg, sweep_names[i], dir.c_str())) {
        return fail(st);
      }
      std::printf("wrote %s results to %s\n", sweep_names[i], dir.c_str());
      return 0;
    }
  }
  if (validate->parsed()) {
    if (int st = lp_validate(cfg)) return fail(st);
    std::printf("all validation checks passed\n");
    return 0;
  }
  return 2;
}
