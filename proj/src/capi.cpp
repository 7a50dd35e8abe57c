#include "laneplan.h"

#include <cstdio>
#include <cstring>
#include <string>

#include "laneplan/config.hpp"

namespace {

thread_local std::string g_last_error;

void set_error(const std::string& msg) { g_last_error = msg; }

int catch_status(const std::exception& e) {
  set_error(e.what());
  if (dynamic_cast<const laneplan::ConfigError*>(&e)) return LP_ERR_CONFIG;
  return LP_ERR_RUNTIME;
}

std::string manifest_text(const laneplan::RunConfig& cfg) {
  return std::string("# laneplan ") + lp_version() + "\n" + cfg.echo();
}

std::string fmt6(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string trace_csv(const std::vector<laneplan::TraceRow>& rows) {
  std::string out =
      "step,entity,id,x,y,vx,vy,action_accel,action_lat,reward,"
      "hard_brake,too_slow\n";
  for (const laneplan::TraceRow& r : rows) {
    out += std::to_string(r.step);
    out += r.is_ego ? ",ego,0" : ",car," + std::to_string(r.id);
    out += ',' + fmt6(r.phys.x) + ',' + fmt6(r.phys.y) + ',' +
           fmt6(r.phys.vx) + ',' + fmt6(r.phys.vy);
    if (r.is_ego && r.step > 0) {
      out += ',' + fmt6(r.action_accel) + ',' + std::to_string(r.action_lat) +
             ',' + fmt6(r.reward);
    } else {
      out += ",,,";
    }
    out += r.hard_brake ? ",1" : ",0";
    out += r.too_slow ? ",1\n" : ",0\n";
  }
  return out;
}

}  // namespace

extern "C" {

struct lp_config {
  laneplan::RunConfig cfg;
};

const char* lp_version(void) { return "0.1.0"; }

const char* lp_last_error(void) { return g_last_error.c_str(); }

lp_config* lp_config_create(void) { return new lp_config(); }

void lp_config_destroy(lp_config* cfg) { delete cfg; }

int lp_config_load_file(lp_config* cfg, const char* path) {
  if (!cfg || !path) {
    set_error("null argument");
    return LP_ERR_CONFIG;
  }
  try {
    laneplan::RunConfig loaded = laneplan::parse_config_file(path);
    cfg->cfg = loaded;
    return LP_OK;
  } catch (const std::exception& e) {
    return catch_status(e);
  }
}

int lp_config_set(lp_config* cfg, const char* key, const char* value) {
  if (!cfg || !key || !value) {
    set_error("null argument");
    return LP_ERR_CONFIG;
  }
  try {
    cfg->cfg.set(key, value);
    return LP_OK;
  } catch (const std::exception& e) {
    return catch_status(e);
  }
}

size_t lp_config_echo(const lp_config* cfg, char* buf, size_t cap) {
  if (!cfg) return 0;
  const std::string echo = cfg->cfg.echo();
  if (buf && cap > 0) {
    const size_t n = echo.size() < cap - 1 ? echo.size() : cap - 1;
    std::memcpy(buf, echo.data(), n);
    buf[n] = '\0';
  }
  return echo.size();
}

int lp_run_episode(lp_config* cfg, const char* out_dir, char* summary,
                   size_t summary_cap) {
  if (!cfg || !out_dir) {
    set_error("null argument");
    return LP_ERR_CONFIG;
  }
  try {
    cfg->cfg.validate();
    const laneplan::EpisodeSetup setup = cfg->cfg.episode_setup();
    std::vector<laneplan::TraceRow> rows;
    const laneplan::EpisodeResult r =
        laneplan::run_episode_traced(setup, cfg->cfg.seed, &rows);

    const std::string dir(out_dir);
    laneplan::write_text_file(dir + "/manifest.txt", manifest_text(cfg->cfg));
    laneplan::write_text_file(
        dir + "/episode_" + laneplan::policy_name(setup.kind) + "_seed" +
            std::to_string(cfg->cfg.seed) + ".csv",
        trace_csv(rows));

    char line[256];
    std::snprintf(line, sizeof line,
                  "planner=%s seed=%llu steps=%d success=%d unsafe=%d "
                  "hard_brakes=%d distance_m=%.3f",
                  laneplan::policy_name(setup.kind),
                  static_cast<unsigned long long>(r.seed), r.steps,
                  r.success ? 1 : 0, r.unsafe ? 1 : 0, r.hard_brake_count,
                  r.distance_m);
    if (summary && summary_cap > 0) {
      std::snprintf(summary, summary_cap, "%s", line);
    }
    return LP_OK;
  } catch (const std::exception& e) {
    return catch_status(e);
  }
}

int lp_run_sweep(lp_config* cfg, const char* sweep_kind, const char* out_dir) {
  if (!cfg || !sweep_kind || !out_dir) {
    set_error("null argument");
    return LP_ERR_CONFIG;
  }
  try {
    cfg->cfg.validate();
    const laneplan::StudyParams sp = cfg->cfg.study();
    const std::string kind(sweep_kind);
    laneplan::SweepResult result;
    if (kind == "pareto") {
      result = laneplan::pareto_sweep(sp);
    } else if (kind == "correlation") {
      result = laneplan::correlation_sweep(sp);
    } else if (kind == "robustness-correlation") {
      result = laneplan::robustness_correlation(sp);
    } else if (kind == "robustness-domain") {
      result = laneplan::robustness_domain(sp);
    } else {
      set_error("unknown sweep kind '" + kind + "'");
      return LP_ERR_CONFIG;
    }
    std::string stem = kind;
    for (char& c : stem) {
      if (c == '-') c = '_';
    }
    const std::string dir(out_dir);
    laneplan::write_text_file(dir + "/manifest.txt", manifest_text(cfg->cfg));
    laneplan::write_text_file(dir + "/" + stem + ".csv",
                              laneplan::sweep_csv(result));
    laneplan::write_plot_series(result, dir, stem);
    return LP_OK;
  } catch (const std::exception& e) {
    return catch_status(e);
  }
}

int lp_validate(lp_config* cfg) {
  if (!cfg) {
    set_error("null argument");
    return LP_ERR_CONFIG;
  }
  try {
    cfg->cfg.validate();
    std::string report = laneplan::equation_suite();
    if (report.empty()) {
      report = laneplan::crash_fuzz(cfg->cfg.sim, cfg->cfg.episodes,
                                    cfg->cfg.seed);
    }
    if (!report.empty()) {
      set_error(report);
      return LP_ERR_INVARIANT;
    }
    return LP_OK;
  } catch (const std::exception& e) {
    return catch_status(e);
  }
}

}  // extern "C"
