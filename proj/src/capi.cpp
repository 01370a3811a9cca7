#include "cosifl.h"

#include <cstdlib>
#include <cstring>
#include <string>

#include "cosifl/engine.hpp"
#include "cosifl/errors.hpp"
#include "cosifl/game.hpp"
#include "cosifl/textio.hpp"
#include "json.hpp"

struct cosifl_scenario {
  cosifl::ScenarioConfig cfg;
};

struct cosifl_run {
  cosifl::RunSummary summary;
};

namespace {

thread_local std::string g_last_error;

template <typename Fn>
int guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return COSIFL_OK;
  } catch (const cosifl::ParseError& e) {
    g_last_error = e.what();
    return COSIFL_ERR_PARSE;
  } catch (const cosifl::ConfigError& e) {
    g_last_error = e.what();
    return COSIFL_ERR_VALIDATION;
  } catch (const cosifl::InfeasibleError& e) {
    g_last_error = e.what();
    return COSIFL_ERR_INFEASIBLE;
  } catch (const cosifl::IoError& e) {
    g_last_error = e.what();
    return COSIFL_ERR_IO;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return COSIFL_ERR_INTERNAL;
  }
}

int invalid(const char* msg) {
  g_last_error = msg;
  return COSIFL_ERR_INVALID_ARG;
}

char* copy_out(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (p) std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

// summary.json content as a string (same document emit_outputs writes).
std::string summary_text(const cosifl::RunSummary& s) {
  using nlohmann::ordered_json;
  ordered_json precision = ordered_json::object();
  for (const auto& [id, p] : s.alarm_precision)
    precision[std::to_string(id)] = p;
  ordered_json j;
  j["config"] = ordered_json::parse(cosifl::dump_scenario(s.cfg));
  j["result"] = ordered_json{
      {"rounds_executed", s.rounds.size()},
      {"final_ma", s.final_ma},
      {"final_mr", s.final_mr},
      {"final_confidence", s.final_confidence},
      {"sim_time_total", s.sim_time_total},
      {"final_banned", s.final_banned},
      {"alarm_precision", precision},
      {"cost", ordered_json{{"loss", s.realized_cost.loss},
                            {"reward", s.realized_cost.reward},
                            {"risk", s.realized_cost.risk},
                            {"total", s.realized_cost.total}}}};
  j["audit"] = ordered_json{{"auc_threshold", s.auc_threshold},
                            {"auc_logistic", s.auc_logistic}};
  return j.dump(2) + "\n";
}

}  // namespace

extern "C" {

const char* cosifl_version(void) { return "0.1.0"; }

const char* cosifl_last_error(void) { return g_last_error.c_str(); }

int cosifl_scenario_load(const char* path, cosifl_scenario** out) {
  if (!path || !out) return invalid("scenario_load: null argument");
  return guarded([&] {
    auto* s = new cosifl_scenario{cosifl::load_scenario(path)};
    *out = s;
  });
}

int cosifl_scenario_parse(const char* json_text, cosifl_scenario** out) {
  if (!json_text || !out) return invalid("scenario_parse: null argument");
  return guarded([&] {
    auto* s = new cosifl_scenario{cosifl::parse_scenario(json_text)};
    *out = s;
  });
}

void cosifl_scenario_free(cosifl_scenario* s) { delete s; }

int cosifl_scenario_set_seed(cosifl_scenario* s, uint64_t seed) {
  if (!s) return invalid("set_seed: null scenario");
  s->cfg.seed = seed;
  g_last_error.clear();
  return COSIFL_OK;
}

int cosifl_scenario_set_rule(cosifl_scenario* s, const char* rule) {
  if (!s || !rule) return invalid("set_rule: null argument");
  const std::string r = rule;
  if (r == "cosifl") {
    s->cfg.rule = cosifl::Rule::kCosifl;
  } else if (r == "nd") {
    s->cfg.rule = cosifl::Rule::kNd;
  } else if (r == "ndt") {
    s->cfg.rule = cosifl::Rule::kNdt;
  } else {
    return invalid("set_rule: expected cosifl, nd or ndt");
  }
  g_last_error.clear();
  return COSIFL_OK;
}

int cosifl_scenario_set_defense_start(cosifl_scenario* s, int round) {
  if (!s) return invalid("set_defense_start: null scenario");
  if (round < 1) return invalid("set_defense_start: round must be >= 1");
  s->cfg.defense.enabled = true;
  s->cfg.defense.start_round = round;
  g_last_error.clear();
  return COSIFL_OK;
}

int cosifl_scenario_set_noise_multiplier(cosifl_scenario* s, double value) {
  if (!s) return invalid("set_noise_multiplier: null scenario");
  if (value < 0) return invalid("set_noise_multiplier: must be >= 0");
  s->cfg.dp.noise_multiplier = value;
  g_last_error.clear();
  return COSIFL_OK;
}

int cosifl_run_scenario(const cosifl_scenario* s, cosifl_run** out) {
  if (!s || !out) return invalid("run_scenario: null argument");
  return guarded([&] {
    auto* r = new cosifl_run{cosifl::run_scenario(s->cfg)};
    *out = r;
  });
}

int cosifl_run_scenario_adaptive(const cosifl_scenario* s, cosifl_run** out) {
  if (!s || !out) return invalid("run_scenario_adaptive: null argument");
  return guarded([&] {
    auto* r = new cosifl_run{cosifl::run_adaptive_gamma(s->cfg)};
    *out = r;
  });
}

void cosifl_run_free(cosifl_run* r) { delete r; }

int cosifl_run_write_outputs(const cosifl_run* r, const char* out_dir,
                             int dump_shards) {
  if (!r || !out_dir) return invalid("write_outputs: null argument");
  return guarded(
      [&] { cosifl::emit_outputs(r->summary, out_dir, dump_shards != 0); });
}

int cosifl_run_final_accuracy(const cosifl_run* r, double* out) {
  if (!r || !out) return invalid("final_accuracy: null argument");
  *out = r->summary.final_ma;
  g_last_error.clear();
  return COSIFL_OK;
}

int cosifl_run_total_cost(const cosifl_run* r, double* out) {
  if (!r || !out) return invalid("total_cost: null argument");
  *out = r->summary.realized_cost.total;
  g_last_error.clear();
  return COSIFL_OK;
}

int cosifl_run_summary_json(const cosifl_run* r, char** out) {
  if (!r || !out) return invalid("summary_json: null argument");
  return guarded([&] {
    char* p = copy_out(summary_text(r->summary));
    if (!p) throw std::bad_alloc();
    *out = p;
  });
}

int cosifl_plan_json(const cosifl_scenario* s, char** out) {
  if (!s || !out) return invalid("plan_json: null argument");
  return guarded([&] {
    using nlohmann::ordered_json;
    const cosifl::PlanBundle b = cosifl::plan_scenario(s->cfg);
    ordered_json cands = ordered_json::array();
    for (const cosifl::ClientAttributes& a : b.candidates)
      cands.push_back(ordered_json{{"id", a.id},
                                   {"alpha", a.alpha},
                                   {"nu", a.nu},
                                   {"epsilon", a.epsilon},
                                   {"gamma", a.gamma},
                                   {"cost", a.cost},
                                   {"latency", a.latency},
                                   {"lambda", a.lambda},
                                   {"lambda_estimated", a.lambda_estimated}});
    auto rec = [](const cosifl::PlanRecord& r) {
      return ordered_json{{"pool", r.pool},
                          {"active", r.active},
                          {"conversion", r.conversion},
                          {"t_max", r.t_max},
                          {"feasible", r.feasible},
                          {"rounds", r.rounds},
                          {"reward", r.reward},
                          {"cost", r.feasible ? r.cost : -1.0},
                          {"convex", r.convex}};
    };
    ordered_json recs = ordered_json::array();
    for (const cosifl::PlanRecord& r : b.plan.records) recs.push_back(rec(r));
    ordered_json j{{"theta", b.theta},
                   {"candidates", cands},
                   {"rejected", b.rejected},
                   {"records", recs},
                   {"best", rec(b.plan.best)}};
    char* p = copy_out(j.dump(2) + "\n");
    if (!p) throw std::bad_alloc();
    *out = p;
  });
}

int cosifl_equilibrium_csv(const cosifl_scenario* s, double reward,
                           char** out) {
  if (!s || !out) return invalid("equilibrium_csv: null argument");
  return guarded([&] {
    const cosifl::PlanBundle b = cosifl::plan_scenario(s->cfg);
    double r = reward;
    if (r <= 0) r = b.plan.best.reward;
    std::vector<cosifl::Player> players;
    for (const cosifl::ClientAttributes& a : b.candidates)
      players.push_back(cosifl::to_player(a));
    const cosifl::EquilibriumResult eq = cosifl::nash_equilibrium(players, r);
    const std::vector<double> shares =
        cosifl::tullock_shares(players, eq.batch);
    std::string csv = "# reward=" + cosifl::fmt_double(r) +
                      " total_batch=" + cosifl::fmt_double(eq.total_batch) +
                      " conversion=" + cosifl::fmt_double(eq.conversion) +
                      "\n";
    csv += "id,e,unit_cost,active,batch,reward_share,utility\n";
    double contrib_sum = 0;
    for (std::size_t k = 0; k < players.size(); ++k)
      contrib_sum += players[k].e * eq.batch[k];
    for (std::size_t i = 0; i < players.size(); ++i) {
      const double util =
          cosifl::utility(players[i], eq.batch[i], contrib_sum, r);
      csv += std::to_string(players[i].id) + "," +
             cosifl::fmt_double(players[i].e) + "," +
             cosifl::fmt_double(players[i].s) + "," +
             (eq.active[i] ? "1" : "0") + "," +
             cosifl::fmt_double(eq.batch[i]) + "," +
             cosifl::fmt_double(shares[i] * r) + "," +
             cosifl::fmt_double(util) + "\n";
    }
    char* p = copy_out(csv);
    if (!p) throw std::bad_alloc();
    *out = p;
  });
}

void cosifl_string_free(char* p) { std::free(p); }

int cosifl_audit_run_dir(const char* run_dir, const char* audit_dir) {
  if (!run_dir || !audit_dir) return invalid("audit: null argument");
  return guarded([&] { cosifl::audit_run_dir(run_dir, audit_dir); });
}

int cosifl_sweep_noise(const cosifl_scenario* s, const double* multipliers,
                       size_t n_multipliers, int seeds_per_value,
                       const char* out_csv_path) {
  if (!s || !multipliers || !out_csv_path)
    return invalid("sweep: null argument");
  if (n_multipliers == 0 || seeds_per_value < 1)
    return invalid("sweep: need at least one multiplier and one seed");
  return guarded([&] {
    const std::vector<double> mults(multipliers, multipliers + n_multipliers);
    const std::vector<cosifl::SweepRow> rows =
        cosifl::sweep_noise(s->cfg, mults, seeds_per_value);
    cosifl::write_sweep_csv(rows, out_csv_path);
  });
}

}  // extern "C"
