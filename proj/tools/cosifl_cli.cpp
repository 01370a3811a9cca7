// Command-line front end. Everything goes through the public C API on purpose:
// if a workflow works here, it works for any other binding of libcosifl.
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cosifl.h"

namespace {

int fail(const char* verb) {
  std::fprintf(stderr, "cosifl %s: %s\n", verb, cosifl_last_error());
  return 1;
}

struct ScenarioArgs {
  std::string scenario;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string rule;
  int defense_start = 0;
};

void add_scenario_flags(CLI::App* cmd, ScenarioArgs* a) {
  cmd->add_option("--scenario", a->scenario, "scenario JSON file")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--seed", a->seed, "override the scenario seed")
      ->each([a](const std::string&) { a->seed_set = true; });
  cmd->add_option("--rule", a->rule, "client-selection rule")
      ->check(CLI::IsMember({"cosifl", "nd", "ndt"}));
  cmd->add_option("--defense-start", a->defense_start,
                  "enable the defense from this round (1-based)")
      ->check(CLI::PositiveNumber);
}

// Loads + applies overrides; returns nullptr after printing the error.
cosifl_scenario* open_scenario(const ScenarioArgs& a, const char* verb) {
  cosifl_scenario* s = nullptr;
  if (cosifl_scenario_load(a.scenario.c_str(), &s) != COSIFL_OK) {
    fail(verb);
    return nullptr;
  }
  if (a.seed_set) cosifl_scenario_set_seed(s, a.seed);
  if (!a.rule.empty() &&
      cosifl_scenario_set_rule(s, a.rule.c_str()) != COSIFL_OK) {
    fail(verb);
    cosifl_scenario_free(s);
    return nullptr;
  }
  if (a.defense_start > 0 &&
      cosifl_scenario_set_defense_start(s, a.defense_start) != COSIFL_OK) {
    fail(verb);
    cosifl_scenario_free(s);
    return nullptr;
  }
  return s;
}

int emit_string(const std::string& out_path, const char* text,
                const char* verb) {
  if (out_path.empty()) {
    std::fputs(text, stdout);
    return 0;
  }
  std::FILE* f = std::fopen(out_path.c_str(), "wb");
  if (!f || std::fputs(text, f) < 0) {
    std::fprintf(stderr, "cosifl %s: cannot write %s\n", verb,
                 out_path.c_str());
    if (f) std::fclose(f);
    return 1;
  }
  std::fclose(f);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deterministic federated-learning contest simulator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(cosifl_version()));

  ScenarioArgs run_args;
  std::string run_out;
  bool dump_shards = false;
  bool adaptive_gamma = false;
  CLI::App* run = app.add_subcommand(
      "run", "simulate a scenario and write its artifacts");
  add_scenario_flags(run, &run_args);
  run->add_option("--out", run_out, "output directory")->required();
  run->add_flag("--dump-shards", dump_shards,
                "also export the per-client data shards as CSV");
  run->add_flag("--adaptive-gamma", adaptive_gamma,
                "re-plan with realized alarm precision as gamma and rerun");

  ScenarioArgs plan_args;
  std::string plan_out;
  CLI::App* plan = app.add_subcommand(
      "plan", "print the selection frontier and chosen (rounds, reward)");
  add_scenario_flags(plan, &plan_args);
  plan->add_option("--out", plan_out, "write JSON here instead of stdout");

  ScenarioArgs eq_args;
  std::string eq_out;
  double eq_reward = 0;
  CLI::App* equilibrium = app.add_subcommand(
      "equilibrium", "print the contest equilibrium at a reward");
  add_scenario_flags(equilibrium, &eq_args);
  equilibrium->add_option(
      "--reward", eq_reward,
      "contest reward (default: the planner's optimal reward)");
  equilibrium->add_option("--out", eq_out,
                          "write CSV here instead of stdout");

  std::string audit_run_dir, audit_out;
  CLI::App* audit = app.add_subcommand(
      "audit", "re-run the membership audit of a finished run directory");
  audit->add_option("--run", audit_run_dir, "run directory to audit")
      ->required()
      ->check(CLI::ExistingDirectory);
  audit->add_option("--out", audit_out, "audit output directory")->required();

  ScenarioArgs sweep_args;
  std::string sweep_out;
  std::vector<double> multipliers{0.0, 0.5, 1.0, 2.0};
  int seeds_per_value = 5;
  CLI::App* sweep = app.add_subcommand(
      "sweep", "noise-multiplier sweep of the membership audits");
  add_scenario_flags(sweep, &sweep_args);
  sweep->add_option("--multipliers", multipliers,
                    "noise multipliers to try (default 0,0.5,1,2)")
      ->delimiter(',');
  sweep->add_option("--seeds", seeds_per_value,
                    "seeds per multiplier (base seed, base+1, ...)")
      ->check(CLI::PositiveNumber);
  sweep->add_option("--out", sweep_out, "output CSV path")->required();

  CLI11_PARSE(app, argc, argv);

  if (*run) {
    cosifl_scenario* s = open_scenario(run_args, "run");
    if (!s) return 1;
    cosifl_run* r = nullptr;
    const int run_rc = adaptive_gamma ? cosifl_run_scenario_adaptive(s, &r)
                                      : cosifl_run_scenario(s, &r);
    if (run_rc != COSIFL_OK) {
      cosifl_scenario_free(s);
      return fail("run");
    }
    int rc = cosifl_run_write_outputs(r, run_out.c_str(), dump_shards ? 1 : 0);
    if (rc != COSIFL_OK) {
      cosifl_run_free(r);
      cosifl_scenario_free(s);
      return fail("run");
    }
    double ma = 0, cost = 0;
    cosifl_run_final_accuracy(r, &ma);
    cosifl_run_total_cost(r, &cost);
    std::printf("run complete: final_ma=%.4f total_cost=%.4f out=%s\n", ma,
                cost, run_out.c_str());
    cosifl_run_free(r);
    cosifl_scenario_free(s);
    return 0;
  }

  if (*plan) {
    cosifl_scenario* s = open_scenario(plan_args, "plan");
    if (!s) return 1;
    char* text = nullptr;
    if (cosifl_plan_json(s, &text) != COSIFL_OK) {
      cosifl_scenario_free(s);
      return fail("plan");
    }
    const int rc = emit_string(plan_out, text, "plan");
    cosifl_string_free(text);
    cosifl_scenario_free(s);
    return rc;
  }

  if (*equilibrium) {
    cosifl_scenario* s = open_scenario(eq_args, "equilibrium");
    if (!s) return 1;
    char* text = nullptr;
    if (cosifl_equilibrium_csv(s, eq_reward, &text) != COSIFL_OK) {
      cosifl_scenario_free(s);
      return fail("equilibrium");
    }
    const int rc = emit_string(eq_out, text, "equilibrium");
    cosifl_string_free(text);
    cosifl_scenario_free(s);
    return rc;
  }

  if (*audit) {
    if (cosifl_audit_run_dir(audit_run_dir.c_str(), audit_out.c_str()) !=
        COSIFL_OK)
      return fail("audit");
    std::printf("audit written to %s\n", audit_out.c_str());
    return 0;
  }

  if (*sweep) {
    cosifl_scenario* s = open_scenario(sweep_args, "sweep");
    if (!s) return 1;
    const int rc =
        cosifl_sweep_noise(s, multipliers.data(), multipliers.size(),
                           seeds_per_value, sweep_out.c_str());
    cosifl_scenario_free(s);
    if (rc != COSIFL_OK) return fail("sweep");
    std::printf("sweep written to %s\n", sweep_out.c_str());
    return 0;
  }

  return 0;
}
