// Exercises the C binding end to end: lifecycle, overrides, runs, string
// queries, artifact writers and every error-code path. Results that can also
// be produced by the C++ core directly are cross-checked for exact equality —
// the binding must be a zero-cost veneer, not a second implementation.
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "cosifl.h"
#include "cosifl/engine.hpp"
#include "doctest.h"
#include "helpers.hpp"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

std::string base_path() { return testutil::scenario_path("baseline.json"); }

// RAII wrappers so failing REQUIREs can't leak handles all over the suite.
struct ScenarioHandle {
  cosifl_scenario* p = nullptr;
  ~ScenarioHandle() { cosifl_scenario_free(p); }
};
struct RunHandle {
  cosifl_run* p = nullptr;
  ~RunHandle() { cosifl_run_free(p); }
};
struct StringOut {
  char* p = nullptr;
  ~StringOut() { cosifl_string_free(p); }
};

}  // namespace

TEST_CASE("version string and clean error slate") {
  const char* v = cosifl_version();
  REQUIRE(v != nullptr);
  CHECK(std::strlen(v) > 0);
  CHECK(std::string(v).find('.') != std::string::npos);
}

TEST_CASE("scenario load / parse lifecycle and error codes") {
  ScenarioHandle ok;
  REQUIRE(cosifl_scenario_load(base_path().c_str(), &ok.p) == COSIFL_OK);
  REQUIRE(ok.p != nullptr);
  CHECK(std::strlen(cosifl_last_error()) == 0);

  ScenarioHandle missing;
  CHECK(cosifl_scenario_load("/nonexistent/nowhere.json", &missing.p) ==
        COSIFL_ERR_IO);
  CHECK(missing.p == nullptr);
  CHECK(std::strlen(cosifl_last_error()) > 0);

  ScenarioHandle garbled;
  CHECK(cosifl_scenario_parse("{not json", &garbled.p) == COSIFL_ERR_PARSE);

  // Well-formed JSON that violates the schema: the message names the field.
  nlohmann::json doc =
      nlohmann::json::parse(testutil::slurp(base_path()));
  doc["attack"]["fraction"] = 1.5;
  ScenarioHandle invalid;
  CHECK(cosifl_scenario_parse(doc.dump().c_str(), &invalid.p) ==
        COSIFL_ERR_VALIDATION);
  CHECK(std::string(cosifl_last_error()).find("fraction") !=
        std::string::npos);

  // Null arguments are rejected before anything else happens.
  CHECK(cosifl_scenario_load(nullptr, &missing.p) == COSIFL_ERR_INVALID_ARG);
  CHECK(cosifl_scenario_load(base_path().c_str(), nullptr) ==
        COSIFL_ERR_INVALID_ARG);
  CHECK(cosifl_scenario_parse(nullptr, &missing.p) == COSIFL_ERR_INVALID_ARG);
  cosifl_scenario_free(nullptr);  // must be a safe no-op
  cosifl_string_free(nullptr);    // likewise
}

TEST_CASE("overrides: seed, rule, defense start, noise multiplier") {
  ScenarioHandle s;
  REQUIRE(cosifl_scenario_load(base_path().c_str(), &s.p) == COSIFL_OK);

  CHECK(cosifl_scenario_set_seed(s.p, 12) == COSIFL_OK);
  CHECK(cosifl_scenario_set_rule(s.p, "nd") == COSIFL_OK);
  CHECK(cosifl_scenario_set_rule(s.p, "ndt") == COSIFL_OK);
  CHECK(cosifl_scenario_set_rule(s.p, "cosifl") == COSIFL_OK);
  CHECK(cosifl_scenario_set_rule(s.p, "fastest") == COSIFL_ERR_INVALID_ARG);
  CHECK(std::string(cosifl_last_error()).find("rule") != std::string::npos);
  CHECK(cosifl_scenario_set_defense_start(s.p, 5) == COSIFL_OK);
  CHECK(cosifl_scenario_set_noise_multiplier(s.p, 0.5) == COSIFL_OK);

  CHECK(cosifl_scenario_set_seed(nullptr, 1) == COSIFL_ERR_INVALID_ARG);
  CHECK(cosifl_scenario_set_rule(s.p, nullptr) == COSIFL_ERR_INVALID_ARG);

  // The overrides must actually land in the executed scenario: run and read
  // the config echo out of the summary document.
  RunHandle r;
  REQUIRE(cosifl_run_scenario(s.p, &r.p) == COSIFL_OK);
  StringOut js;
  REQUIRE(cosifl_run_summary_json(r.p, &js.p) == COSIFL_OK);
  nlohmann::json summary = nlohmann::json::parse(js.p);
  CHECK(summary.at("config").at("seed").get<std::uint64_t>() == 12);
  CHECK(summary.at("config").at("rule").get<std::string>() == "cosifl");
  CHECK(summary.at("config").at("defense").at("start_round").get<int>() == 5);
  CHECK(summary.at("config").at("dp").at("noise_multiplier").get<double>() ==
        doctest::Approx(0.5));
}

TEST_CASE("run through the binding matches the C++ core exactly") {
  ScenarioHandle s;
  REQUIRE(cosifl_scenario_load(base_path().c_str(), &s.p) == COSIFL_OK);
  RunHandle r;
  REQUIRE(cosifl_run_scenario(s.p, &r.p) == COSIFL_OK);
  REQUIRE(r.p != nullptr);

  double acc = -1, cost = -1;
  REQUIRE(cosifl_run_final_accuracy(r.p, &acc) == COSIFL_OK);
  REQUIRE(cosifl_run_total_cost(r.p, &cost) == COSIFL_OK);

  cosifl::RunSummary ref =
      cosifl::run_scenario(cosifl::load_scenario(base_path()));
  CHECK(acc == ref.final_ma);
  CHECK(cost == ref.realized_cost.total);

  StringOut js;
  REQUIRE(cosifl_run_summary_json(r.p, &js.p) == COSIFL_OK);
  nlohmann::json summary = nlohmann::json::parse(js.p);
  CHECK(summary.at("result").at("final_ma").get<double>() ==
        doctest::Approx(ref.final_ma));
  CHECK(summary.at("result").at("rounds_executed").get<int>() == 28);

  CHECK(cosifl_run_final_accuracy(r.p, nullptr) == COSIFL_ERR_INVALID_ARG);
  CHECK(cosifl_run_final_accuracy(nullptr, &acc) == COSIFL_ERR_INVALID_ARG);
  CHECK(cosifl_run_scenario(nullptr, &r.p) == COSIFL_ERR_INVALID_ARG);
}

TEST_CASE("adaptive entry point mirrors the plain one on an alarm-free run") {
  ScenarioHandle s;
  REQUIRE(cosifl_scenario_load(base_path().c_str(), &s.p) == COSIFL_OK);
  RunHandle plain, adaptive;
  REQUIRE(cosifl_run_scenario(s.p, &plain.p) == COSIFL_OK);
  REQUIRE(cosifl_run_scenario_adaptive(s.p, &adaptive.p) == COSIFL_OK);
  double a = 0, b = 0;
  REQUIRE(cosifl_run_final_accuracy(plain.p, &a) == COSIFL_OK);
  REQUIRE(cosifl_run_final_accuracy(adaptive.p, &b) == COSIFL_OK);
  CHECK(a == b);
}

TEST_CASE("plan document describes the frontier without running anything") {
  ScenarioHandle s;
  REQUIRE(cosifl_scenario_load(base_path().c_str(), &s.p) == COSIFL_OK);
  StringOut js;
  REQUIRE(cosifl_plan_json(s.p, &js.p) == COSIFL_OK);
  nlohmann::json plan = nlohmann::json::parse(js.p);
  REQUIRE(plan.contains("records"));
  CHECK(plan.at("records").size() == 5);
  CHECK(plan.at("best").at("active") == nlohmann::json({0, 2}));
  CHECK(plan.at("best").at("rounds").get<int>() == 28);
  CHECK(cosifl_plan_json(s.p, nullptr) == COSIFL_ERR_INVALID_ARG);
}

TEST_CASE("equilibrium csv: explicit reward and planner-optimal fallback") {
  ScenarioHandle s;
  REQUIRE(cosifl_scenario_load(base_path().c_str(), &s.p) == COSIFL_OK);

  StringOut at100;
  REQUIRE(cosifl_equilibrium_csv(s.p, 100.0, &at100.p) == COSIFL_OK);
  std::string text(at100.p);
  CHECK(text.rfind("# reward=", 0) == 0);
  CHECK(text.find("id,e,unit_cost,active,batch,reward_share,utility\n") !=
        std::string::npos);
  // Comment + header + one row per accepted candidate.
  int lines = 0;
  for (char c : text)
    if (c == '\n') ++lines;
  CHECK(lines == 8);

  // reward <= 0 prices the contest at the planner's own optimum instead.
  StringOut opt;
  REQUIRE(cosifl_equilibrium_csv(s.p, -1.0, &opt.p) == COSIFL_OK);
  CHECK(std::string(opt.p) != text);
  CHECK(std::string(opt.p).rfind("# reward=", 0) == 0);
}

TEST_CASE("artifact writers and post-hoc tools over the binding") {
  fs::path run_dir = testutil::scratch_dir("capi_run");
  fs::path audit_dir = testutil::scratch_dir("capi_audit");

  ScenarioHandle s;
  REQUIRE(cosifl_scenario_load(base_path().c_str(), &s.p) == COSIFL_OK);
  RunHandle r;
  REQUIRE(cosifl_run_scenario(s.p, &r.p) == COSIFL_OK);
  REQUIRE(cosifl_run_write_outputs(r.p, run_dir.string().c_str(), 1) ==
          COSIFL_OK);
  CHECK(fs::exists(run_dir / "summary.json"));
  CHECK(fs::exists(run_dir / "shards.csv"));

  // The binding writes the very same bytes the C++ writer would.
  fs::path ref_dir = testutil::scratch_dir("capi_ref");
  cosifl::emit_outputs(cosifl::run_scenario(cosifl::load_scenario(base_path())),
                       ref_dir.string(), true);
  for (const char* name :
       {"summary.json", "rounds.jsonl", "metrics.csv", "shards.csv"}) {
    CHECK(testutil::slurp((run_dir / name).string()) ==
          testutil::slurp((ref_dir / name).string()));
  }

  REQUIRE(cosifl_audit_run_dir(run_dir.string().c_str(),
                               audit_dir.string().c_str()) == COSIFL_OK);
  CHECK(fs::exists(audit_dir / "auc_summary.json"));
  CHECK(cosifl_audit_run_dir("/nonexistent/run", audit_dir.string().c_str()) ==
        COSIFL_ERR_IO);

  // Small sweep through the binding: grid layout checked via the CSV.
  fs::path sweep_csv = testutil::scratch_dir("capi_sweep") / "rows.csv";
  const double mults[2] = {0.0, 1.0};
  REQUIRE(cosifl_sweep_noise(s.p, mults, 2, 1, sweep_csv.string().c_str()) ==
          COSIFL_OK);
  std::ifstream in(sweep_csv);
  std::string header;
  REQUIRE(std::getline(in, header));
  CHECK(header == "multiplier,seed,auc_threshold,auc_logistic,final_ma");
  int rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  CHECK(rows == 2);

  CHECK(cosifl_sweep_noise(s.p, mults, 0, 1, sweep_csv.string().c_str()) ==
        COSIFL_ERR_INVALID_ARG);
  CHECK(cosifl_sweep_noise(s.p, nullptr, 2, 1, sweep_csv.string().c_str()) ==
        COSIFL_ERR_INVALID_ARG);
}

TEST_CASE("planning failures surface as the infeasible error code") {
  nlohmann::json doc = nlohmann::json::parse(testutil::slurp(base_path()));
  doc["time_budget"] = 0.5;  // under one round even for the fastest pair
  ScenarioHandle s;
  REQUIRE(cosifl_scenario_parse(doc.dump().c_str(), &s.p) == COSIFL_OK);
  RunHandle r;
  CHECK(cosifl_run_scenario(s.p, &r.p) == COSIFL_ERR_INFEASIBLE);
  CHECK(r.p == nullptr);
  StringOut js;
  CHECK(cosifl_plan_json(s.p, &js.p) == COSIFL_ERR_INFEASIBLE);
  CHECK(std::strlen(cosifl_last_error()) > 0);
}
