#include <string>

#include "cosifl/config.hpp"
#include "doctest.h"
#include "helpers.hpp"
#include "json.hpp"

using namespace cosifl;
using nlohmann::json;

namespace {

json baseline_json() {
  return json::parse(testutil::slurp(testutil::scenario_path("baseline.json")));
}

// Expect a ConfigError whose message names the offending field.
void expect_reject(const json& j, const std::string& field) {
  try {
    (void)parse_scenario(j.dump());
    FAIL("accepted invalid scenario (expected complaint about " << field
                                                                << ")");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find(field) != std::string::npos);
  }
}

}  // namespace

TEST_CASE("baseline scenario parses with the values written in the file") {
  const ScenarioConfig cfg =
      load_scenario(testutil::scenario_path("baseline.json"));
  CHECK(cfg.seed == 11);
  CHECK(cfg.time_budget == 40.0);
  CHECK(cfg.max_rounds == 40);
  CHECK(cfg.rule == Rule::kCosifl);
  CHECK(cfg.alarm.client_tolerance == 0.05);
  CHECK(cfg.alarm.server_similarity == 0.15);
  CHECK(cfg.penalty.ban_threshold == 2);
  CHECK(cfg.dp.enabled);
  CHECK(cfg.dp.delta == 1e-5);
  CHECK(cfg.training.local_epochs == 1);
  CHECK(cfg.loss_proxy.gamma1 == 50.0);
  CHECK_FALSE(cfg.loss_proxy.theta.has_value());
  CHECK(cfg.caps.epsilon_max == 8.0);
  CHECK(cfg.caps.lambda_max == 1.0);
  CHECK(cfg.attack.kind == AttackKind::kNone);
  CHECK(cfg.data.feature_dim == 6);
  CHECK(cfg.data.num_classes == 4);
  CHECK(cfg.defense.enabled);
  CHECK(cfg.num_clients() == 6);
  CHECK(cfg.clients[0].epsilon == 2.0);
  CHECK(cfg.clients[5].latency == 1.6);
  REQUIRE(cfg.clients[3].lambda.has_value());
  CHECK(*cfg.clients[3].lambda == 0.28);
}

TEST_CASE("dump/parse round-trips every field") {
  for (const char* name :
       {"baseline.json", "sign_flip.json", "targeted.json", "leaky.json",
        "latency_spread.json", "delayed_defense.json"}) {
    const ScenarioConfig cfg = load_scenario(testutil::scenario_path(name));
    const std::string once = dump_scenario(cfg);
    const ScenarioConfig back = parse_scenario(once);
    CHECK(dump_scenario(back) == once);
    CHECK(back.seed == cfg.seed);
    CHECK(back.rule == cfg.rule);
    CHECK(back.num_clients() == cfg.num_clients());
  }
}

TEST_CASE("unknown keys are hard errors, not silent defaults") {
  json j = baseline_json();
  j["alarm"]["client_tolerence"] = 0.1;  // typo'd key
  expect_reject(j, "client_tolerence");
}

TEST_CASE("type violations name the field") {
  json j = baseline_json();
  j["max_rounds"] = "forty";
  expect_reject(j, "max_rounds");

  j = baseline_json();
  j["dp"]["enabled"] = 1;
  expect_reject(j, "dp.enabled");
}

TEST_CASE("range constraints are enforced") {
  json j = baseline_json();
  j["attack"]["fraction"] = 0.5;  // adversary majority is out of scope
  expect_reject(j, "attack.fraction");

  j = baseline_json();
  j["attack"]["kind"] = "sign_flip";
  j["attack"]["sign_constant"] = 0.5;
  expect_reject(j, "attack.sign_constant");

  j = baseline_json();
  j["clients"][0]["epsilon"] = 9.0;  // above caps.epsilon_max = 8
  expect_reject(j, "epsilon");

  j = baseline_json();
  j["data"]["min_shard"] = 50;  // 50 * 0.2 = 10 test samples, below the floor
  expect_reject(j, "data.min_shard");

  j = baseline_json();
  j["clients"] = json::array({j["clients"][0]});
  expect_reject(j, "clients");

  j = baseline_json();
  j["rule"] = "fastest";
  expect_reject(j, "rule");
}

TEST_CASE("non-json input raises ParseError, missing file raises IoError") {
  CHECK_THROWS_AS((void)parse_scenario("{not json"), ParseError);
  CHECK_THROWS_AS((void)load_scenario("/nonexistent/scenario.json"), IoError);
}

TEST_CASE("privacy weight follows nu = 1 - (1 - eps/eps_max)^2") {
  CHECK(derive_nu(2.0, 8.0) == doctest::Approx(0.4375));   // 1 - 0.75^2
  CHECK(derive_nu(8.0, 8.0) == doctest::Approx(1.0));
  CHECK(derive_nu(4.0, 8.0) == doctest::Approx(0.75));     // 1 - 0.5^2
  CHECK_THROWS_AS((void)derive_nu(0.0, 8.0), ProtocolError);
  CHECK_THROWS_AS((void)derive_nu(9.0, 8.0), ProtocolError);
  CHECK_THROWS_AS((void)derive_nu(1.0, 0.0), ProtocolError);
}

TEST_CASE("quality weight follows alpha = 1 - (lambda/lambda_max)^2") {
  CHECK(derive_alpha(0.0, 1.0) == doctest::Approx(1.0));
  CHECK(derive_alpha(0.3, 1.0) == doctest::Approx(0.91));  // 1 - 0.09
  CHECK(derive_alpha(1.0, 1.0) == doctest::Approx(0.0));
  CHECK_THROWS_AS((void)derive_alpha(1.1, 1.0), ProtocolError);
  // Zero tolerance admits only perfectly homogeneous clients.
  CHECK(derive_alpha(0.0, 0.0) == doctest::Approx(1.0));
  CHECK_THROWS_AS((void)derive_alpha(0.1, 0.0), ProtocolError);
}

TEST_CASE("decay factor is 1 - 2*mu*eta + 2*mu*rho*eta^2") {
  // 1 - 2*0.7*0.2 + 2*0.7*0.4*0.04 = 1 - 0.28 + 0.0224
  CHECK(decay_factor(0.7, 0.4, 0.2) == doctest::Approx(0.7424));
  CHECK(decay_factor(1.0, 0.4, 0.1) == doctest::Approx(0.808));
  // A step size large enough to push the factor out of (0,1) must be
  // rejected at load; check through the scenario validator.
  json j = baseline_json();
  j["training"]["learning_rate"] = 3.0;  // phi = 1 - 6 + 7.2 > 1
  expect_reject(j, "loss_proxy");
}
