#include "cosifl/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace cosifl {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& path, const std::string& constraint) {
  throw ConfigError(path + ": " + constraint);
}

void check_keys(const json& j, const std::string& path,
                std::initializer_list<const char*> allowed) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : allowed)
      if (it.key() == k) { known = true; break; }
    if (!known) fail(path + "." + it.key(), "unknown key");
  }
}

const json* find(const json& j, const char* key) {
  auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

double req_double(const json& j, const std::string& path, const char* key,
                  double fallback) {
  const json* v = find(j, key);
  if (!v) return fallback;
  if (!v->is_number()) fail(path + "." + key, "must be a number");
  return v->get<double>();
}

int req_int(const json& j, const std::string& path, const char* key,
            int fallback) {
  const json* v = find(j, key);
  if (!v) return fallback;
  if (!v->is_number_integer()) fail(path + "." + key, "must be an integer");
  return v->get<int>();
}

bool req_bool(const json& j, const std::string& path, const char* key,
              bool fallback) {
  const json* v = find(j, key);
  if (!v) return fallback;
  if (!v->is_boolean()) fail(path + "." + key, "must be a boolean");
  return v->get<bool>();
}

std::string req_string(const json& j, const std::string& path, const char* key,
                       const std::string& fallback) {
  const json* v = find(j, key);
  if (!v) return fallback;
  if (!v->is_string()) fail(path + "." + key, "must be a string");
  return v->get<std::string>();
}

Rule parse_rule(const std::string& s, const std::string& path) {
  if (s == "cosifl") return Rule::kCosifl;
  if (s == "nd") return Rule::kNd;
  if (s == "ndt") return Rule::kNdt;
  fail(path, "must be one of cosifl|nd|ndt");
}

const char* rule_name(Rule r) {
  switch (r) {
    case Rule::kCosifl: return "cosifl";
    case Rule::kNd: return "nd";
    case Rule::kNdt: return "ndt";
  }
  return "cosifl";
}

AttackKind parse_kind(const std::string& s, const std::string& path) {
  if (s == "none") return AttackKind::kNone;
  if (s == "sign_flip") return AttackKind::kSignFlip;
  if (s == "label_flip") return AttackKind::kLabelFlip;
  if (s == "adaptive") return AttackKind::kAdaptive;
  if (s == "targeted") return AttackKind::kTargeted;
  fail(path, "must be one of none|sign_flip|label_flip|adaptive|targeted");
}

const char* kind_name(AttackKind k) {
  switch (k) {
    case AttackKind::kNone: return "none";
    case AttackKind::kSignFlip: return "sign_flip";
    case AttackKind::kLabelFlip: return "label_flip";
    case AttackKind::kAdaptive: return "adaptive";
    case AttackKind::kTargeted: return "targeted";
  }
  return "none";
}

AlarmPolicy parse_policy(const std::string& s, const std::string& path) {
  if (s == "honest") return AlarmPolicy::kHonest;
  if (s == "always_alarm") return AlarmPolicy::kAlwaysAlarm;
  if (s == "never_alarm") return AlarmPolicy::kNeverAlarm;
  fail(path, "must be one of honest|always_alarm|never_alarm");
}

const char* policy_name(AlarmPolicy p) {
  switch (p) {
    case AlarmPolicy::kHonest: return "honest";
    case AlarmPolicy::kAlwaysAlarm: return "always_alarm";
    case AlarmPolicy::kNeverAlarm: return "never_alarm";
  }
  return "honest";
}

ScenarioConfig from_json(const json& root) {
  if (!root.is_object()) throw ConfigError("scenario: root must be an object");
  check_keys(root, "scenario",
             {"seed", "time_budget", "max_rounds", "rule", "alarm", "penalty",
              "dp", "training", "loss_proxy", "risk", "caps", "game", "attack",
              "data", "defense", "report", "clients"});

  ScenarioConfig c;
  if (const json* v = find(root, "seed")) {
    if (!v->is_number_unsigned() && !v->is_number_integer())
      fail("seed", "must be a non-negative integer");
    if (v->is_number_integer() && v->get<std::int64_t>() < 0)
      fail("seed", "must be a non-negative integer");
    c.seed = v->get<std::uint64_t>();
  }
  c.time_budget = req_double(root, "scenario", "time_budget", c.time_budget);
  if (c.time_budget <= 0) fail("time_budget", "must be > 0");
  c.max_rounds = req_int(root, "scenario", "max_rounds", c.max_rounds);
  if (c.max_rounds < 1) fail("max_rounds", "must be >= 1");
  c.rule = parse_rule(req_string(root, "scenario", "rule", rule_name(c.rule)),
                      "rule");

  if (const json* v = find(root, "alarm")) {
    check_keys(*v, "alarm", {"client_tolerance", "server_similarity"});
    c.alarm.client_tolerance =
        req_double(*v, "alarm", "client_tolerance", c.alarm.client_tolerance);
    c.alarm.server_similarity =
        req_double(*v, "alarm", "server_similarity", c.alarm.server_similarity);
  }
  if (c.alarm.client_tolerance <= 0 || c.alarm.client_tolerance >= 1)
    fail("alarm.client_tolerance", "must lie in (0,1)");
  if (c.alarm.server_similarity <= 0 || c.alarm.server_similarity >= 1)
    fail("alarm.server_similarity", "must lie in (0,1)");

  if (const json* v = find(root, "penalty")) {
    check_keys(*v, "penalty", {"ban_threshold", "rejoin_probability"});
    c.penalty.ban_threshold =
        req_int(*v, "penalty", "ban_threshold", c.penalty.ban_threshold);
    c.penalty.rejoin_probability = req_double(*v, "penalty",
                                             "rejoin_probability",
                                             c.penalty.rejoin_probability);
  }
  if (c.penalty.ban_threshold < 1) fail("penalty.ban_threshold", "must be >= 1");
  if (c.penalty.rejoin_probability < 0 || c.penalty.rejoin_probability > 1)
    fail("penalty.rejoin_probability", "must lie in [0,1]");

  if (const json* v = find(root, "dp")) {
    check_keys(*v, "dp", {"enabled", "delta", "clip", "noise_multiplier"});
    c.dp.enabled = req_bool(*v, "dp", "enabled", c.dp.enabled);
    c.dp.delta = req_double(*v, "dp", "delta", c.dp.delta);
    c.dp.clip = req_double(*v, "dp", "clip", c.dp.clip);
    c.dp.noise_multiplier =
        req_double(*v, "dp", "noise_multiplier", c.dp.noise_multiplier);
  }
  if (c.dp.delta <= 0 || c.dp.delta >= 1) fail("dp.delta", "must lie in (0,1)");
  if (c.dp.clip <= 0) fail("dp.clip", "must be > 0");
  if (c.dp.noise_multiplier < 0) fail("dp.noise_multiplier", "must be >= 0");

  if (const json* v = find(root, "training")) {
    check_keys(*v, "training",
               {"learning_rate", "server_learning_rate", "local_epochs",
                "l2_reg"});
    c.training.learning_rate =
        req_double(*v, "training", "learning_rate", c.training.learning_rate);
    c.training.server_learning_rate =
        req_double(*v, "training", "server_learning_rate",
                   c.training.server_learning_rate);
    c.training.local_epochs =
        req_int(*v, "training", "local_epochs", c.training.local_epochs);
    c.training.l2_reg = req_double(*v, "training", "l2_reg", c.training.l2_reg);
  }
  if (c.training.learning_rate <= 0)
    fail("training.learning_rate", "must be > 0");
  if (c.training.server_learning_rate <= 0)
    fail("training.server_learning_rate", "must be > 0");
  if (c.training.local_epochs < 1) fail("training.local_epochs", "must be >= 1");
  if (c.training.l2_reg < 0) fail("training.l2_reg", "must be >= 0");

  if (const json* v = find(root, "loss_proxy")) {
    check_keys(*v, "loss_proxy",
               {"gamma1", "gamma2", "gamma3", "mu", "rho", "theta"});
    c.loss_proxy.gamma1 = req_double(*v, "loss_proxy", "gamma1",
                                     c.loss_proxy.gamma1);
    c.loss_proxy.gamma2 = req_double(*v, "loss_proxy", "gamma2",
                                     c.loss_proxy.gamma2);
    c.loss_proxy.gamma3 = req_double(*v, "loss_proxy", "gamma3",
                                     c.loss_proxy.gamma3);
    c.loss_proxy.mu = req_double(*v, "loss_proxy", "mu", c.loss_proxy.mu);
    c.loss_proxy.rho = req_double(*v, "loss_proxy", "rho", c.loss_proxy.rho);
    if (find(*v, "theta"))
      c.loss_proxy.theta = req_double(*v, "loss_proxy", "theta", 0.0);
  }
  if (c.loss_proxy.gamma1 < 0) fail("loss_proxy.gamma1", "must be >= 0");
  if (c.loss_proxy.gamma2 < 0) fail("loss_proxy.gamma2", "must be >= 0");
  if (c.loss_proxy.gamma3 < 0) fail("loss_proxy.gamma3", "must be >= 0");
  if (c.loss_proxy.mu <= 0) fail("loss_proxy.mu", "must be > 0");
  if (c.loss_proxy.rho <= 0) fail("loss_proxy.rho", "must be > 0");
  if (c.loss_proxy.theta && *c.loss_proxy.theta < 0)
    fail("loss_proxy.theta", "must be >= 0");
  {
    const double phi = decay_factor(c.loss_proxy.mu, c.loss_proxy.rho,
                                    c.training.learning_rate);
    if (!(phi > 0 && phi < 1)) {
      std::ostringstream os;
      os << "decay factor phi = 1 - 2*mu*eta + 2*mu*rho*eta^2 must lie in "
            "(0,1), got "
         << phi;
      fail("loss_proxy", os.str());
    }
  }

  if (const json* v = find(root, "risk")) {
    check_keys(*v, "risk", {"delta1", "delta2"});
    c.risk.delta1 = req_double(*v, "risk", "delta1", c.risk.delta1);
    c.risk.delta2 = req_double(*v, "risk", "delta2", c.risk.delta2);
  }
  if (c.risk.delta1 < 0) fail("risk.delta1", "must be >= 0");
  if (c.risk.delta2 < 0) fail("risk.delta2", "must be >= 0");

  if (const json* v = find(root, "caps")) {
    check_keys(*v, "caps", {"epsilon_max", "lambda_max"});
    c.caps.epsilon_max =
        req_double(*v, "caps", "epsilon_max", c.caps.epsilon_max);
    c.caps.lambda_max = req_double(*v, "caps", "lambda_max", c.caps.lambda_max);
  }
  if (c.caps.epsilon_max <= 0) fail("caps.epsilon_max", "must be > 0");
  if (c.caps.lambda_max < 0) fail("caps.lambda_max", "must be >= 0");

  if (const json* v = find(root, "game")) {
    check_keys(*v, "game",
               {"reward_min", "reward_max", "min_batch", "denominator"});
    c.game.reward_min = req_double(*v, "game", "reward_min", c.game.reward_min);
    c.game.reward_max = req_double(*v, "game", "reward_max", c.game.reward_max);
    c.game.min_batch = req_int(*v, "game", "min_batch", c.game.min_batch);
    const std::string d = req_string(
        *v, "game", "denominator",
        c.game.denominator == Denominator::kSelected ? "selected" : "all");
    if (d == "selected") c.game.denominator = Denominator::kSelected;
    else if (d == "all") c.game.denominator = Denominator::kAll;
    else fail("game.denominator", "must be one of selected|all");
  }
  if (c.game.reward_min <= 0) fail("game.reward_min", "must be > 0");
  if (c.game.reward_max <= c.game.reward_min)
    fail("game.reward_max", "must be > game.reward_min");
  if (c.game.min_batch < 1) fail("game.min_batch", "must be >= 1");

  if (const json* v = find(root, "attack")) {
    check_keys(*v, "attack",
               {"kind", "fraction", "sign_constant", "beta", "source_class",
                "target_class", "alarm_policy"});
    c.attack.kind = parse_kind(
        req_string(*v, "attack", "kind", kind_name(c.attack.kind)),
        "attack.kind");
    c.attack.fraction = req_double(*v, "attack", "fraction", c.attack.fraction);
    c.attack.sign_constant =
        req_double(*v, "attack", "sign_constant", c.attack.sign_constant);
    c.attack.beta = req_double(*v, "attack", "beta", c.attack.beta);
    c.attack.source_class =
        req_int(*v, "attack", "source_class", c.attack.source_class);
    c.attack.target_class =
        req_int(*v, "attack", "target_class", c.attack.target_class);
    c.attack.alarm_policy = parse_policy(
        req_string(*v, "attack", "alarm_policy",
                   policy_name(c.attack.alarm_policy)),
        "attack.alarm_policy");
  }
  if (c.attack.fraction < 0 || c.attack.fraction >= 0.5)
    fail("attack.fraction", "must lie in [0, 0.5)");
  if (c.attack.sign_constant >= 0) fail("attack.sign_constant", "must be < 0");
  if (c.attack.beta < 0) fail("attack.beta", "must be >= 0");

  if (const json* v = find(root, "data")) {
    check_keys(*v, "data",
               {"feature_dim", "num_classes", "samples_per_client", "noniid_p",
                "class_separation", "min_shard", "holdout_fraction",
                "test_fraction"});
    c.data.feature_dim = req_int(*v, "data", "feature_dim", c.data.feature_dim);
    c.data.num_classes = req_int(*v, "data", "num_classes", c.data.num_classes);
    c.data.samples_per_client =
        req_int(*v, "data", "samples_per_client", c.data.samples_per_client);
    c.data.noniid_p = req_double(*v, "data", "noniid_p", c.data.noniid_p);
    c.data.class_separation =
        req_double(*v, "data", "class_separation", c.data.class_separation);
    c.data.min_shard = req_int(*v, "data", "min_shard", c.data.min_shard);
    c.data.holdout_fraction =
        req_double(*v, "data", "holdout_fraction", c.data.holdout_fraction);
    c.data.test_fraction =
        req_double(*v, "data", "test_fraction", c.data.test_fraction);
  }
  if (c.data.feature_dim < 2) fail("data.feature_dim", "must be >= 2");
  if (c.data.num_classes < 2) fail("data.num_classes", "must be >= 2");
  if (c.data.noniid_p < 0 || c.data.noniid_p > 1)
    fail("data.noniid_p", "must lie in [0,1]");
  if (c.data.class_separation <= 0)
    fail("data.class_separation", "must be > 0");
  if (c.data.holdout_fraction <= 0 || c.data.holdout_fraction > 0.5)
    fail("data.holdout_fraction", "must lie in (0, 0.5]");
  if (c.data.test_fraction <= 0 || c.data.test_fraction > 0.5)
    fail("data.test_fraction", "must lie in (0, 0.5]");
  if (static_cast<double>(c.data.min_shard) * c.data.test_fraction < 20.0)
    fail("data.min_shard",
         "test split too small: min_shard * test_fraction must be >= 20");
  if ((1.0 - c.data.holdout_fraction) * c.data.samples_per_client <
      c.data.min_shard)
    fail("data.samples_per_client",
         "must cover min_shard after the server holdout split");
  if (c.attack.kind == AttackKind::kTargeted) {
    if (c.attack.source_class < 0 ||
        c.attack.source_class >= c.data.num_classes)
      fail("attack.source_class", "must name a valid class");
    if (c.attack.target_class < 0 ||
        c.attack.target_class >= c.data.num_classes)
      fail("attack.target_class", "must name a valid class");
    if (c.attack.source_class == c.attack.target_class)
      fail("attack.target_class", "must differ from source_class");
  }

  if (const json* v = find(root, "defense")) {
    check_keys(*v, "defense", {"enabled", "start_round"});
    c.defense.enabled = req_bool(*v, "defense", "enabled", c.defense.enabled);
    c.defense.start_round =
        req_int(*v, "defense", "start_round", c.defense.start_round);
  }
  if (c.defense.start_round < 1) fail("defense.start_round", "must be >= 1");

  if (const json* v = find(root, "report")) {
    check_keys(*v, "report", {"diagnostics"});
    c.report.diagnostics =
        req_bool(*v, "report", "diagnostics", c.report.diagnostics);
  }

  const json* cl = find(root, "clients");
  if (!cl) fail("clients", "is required");
  if (!cl->is_array()) fail("clients", "must be an array");
  if (cl->size() < 2) fail("clients", "must list at least 2 clients");
  for (std::size_t i = 0; i < cl->size(); ++i) {
    const std::string path = "clients[" + std::to_string(i) + "]";
    const json& e = (*cl)[i];
    if (!e.is_object()) fail(path, "must be an object");
    check_keys(e, path, {"epsilon", "gamma", "cost", "latency", "lambda"});
    ClientConfig cc;
    cc.epsilon = req_double(e, path, "epsilon", cc.epsilon);
    cc.gamma = req_double(e, path, "gamma", cc.gamma);
    cc.cost = req_double(e, path, "cost", cc.cost);
    cc.latency = req_double(e, path, "latency", cc.latency);
    if (find(e, "lambda")) cc.lambda = req_double(e, path, "lambda", 0.0);
    if (cc.epsilon <= 0) fail(path + ".epsilon", "epsilon must be > 0");
    if (cc.epsilon > c.caps.epsilon_max)
      fail(path + ".epsilon", "epsilon must be <= caps.epsilon_max");
    if (cc.gamma <= 0 || cc.gamma > 1)
      fail(path + ".gamma", "gamma must lie in (0,1]");
    if (cc.cost <= 0) fail(path + ".cost", "cost must be > 0");
    if (cc.latency <= 0) fail(path + ".latency", "latency must be > 0");
    if (cc.lambda && *cc.lambda < 0)
      fail(path + ".lambda", "lambda must be >= 0");
    c.clients.push_back(cc);
  }
  return c;
}

}  // namespace

ScenarioConfig parse_scenario(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("scenario parse error: ") + e.what());
  }
  return from_json(root);
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scenario file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

std::string dump_scenario(const ScenarioConfig& c) {
  ordered_json j;
  j["seed"] = c.seed;
  j["time_budget"] = c.time_budget;
  j["max_rounds"] = c.max_rounds;
  j["rule"] = rule_name(c.rule);
  j["alarm"] = {{"client_tolerance", c.alarm.client_tolerance},
                {"server_similarity", c.alarm.server_similarity}};
  j["penalty"] = {{"ban_threshold", c.penalty.ban_threshold},
                  {"rejoin_probability", c.penalty.rejoin_probability}};
  j["dp"] = {{"enabled", c.dp.enabled},
             {"delta", c.dp.delta},
             {"clip", c.dp.clip},
             {"noise_multiplier", c.dp.noise_multiplier}};
  j["training"] = {{"learning_rate", c.training.learning_rate},
                   {"server_learning_rate", c.training.server_learning_rate},
                   {"local_epochs", c.training.local_epochs},
                   {"l2_reg", c.training.l2_reg}};
  ordered_json lp = {{"gamma1", c.loss_proxy.gamma1},
                     {"gamma2", c.loss_proxy.gamma2},
                     {"gamma3", c.loss_proxy.gamma3},
                     {"mu", c.loss_proxy.mu},
                     {"rho", c.loss_proxy.rho}};
  if (c.loss_proxy.theta) lp["theta"] = *c.loss_proxy.theta;
  j["loss_proxy"] = lp;
  j["risk"] = {{"delta1", c.risk.delta1}, {"delta2", c.risk.delta2}};
  j["caps"] = {{"epsilon_max", c.caps.epsilon_max},
               {"lambda_max", c.caps.lambda_max}};
  j["game"] = {{"reward_min", c.game.reward_min},
               {"reward_max", c.game.reward_max},
               {"min_batch", c.game.min_batch},
               {"denominator", c.game.denominator == Denominator::kSelected
                                   ? "selected"
                                   : "all"}};
  j["attack"] = {{"kind", kind_name(c.attack.kind)},
                 {"fraction", c.attack.fraction},
                 {"sign_constant", c.attack.sign_constant},
                 {"beta", c.attack.beta},
                 {"source_class", c.attack.source_class},
                 {"target_class", c.attack.target_class},
                 {"alarm_policy", policy_name(c.attack.alarm_policy)}};
  j["data"] = {{"feature_dim", c.data.feature_dim},
               {"num_classes", c.data.num_classes},
               {"samples_per_client", c.data.samples_per_client},
               {"noniid_p", c.data.noniid_p},
               {"class_separation", c.data.class_separation},
               {"min_shard", c.data.min_shard},
               {"holdout_fraction", c.data.holdout_fraction},
               {"test_fraction", c.data.test_fraction}};
  j["defense"] = {{"enabled", c.defense.enabled},
                  {"start_round", c.defense.start_round}};
  j["report"] = {{"diagnostics", c.report.diagnostics}};
  ordered_json arr = ordered_json::array();
  for (const ClientConfig& cc : c.clients) {
    ordered_json e = {{"epsilon", cc.epsilon},
                      {"gamma", cc.gamma},
                      {"cost", cc.cost},
                      {"latency", cc.latency}};
    if (cc.lambda) e["lambda"] = *cc.lambda;
    arr.push_back(e);
  }
  j["clients"] = arr;
  return j.dump(2) + "\n";
}

double derive_nu(double epsilon, double epsilon_max) {
  if (epsilon_max <= 0) throw ProtocolError("epsilon_max must be > 0");
  if (epsilon <= 0 || epsilon > epsilon_max)
    throw ProtocolError("epsilon must lie in (0, epsilon_max]");
  const double r = 1.0 - epsilon / epsilon_max;
  return 1.0 - r * r;
}

double derive_alpha(double lambda, double lambda_max) {
  if (lambda < 0) throw ProtocolError("lambda must be >= 0");
  if (lambda_max == 0) {
    if (lambda > 0)
      throw ProtocolError("lambda exceeds tolerance: client rejected");
    return 1.0;  // identical shards: no divergence anywhere
  }
  if (lambda > lambda_max)
    throw ProtocolError("lambda exceeds tolerance: client rejected");
  const double r = lambda / lambda_max;
  return 1.0 - r * r;
}

double decay_factor(double mu, double rho, double eta) {
  return 1.0 - 2.0 * mu * eta + 2.0 * mu * rho * eta * eta;
}

}  // namespace cosifl
