#include "cosifl/engine.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "cosifl/attacks.hpp"
#include "cosifl/rng.hpp"
#include "cosifl/textio.hpp"
#include "json.hpp"

namespace cosifl {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

struct Prepared {
  Dataset ds;
  ClientShards shards;
  PlanBundle bundle;
};

std::vector<int> union_train(const ClientShards& shards,
                             const std::vector<int>& ids) {
  std::vector<int> out;
  for (int id : ids) {
    const auto& t = shards.per_client[id].train;
    out.insert(out.end(), t.begin(), t.end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

Prepared prepare(const ScenarioConfig& cfg) {
  Prepared p;
  const int K = cfg.num_clients();
  p.ds = make_dataset(cfg.data, K, cfg.seed);
  p.shards = shard_dataset(p.ds, cfg.data, K, cfg.seed);

  const std::vector<double> est =
      estimate_lambda(p.ds, p.shards, cfg.training.l2_reg, cfg.seed);
  std::vector<double> lam(K);
  for (int k = 0; k < K; ++k)
    lam[k] = cfg.clients[k].lambda.value_or(est[k]);
  double lam_max = cfg.caps.lambda_max;
  if (lam_max <= 0) lam_max = *std::max_element(lam.begin(), lam.end());

  PlanBundle& b = p.bundle;
  for (int k = 0; k < K; ++k) {
    if (lam[k] > lam_max) {
      b.rejected.push_back(k);  // divergence over tolerance: not a candidate
      continue;
    }
    ClientAttributes a;
    a.id = k;
    a.lambda = lam[k];
    a.lambda_estimated = !cfg.clients[k].lambda.has_value();
    a.alpha = lam_max > 0 ? derive_alpha(lam[k], lam_max) : 1.0;
    a.nu = derive_nu(cfg.clients[k].epsilon, cfg.caps.epsilon_max);
    a.epsilon = cfg.clients[k].epsilon;
    a.gamma = cfg.clients[k].gamma;
    a.cost = cfg.clients[k].cost;
    a.latency = cfg.clients[k].latency;
    b.candidates.push_back(a);
  }
  if (b.candidates.size() < 2)
    throw InfeasibleError("fewer than 2 candidates after the divergence cap");

  if (cfg.loss_proxy.theta) {
    b.theta = *cfg.loss_proxy.theta;
  } else {
    // Calibration: how much loss does pooled full-batch training shave off?
    std::vector<int> ids;
    for (const ClientAttributes& a : b.candidates) ids.push_back(a.id);
    const std::vector<int> pooled = union_train(p.shards, ids);
    const Model start = zero_model(p.ds.dim, p.ds.classes);
    const double l0 =
        loss_and_grad(start, p.ds, pooled, cfg.training.l2_reg, nullptr);
    const Model end = train_pooled(start, p.ds, pooled, 200,
                                   cfg.training.learning_rate,
                                   cfg.training.l2_reg);
    const double l1 =
        loss_and_grad(end, p.ds, pooled, cfg.training.l2_reg, nullptr);
    b.theta = std::max(l0 - l1, 1e-6);
  }

  // The two baseline rules plan as if data were clean and privacy free.
  std::vector<ClientAttributes> planning = b.candidates;
  if (cfg.rule != Rule::kCosifl) {
    for (ClientAttributes& a : planning) {
      a.alpha = 1.0;
      a.nu = 1.0;
      a.epsilon = cfg.caps.epsilon_max;
    }
  }
  b.plan = cfg.rule == Rule::kNdt ? plan_fixed_all(cfg, b.theta, planning)
                                  : pareto_select(cfg, b.theta, planning);
  return p;
}

double source_flip_rate(const Model& m, const Dataset& ds,
                        const std::vector<int>& idx, const AttackSpec& atk,
                        double* mean_conf) {
  int flips = 0, total = 0;
  double conf = 0;
  std::vector<double> p(m.classes);
  for (int i : idx) {
    if (ds.y[i] != atk.source_class) continue;
    ++total;
    softmax_probs(m, ds.row(i), p.data());
    conf += p[atk.target_class];
    if (predict_class(m, ds.row(i)) == atk.target_class) ++flips;
  }
  if (mean_conf) *mean_conf = total ? conf / total : 0.0;
  return total ? static_cast<double>(flips) / total : 0.0;
}

}  // namespace

PlanBundle plan_scenario(const ScenarioConfig& cfg) {
  return prepare(cfg).bundle;
}

RunSummary run_scenario(const ScenarioConfig& cfg) {
  Prepared prep = prepare(cfg);
  Dataset& ds = prep.ds;
  const ClientShards& shards = prep.shards;
  const PlanBundle& bundle = prep.bundle;
  const PlanRecord& best = bundle.plan.best;
  const int T = best.rounds;
  const double R = best.reward;

  std::vector<int> candidate_ids;
  std::vector<ClientAttributes> attr_of(cfg.num_clients());
  for (const ClientAttributes& a : bundle.candidates) {
    candidate_ids.push_back(a.id);
    attr_of[a.id] = a;
  }
  std::vector<int> selected = best.active;  // ids, already sorted

  RunSummary out;
  out.cfg = cfg;
  out.plan = bundle;
  out.malicious =
      pick_malicious(candidate_ids, cfg.attack.fraction, cfg.seed);
  std::set<int> malicious_set(out.malicious.begin(), out.malicious.end());
  for (int id : out.malicious)
    poison_labels(cfg.attack, ds, shards.per_client[id].train);

  const int psize = (cfg.data.feature_dim + 1) * cfg.data.num_classes;
  Model w = zero_model(ds.dim, ds.classes);
  Model prev_w = w;
  std::vector<double> prev_delta(psize, 0.0);
  std::vector<Model> cache(cfg.num_clients(), w);
  PenaltyLedger ledger(cfg.penalty.ban_threshold);

  long cum_false_alarms = 0, cum_alarm_events = 0;
  int cum_malicious = 0;
  std::map<int, std::pair<long, long>> alarm_stats;  // id -> (raised, false)
  double sim_time = 0;
  double last_loss = best.cost - best.reward;  // planned loss as a fallback
  std::vector<double> sigma_sum(cfg.num_clients(), 0.0);
  std::vector<int> sigma_cnt(cfg.num_clients(), 0);
  const bool track_grad = cfg.report.diagnostics && !cfg.dp.enabled &&
                          cfg.training.l2_reg > 0;
  double grad_bound = cfg.dp.enabled ? cfg.dp.clip : 0.0;

  for (int t = 1; t <= T; ++t) {
    // Client-side alarming runs whenever the defense exists at all; the
    // server-side cross-analysis (verdicts, penalties, rejoins) only kicks in
    // at start_round. In between, alarmed clients still resume from their own
    // cached models — that self-protection is what later recovery builds on —
    // but the server aggregates every report as if nobody had spoken up.
    const bool alarming = cfg.defense.enabled;
    const bool detecting =
        cfg.defense.enabled && t >= cfg.defense.start_round;
    Rng rejoin_rng(cfg.seed, stream::kRejoin, static_cast<std::uint64_t>(t));
    std::vector<int> rejoined =
        detecting ? sample_rejoins(ledger, cfg.penalty.rejoin_probability,
                                   rejoin_rng)
                  : std::vector<int>{};
    std::vector<int> pool;
    for (int id : selected)
      if (!ledger.banned(id)) pool.push_back(id);
    for (int id : rejoined)
      if (std::binary_search(selected.begin(), selected.end(), id))
        pool.push_back(id);
    std::sort(pool.begin(), pool.end());

    // Clients choose batch sizes at the posted reward. The contest spans the
    // round pool, or the whole candidate set under the "all" denominator.
    const std::vector<int>& contest_ids =
        cfg.game.denominator == Denominator::kAll ? candidate_ids : pool;
    std::vector<Player> players;
    for (int id : contest_ids) players.push_back(to_player(attr_of[id]));
    int eligible = 0;
    for (const Player& pl : players)
      if (pl.e > 0) ++eligible;
    bool have_eq = eligible >= 2;
    EquilibriumResult eq;
    if (have_eq) eq = nash_equilibrium(players, R);

    struct Trainer {
      int id;
      int batch;
      double sigma;
    };
    std::vector<Trainer> trainers;
    if (have_eq) {
      for (std::size_t i = 0; i < contest_ids.size(); ++i) {
        const int id = contest_ids[i];
        if (!eq.active[i]) continue;
        if (!std::binary_search(pool.begin(), pool.end(), id)) continue;
        const int shard_n =
            static_cast<int>(shards.per_client[id].train.size());
        int batch = static_cast<int>(std::llround(eq.batch[i]));
        batch = std::max(batch, cfg.game.min_batch);
        batch = std::min(batch, shard_n);  // clamped to the local shard
        trainers.push_back({id, batch, 0.0});
      }
    }

    RoundReport rep;
    rep.round = t;
    rep.defense_active = detecting;
    rep.pool = pool;
    rep.rejoined = rejoined;

    std::vector<ClientReport> reports;
    for (Trainer& tr : trainers) {
      const Shard& sh = shards.per_client[tr.id];
      const double g_acc = accuracy(w, ds, sh.test);
      const double c_acc = accuracy(cache[tr.id], ds, sh.test);
      const bool is_mal = malicious_set.count(tr.id) > 0;
      bool alarm = false;
      if (alarming) {
        const bool honest = client_alarm(g_acc, c_acc,
                                         cfg.alarm.client_tolerance).alarm;
        alarm = is_mal ? malicious_alarm(cfg.attack.alarm_policy, honest)
                       : honest;
      }
      tr.sigma = cfg.dp.enabled
                     ? noise_scale(cfg.training.learning_rate, cfg.dp.clip, T,
                                   tr.batch, attr_of[tr.id].epsilon,
                                   cfg.dp.delta) *
                           cfg.dp.noise_multiplier
                     : 0.0;
      sigma_sum[tr.id] += tr.sigma;
      sigma_cnt[tr.id] += 1;
      if (track_grad) {
        std::vector<double> g;
        loss_and_grad(w, ds, sh.train, cfg.training.l2_reg, &g);
        double sq = 0;
        for (double v : g) sq += v * v;
        grad_bound = std::max(grad_bound, std::sqrt(sq));
      }

      const Model& init = alarm ? cache[tr.id] : w;
      Rng train_rng(cfg.seed, stream::kTrain,
                    static_cast<std::uint64_t>(tr.id),
                    static_cast<std::uint64_t>(t));
      LocalTrainResult res = local_train(init, ds, sh.train, tr.batch,
                                         cfg.training, cfg.dp, tr.sigma,
                                         train_rng);
      cache[tr.id] = res.model;

      ClientReport cr;
      cr.id = tr.id;
      cr.alarm = alarm;
      cr.local_acc = c_acc;  // the model the client had at alarm time
      cr.batch = tr.batch;
      cr.delta.resize(psize);
      for (int j = 0; j < psize; ++j)
        cr.delta[j] = res.model.w[j] - w.w[j];
      if (is_mal) poison_update(cfg.attack, cr.delta, prev_delta);
      reports.push_back(std::move(cr));

      Participant part;
      part.id = tr.id;
      part.alarm = alarm;
      part.local_acc = c_acc;
      part.global_acc = g_acc;
      part.batch = tr.batch;
      part.sigma = tr.sigma;
      part.malicious = is_mal;
      rep.participants.push_back(part);
    }

    if (!reports.empty()) {
      DetectOutcome outcome;
      if (detecting) {
        outcome = server_detect(prev_w.w, w.w, reports,
                                cfg.alarm.server_similarity,
                                cfg.training.server_learning_rate);
      } else {
        // Alarms (if any) are dropped on the floor: fold in everyone.
        std::vector<ClientReport> muted = reports;
        for (ClientReport& r : muted) r.alarm = false;
        outcome = server_detect(prev_w.w, w.w, muted,
                                cfg.alarm.server_similarity,
                                cfg.training.server_learning_rate);
      }
      rep.kase = outcome.kase;
      rep.base_previous = outcome.base_previous;
      rep.aggregated = outcome.aggregated;
      for (int j = 0; j < psize; ++j)
        prev_delta[j] = outcome.new_global[j] - w.w[j];
      prev_w = w;
      w.w = outcome.new_global;
      if (detecting) {
        apply_penalties(ledger, outcome);
        for (const ClientReport& r : reports)
          if (r.alarm) {
            ++cum_alarm_events;
            ++alarm_stats[r.id].first;
          }
        for (const auto& [id, v] : outcome.verdicts) {
          if (v == Verdict::kMalicious) ++cum_malicious;
          if (v == Verdict::kFalseAlarm) {
            ++cum_false_alarms;
            ++alarm_stats[id].second;
          }
        }
        for (Participant& part : rep.participants) {
          auto it = outcome.verdicts.find(part.id);
          if (it != outcome.verdicts.end()) {
            part.verdict = it->second;
            part.has_verdict = true;
          }
        }
      }
      // Realized reward shares for the trainers (conservation: sums to R).
      std::vector<Player> round_players;
      std::vector<double> round_batches;
      for (const ClientReport& r : reports) {
        round_players.push_back(to_player(attr_of[r.id]));
        round_batches.push_back(r.batch);
      }
      const std::vector<double> shares =
          tullock_shares(round_players, round_batches);
      for (std::size_t i = 0; i < rep.participants.size(); ++i)
        rep.participants[i].reward_share = shares[i] * R;
      double t_round = 0;
      for (const Trainer& tr : trainers)
        t_round = std::max(t_round, attr_of[tr.id].latency);
      sim_time += t_round;
    }

    if (have_eq) {
      // Realized loss proxy: true attributes at this round's contest solution.
      std::vector<ClientAttributes> ca;
      for (int id : contest_ids) ca.push_back(attr_of[id]);
      last_loss = loss_proxy(cfg, bundle.theta, ca, eq.batch, T);
    }
    const double fa_rate =
        cum_alarm_events ? static_cast<double>(cum_false_alarms) /
                               static_cast<double>(cum_alarm_events)
                         : 0.0;
    rep.sim_time = sim_time;
    rep.banned_after = ledger.banned_ids();
    rep.ma = accuracy(w, ds, shards.server_holdout);
    if (cfg.attack.kind == AttackKind::kTargeted)
      rep.mr = source_flip_rate(w, ds, shards.server_holdout, cfg.attack,
                                &rep.confidence);
    rep.false_alarm_rate = fa_rate;
    rep.malicious_verdicts = cum_malicious;
    rep.cost_so_far = last_loss + R + cfg.risk.delta1 * cum_malicious +
                      cfg.risk.delta2 * fa_rate;
    out.rounds.push_back(std::move(rep));
  }

  out.final_model = w;
  out.final_ma = out.rounds.empty() ? 0.0 : out.rounds.back().ma;
  out.final_mr = out.rounds.empty() ? 0.0 : out.rounds.back().mr;
  out.final_confidence =
      out.rounds.empty() ? 0.0 : out.rounds.back().confidence;
  out.sim_time_total = sim_time;
  out.final_banned = ledger.banned_ids();
  const double fa_rate_final =
      cum_alarm_events ? static_cast<double>(cum_false_alarms) /
                             static_cast<double>(cum_alarm_events)
                       : 0.0;
  out.realized_cost.loss = last_loss;
  out.realized_cost.reward = R;
  out.realized_cost.risk =
      cfg.risk.delta1 * cum_malicious + cfg.risk.delta2 * fa_rate_final;
  out.realized_cost.total = out.realized_cost.loss + out.realized_cost.reward +
                            out.realized_cost.risk;
  for (const auto& [id, stats] : alarm_stats)
    out.alarm_precision[id] =
        static_cast<double>(stats.first - stats.second) /
        static_cast<double>(stats.first);

  // Membership audits: training members vs the never-sharded holdout.
  {
    std::vector<int> member_pool = union_train(shards, selected);
    std::vector<int> non_pool = shards.server_holdout;
    Rng rng(cfg.seed, stream::kAuditSample);
    auto draw = [&](std::vector<int>& pool, int n) {
      for (std::size_t i = pool.size(); i > 1; --i)
        std::swap(pool[i - 1], pool[rng.uniform_u64(i)]);
      pool.resize(n);
      std::sort(pool.begin(), pool.end());
    };
    const int n = static_cast<int>(
        std::min({member_pool.size(), non_pool.size(), std::size_t{400}}));
    draw(member_pool, n);
    draw(non_pool, n);
    out.auc_threshold =
        mia_threshold(w, ds, member_pool, non_pool).auc;
    out.auc_logistic =
        mia_logistic(w, ds, member_pool, non_pool, cfg.seed).auc;
  }

  if (cfg.report.diagnostics && cfg.training.l2_reg > 0) {
    const std::vector<int> pooled = union_train(shards, selected);
    const Model opt = find_optimum(ds, pooled, cfg.training.l2_reg, 1e-8);
    Diagnostics& d = out.diagnostics;
    d.computed = true;
    for (int j = 0; j < psize; ++j) d.r0 += opt.w[j] * opt.w[j];
    for (int j = 0; j < psize; ++j) {
      const double diff = w.w[j] - opt.w[j];
      d.empirical_dist_sq += diff * diff;
    }
    d.grad_bound = grad_bound;
    std::vector<double> sig;
    double lam_acc = 0;
    int n_benign = 0;
    for (int id : selected) {
      if (ledger.banned(id)) continue;
      ++n_benign;
      lam_acc += attr_of[id].lambda;
      sig.push_back(sigma_cnt[id] ? sigma_sum[id] / sigma_cnt[id] : 0.0);
    }
    d.lambda_bar = n_benign ? lam_acc / n_benign : 0.0;
    d.bound = convergence_bound(cfg.training.l2_reg, d.grad_bound, d.r0,
                                d.lambda_bar, sig, std::max(n_benign, 1),
                                psize, T);
  }
  return out;
}

RunSummary run_discrimination_rule(const ScenarioConfig& cfg, Rule rule) {
  ScenarioConfig c = cfg;
  c.rule = rule;
  return run_scenario(c);
}

RunSummary run_self_recovery(const ScenarioConfig& cfg, int defense_start) {
  ScenarioConfig c = cfg;
  c.defense.enabled = true;
  c.defense.start_round = defense_start;
  return run_scenario(c);
}

RunSummary run_adaptive_gamma(const ScenarioConfig& cfg) {
  const RunSummary first = run_scenario(cfg);
  ScenarioConfig c = cfg;
  for (const auto& [id, precision] : first.alarm_precision)
    c.clients[id].gamma = std::clamp(precision, 0.05, 1.0);
  return run_scenario(c);
}

namespace {

const char* case_name(DetectCase c) {
  switch (c) {
    case DetectCase::kAllSilent: return "all_silent";
    case DetectCase::kTrustSilent: return "trust_silent";
    case DetectCase::kTrustAlarmers: return "trust_alarmers";
    case DetectCase::kFilterAlarmers: return "filter_alarmers";
  }
  return "all_silent";
}

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::kBenign: return "benign";
    case Verdict::kMalicious: return "malicious";
    case Verdict::kFalseAlarm: return "false_alarm";
    case Verdict::kIgnored: return "ignored";
  }
  return "ignored";
}

ordered_json record_json(const PlanRecord& r) {
  return ordered_json{{"pool", r.pool},
                      {"active", r.active},
                      {"conversion", r.conversion},
                      {"t_max", r.t_max},
                      {"feasible", r.feasible},
                      {"rounds", r.rounds},
                      {"reward", r.reward},
                      {"cost", r.feasible ? r.cost : -1.0},
                      {"convex", r.convex}};
}

ordered_json plan_json(const PlanBundle& b) {
  ordered_json cands = ordered_json::array();
  for (const ClientAttributes& a : b.candidates)
    cands.push_back(ordered_json{{"id", a.id},
                                 {"alpha", a.alpha},
                                 {"nu", a.nu},
                                 {"epsilon", a.epsilon},
                                 {"gamma", a.gamma},
                                 {"cost", a.cost},
                                 {"latency", a.latency},
                                 {"lambda", a.lambda},
                                 {"lambda_estimated", a.lambda_estimated}});
  ordered_json recs = ordered_json::array();
  for (const PlanRecord& r : b.plan.records) recs.push_back(record_json(r));
  return ordered_json{{"theta", b.theta},
                      {"candidates", cands},
                      {"rejected", b.rejected},
                      {"records", recs},
                      {"best", record_json(b.plan.best)}};
}

ordered_json round_json(const RoundReport& r) {
  ordered_json parts = ordered_json::array();
  for (const Participant& p : r.participants)
    parts.push_back(ordered_json{
        {"id", p.id},
        {"alarm", p.alarm},
        {"local_acc", p.local_acc},
        {"global_acc", p.global_acc},
        {"batch", p.batch},
        {"sigma", p.sigma},
        {"reward_share", p.reward_share},
        {"malicious", p.malicious},
        {"verdict", p.has_verdict ? verdict_name(p.verdict) : "none"}});
  return ordered_json{{"round", r.round},
                      {"sim_time", r.sim_time},
                      {"defense", r.defense_active},
                      {"case", case_name(r.kase)},
                      {"base", r.base_previous ? "previous" : "current"},
                      {"pool", r.pool},
                      {"rejoined", r.rejoined},
                      {"aggregated", r.aggregated},
                      {"banned_after", r.banned_after},
                      {"ma", r.ma},
                      {"mr", r.mr},
                      {"confidence", r.confidence},
                      {"false_alarm_rate", r.false_alarm_rate},
                      {"malicious_verdicts", r.malicious_verdicts},
                      {"cost", r.cost_so_far},
                      {"participants", parts}};
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw IoError("cannot write " + p.string());
  out << text;
  if (!out) throw IoError("failed writing " + p.string());
}

}  // namespace

void emit_outputs(const RunSummary& s, const std::string& out_dir,
                  bool dump_shards) {
  if (s.rounds.empty())
    throw ProtocolError("emit_outputs: refusing to write an empty run");
  namespace fs = std::filesystem;
  const fs::path dir(out_dir);
  fs::create_directories(dir);

  ordered_json precision = ordered_json::object();
  for (const auto& [id, p] : s.alarm_precision)
    precision[std::to_string(id)] = p;
  ordered_json summary;
  summary["config"] = ordered_json::parse(dump_scenario(s.cfg));
  summary["plan"] = plan_json(s.plan);
  summary["malicious"] = s.malicious;
  summary["result"] =
      ordered_json{{"rounds_executed", s.rounds.size()},
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
  summary["audit"] = ordered_json{{"auc_threshold", s.auc_threshold},
                                  {"auc_logistic", s.auc_logistic}};
  summary["diagnostics"] =
      ordered_json{{"computed", s.diagnostics.computed},
                   {"r0", s.diagnostics.r0},
                   {"empirical_dist_sq", s.diagnostics.empirical_dist_sq},
                   {"bound", s.diagnostics.bound},
                   {"grad_bound", s.diagnostics.grad_bound},
                   {"lambda_bar", s.diagnostics.lambda_bar}};
  write_file(dir / "summary.json", summary.dump(2) + "\n");

  std::string lines;
  for (const RoundReport& r : s.rounds) lines += round_json(r).dump() + "\n";
  write_file(dir / "rounds.jsonl", lines);

  std::string csv = "round,ma,mr,confidence,cost\n";
  for (const RoundReport& r : s.rounds) {
    csv += std::to_string(r.round) + "," + fmt_double(r.ma) + "," +
           fmt_double(r.mr) + "," + fmt_double(r.confidence) + "," +
           fmt_double(r.cost_so_far) + "\n";
  }
  write_file(dir / "metrics.csv", csv);

  ordered_json model{{"dim", s.final_model.dim},
                     {"classes", s.final_model.classes},
                     {"w", s.final_model.w}};
  write_file(dir / "model.json", model.dump() + "\n");

  if (dump_shards) {
    // Shards are a pure function of the config; regenerate and export.
    Dataset ds = make_dataset(s.cfg.data, s.cfg.num_clients(), s.cfg.seed);
    const ClientShards shards =
        shard_dataset(ds, s.cfg.data, s.cfg.num_clients(), s.cfg.seed);
    dump_shards_csv(ds, shards, (dir / "shards.csv").string());
  }
}

void audit_run_dir(const std::string& run_dir, const std::string& audit_dir) {
  namespace fs = std::filesystem;
  const fs::path dir(run_dir);
  std::ifstream sum_in(dir / "summary.json");
  if (!sum_in)
    throw IoError("audit: cannot open " + (dir / "summary.json").string());
  ordered_json summary;
  try {
    sum_in >> summary;
  } catch (const json::parse_error& e) {
    throw IoError(std::string("audit: summary.json unreadable: ") + e.what());
  }
  if (!summary.contains("config") || !summary.contains("plan"))
    throw IoError("audit: summary.json misses config/plan sections");
  const ScenarioConfig cfg = parse_scenario(summary["config"].dump());

  std::ifstream mod_in(dir / "model.json");
  if (!mod_in)
    throw IoError("audit: cannot open " + (dir / "model.json").string());
  json model_j;
  try {
    mod_in >> model_j;
  } catch (const json::parse_error& e) {
    throw IoError(std::string("audit: model.json unreadable: ") + e.what());
  }
  Model m = zero_model(model_j.at("dim").get<int>(),
                       model_j.at("classes").get<int>());
  m.w = model_j.at("w").get<std::vector<double>>();
  if (static_cast<int>(m.w.size()) != m.size())
    throw IoError("audit: model.json has the wrong parameter count");

  // Reconstruct the run's data exactly, including the adversary's relabeling.
  Dataset ds = make_dataset(cfg.data, cfg.num_clients(), cfg.seed);
  const ClientShards shards =
      shard_dataset(ds, cfg.data, cfg.num_clients(), cfg.seed);
  const std::vector<int> malicious =
      summary.at("malicious").get<std::vector<int>>();
  for (int id : malicious)
    poison_labels(cfg.attack, ds, shards.per_client[id].train);
  const std::vector<int> selected =
      summary.at("plan").at("best").at("active").get<std::vector<int>>();

  std::vector<int> member_pool = union_train(shards, selected);
  std::vector<int> non_pool = shards.server_holdout;
  Rng rng(cfg.seed, stream::kAuditSample);
  auto draw = [&](std::vector<int>& pool, int n) {
    for (std::size_t i = pool.size(); i > 1; --i)
      std::swap(pool[i - 1], pool[rng.uniform_u64(i)]);
    pool.resize(n);
    std::sort(pool.begin(), pool.end());
  };
  const int n = static_cast<int>(
      std::min({member_pool.size(), non_pool.size(), std::size_t{400}}));
  draw(member_pool, n);
  draw(non_pool, n);

  const RocCurve thr = mia_threshold(m, ds, member_pool, non_pool);
  const RocCurve lr = mia_logistic(m, ds, member_pool, non_pool, cfg.seed);

  fs::create_directories(audit_dir);
  auto roc_csv = [](const RocCurve& roc) {
    std::string out = "fpr,tpr\n";
    for (const auto& [x, y] : roc.points)
      out += fmt_double(x) + "," + fmt_double(y) + "\n";
    return out;
  };
  write_file(fs::path(audit_dir) / "roc_threshold.csv", roc_csv(thr));
  write_file(fs::path(audit_dir) / "roc_logistic.csv", roc_csv(lr));
  ordered_json aj{{"auc_threshold", thr.auc},
                  {"auc_logistic", lr.auc},
                  {"members", n},
                  {"non_members", n}};
  write_file(fs::path(audit_dir) / "auc_summary.json", aj.dump(2) + "\n");
}

std::vector<SweepRow> sweep_noise(const ScenarioConfig& cfg,
                                  const std::vector<double>& multipliers,
                                  int seeds_per_value) {
  std::vector<SweepRow> rows;
  for (double mult : multipliers) {
    for (int s = 0; s < seeds_per_value; ++s) {
      ScenarioConfig c = cfg;
      c.dp.enabled = true;
      c.dp.noise_multiplier = mult;
      c.seed = cfg.seed + static_cast<std::uint64_t>(s);
      c.report.diagnostics = false;  // keep sweeps cheap
      const RunSummary r = run_scenario(c);
      rows.push_back({mult, c.seed, r.auc_threshold, r.auc_logistic,
                      r.final_ma});
    }
  }
  return rows;
}

void write_sweep_csv(const std::vector<SweepRow>& rows,
                     const std::string& path) {
  std::string csv = "multiplier,seed,auc_threshold,auc_logistic,final_ma\n";
  for (const SweepRow& r : rows) {
    csv += fmt_double(r.multiplier) + "," + std::to_string(r.seed) + "," +
           fmt_double(r.auc_threshold) + "," + fmt_double(r.auc_logistic) +
           "," + fmt_double(r.final_ma) + "\n";
  }
  write_file(std::filesystem::path(path), csv);
}

}  // namespace cosifl
