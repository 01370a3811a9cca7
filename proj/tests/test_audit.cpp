#include <cmath>
#include <vector>

#include "cosifl/audit.hpp"
#include "cosifl/dataset.hpp"
#include "cosifl/rng.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace cosifl;

TEST_CASE("roc: separated, anti-separated and degenerate score piles") {
  // Perfect separation.
  const RocCurve top = roc_from_scores({1.0, 0.9}, {0.1, 0.2});
  CHECK(top.auc == doctest::Approx(1.0));
  CHECK(top.points.front() == std::pair<double, double>{0.0, 0.0});
  CHECK(top.points.back() == std::pair<double, double>{1.0, 1.0});

  // Mixed pair ordering, worked by hand: of the four member/non-member
  // pairs, three rank the member higher -> AUC 0.75.
  CHECK(roc_from_scores({0.9, 0.4}, {0.6, 0.2}).auc == doctest::Approx(0.75));

  // All scores identical: one tie group, chance level.
  CHECK(roc_from_scores({0.5, 0.5}, {0.5}).auc == doctest::Approx(0.5));

  CHECK_THROWS_AS((void)roc_from_scores({}, {0.1}), ProtocolError);
  CHECK_THROWS_AS((void)roc_from_scores({0.1}, {}), ProtocolError);
}

TEST_CASE("roc: negating scores mirrors the curve exactly") {
  Rng rng(31, stream::kAuditSample);
  std::vector<double> m(40), n(55);
  for (auto& v : m) v = std::round(rng.uniform01() * 20) / 20.0;  // force ties
  for (auto& v : n) v = std::round(rng.uniform01() * 20) / 20.0;
  std::vector<double> mn = m, nn = n;
  for (auto& v : mn) v = -v;
  for (auto& v : nn) v = -v;
  CHECK(roc_from_scores(m, n).auc ==
        doctest::Approx(1.0 - roc_from_scores(mn, nn).auc).epsilon(1e-12));
}

TEST_CASE("roc curve is monotone from (0,0) to (1,1)") {
  Rng rng(32, stream::kAuditSample);
  std::vector<double> m(30), n(30);
  for (auto& v : m) v = rng.normal(0.6, 0.2);
  for (auto& v : n) v = rng.normal(0.4, 0.2);
  const RocCurve roc = roc_from_scores(m, n);
  CHECK(roc.auc > 0.5);  // members genuinely score higher on average
  for (std::size_t i = 1; i < roc.points.size(); ++i) {
    CHECK(roc.points[i].first >= roc.points[i - 1].first);
    CHECK(roc.points[i].second >= roc.points[i - 1].second);
  }
  CHECK(roc.points.front() == std::pair<double, double>{0.0, 0.0});
  CHECK(roc.points.back() == std::pair<double, double>{1.0, 1.0});
}

TEST_CASE("threshold attack scores by top softmax confidence") {
  // Model with a single strong feature: confidence grows with |x0|. Members
  // get large |x0|, non-members small, so the attack must separate them.
  Dataset ds;
  ds.dim = 1;
  ds.classes = 2;
  ds.n = 8;
  ds.x = {4.0, 3.5, 3.8, 4.2, 0.1, 0.2, -0.1, 0.05};
  ds.y = {0, 0, 0, 0, 0, 0, 0, 0};
  Model m = zero_model(1, 2);
  m.w[0] = 2.0;   // class 0 likes positive x0
  m.w[2] = -2.0;  // class 1 dislikes it
  const RocCurve roc = mia_threshold(m, ds, {0, 1, 2, 3}, {4, 5, 6, 7});
  CHECK(roc.auc == doctest::Approx(1.0));

  // And the same scores pushed through the generic ROC give the same curve.
  std::vector<double> ms, ns;
  std::vector<double> p(2);
  for (int i : {0, 1, 2, 3}) {
    softmax_probs(m, ds.row(i), p.data());
    ms.push_back(std::max(p[0], p[1]));
  }
  for (int i : {4, 5, 6, 7}) {
    softmax_probs(m, ds.row(i), p.data());
    ns.push_back(std::max(p[0], p[1]));
  }
  CHECK(roc_from_scores(ms, ns).auc == doctest::Approx(roc.auc));
}

TEST_CASE("learned attack picks up a clean confidence split") {
  // Members sit deep inside class 0 (high confidence, low loss), non-members
  // hug the decision boundary. The three derived features separate the pools,
  // so the logistic head should reach a near-perfect eval AUC.
  Dataset ds;
  ds.dim = 1;
  ds.classes = 2;
  ds.n = 16;
  ds.x.resize(16);
  ds.y.assign(16, 0);
  std::vector<int> members, rest;
  for (int i = 0; i < 8; ++i) {
    ds.x[i] = 4.0 + 0.1 * i;
    members.push_back(i);
  }
  for (int i = 8; i < 16; ++i) {
    ds.x[i] = 0.02 * (i - 8);
    rest.push_back(i);
  }
  Model m = zero_model(1, 2);
  m.w[0] = 2.0;
  m.w[2] = -2.0;

  const RocCurve roc = mia_logistic(m, ds, members, rest, 99);
  CHECK(roc.auc >= 0.9);
  const RocCurve again = mia_logistic(m, ds, members, rest, 99);
  CHECK(roc.auc == doctest::Approx(again.auc).epsilon(1e-15));
  const RocCurve reshuffled = mia_logistic(m, ds, members, rest, 100);
  CHECK(reshuffled.auc >= 0.9);  // split choice must not carry the result

  CHECK_THROWS_AS((void)mia_logistic(m, ds, {0, 1}, {2, 3, 4, 5}, 1),
                  ProtocolError);
}

TEST_CASE("analytic convergence bound matches hand arithmetic") {
  // exp(-1)*4 + 2*0.5*sqrt(4)/2 + (3^2 + (10/5^2)*(1^2+2^2)) / (2^2*8)
  //   = 1.4715177646857693 + 1 + 11/32 = 2.8152677646857693
  CHECK(convergence_bound(2.0, 3.0, 4.0, 0.5, {1.0, 2.0}, 5, 10, 8) ==
        doctest::Approx(2.8152677646857693).epsilon(1e-12));
  CHECK_THROWS_AS((void)convergence_bound(0.0, 1, 1, 0, {}, 1, 1, 1),
                  ProtocolError);
  CHECK_THROWS_AS((void)convergence_bound(1.0, 1, 1, 0, {}, 0, 1, 1),
                  ProtocolError);
  CHECK_THROWS_AS((void)convergence_bound(1.0, 1, 1, 0, {}, 1, 1, 0),
                  ProtocolError);
}
