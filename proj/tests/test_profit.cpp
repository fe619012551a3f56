#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "helpers.hpp"
#include "oracles.hpp"
#include "proftree/errors.hpp"
#include "proftree/profit.hpp"

using namespace proftree;

namespace {

// strictly increasing remap of the distinct scores onto random targets;
// preserves ties exactly, which analytic maps cannot guarantee in floating
// point
std::vector<double> monotone_remap(const std::vector<double>& scores, Rng& rng) {
  std::vector<double> distinct(scores);
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> targets;
  for (std::size_t i = 0; i < distinct.size(); ++i) targets.push_back(u(rng));
  std::sort(targets.begin(), targets.end());
  // enforce strictness
  for (std::size_t i = 1; i < targets.size(); ++i) {
    if (targets[i] <= targets[i - 1]) {
      targets[i] = std::nextafter(targets[i - 1], 2.0);
    }
  }
  std::vector<double> out;
  out.reserve(scores.size());
  for (double v : scores) {
    const auto idx = std::lower_bound(distinct.begin(), distinct.end(), v) - distinct.begin();
    out.push_back(std::min(targets[static_cast<std::size_t>(idx)], 1.0));
  }
  return out;
}

}  // namespace

TEST_CASE("profit params validate their constraints") {
  ProfitParams p;
  CHECK_NOTHROW(p.validate());
  CHECK(p.delta() == doctest::Approx(0.05));
  CHECK(p.phi() == doctest::Approx(0.005));
  CHECK(p.gamma() == doctest::Approx(0.3));
  ProfitParams bad = p;
  bad.offer_cost = 300.0;  // d > CLV
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = p;
  bad.alpha = 1.0;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("churn_profit anchors: target nobody, target all, perfect split") {
  const auto s = testutil::perfect_sample(30, 70);
  ProfitParams p;
  CHECK(churn_profit(s, 1.0, p, 0.3) == 0.0);
  // target all: 0.3*200*0.28 - 0.7*200*0.055 = 16.8 - 7.7
  CHECK(churn_profit(s, 0.05, p, 0.3) == doctest::Approx(9.1).epsilon(1e-12));
  // perfect separation: 0.3*200*(0.3*0.95 - 0.005)
  CHECK(churn_profit(s, 0.5, p, 0.3) == doctest::Approx(16.8).epsilon(1e-12));
}

TEST_CASE("general_profit with the churn substitution equals churn_profit everywhere") {
  Rng rng = make_stream(30, 0);
  ProfitParams p;
  for (int trial = 0; trial < 20; ++trial) {
    const auto raw = testutil::random_raw(rng, 70, trial % 2 == 0);
    if (!testutil::both_classes(raw)) continue;
    const auto s = testutil::sample(raw.scores, raw.labels);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double gamma = u(rng);
    const CostBenefitMatrix cb{p.clv * (gamma * (1.0 - p.delta()) - p.phi()), 0.0, 0.0,
                               p.clv * (p.delta() + p.phi())};
    for (double t : {0.0, 0.15, 0.4, 0.65, 0.9, 1.0}) {
      CHECK(general_profit(s, t, cb) == churn_profit(s, t, p, gamma));
    }
  }
}

TEST_CASE("roc_hull shape invariants") {
  Rng rng = make_stream(31, 0);
  for (int trial = 0; trial < 30; ++trial) {
    const auto raw = testutil::random_raw(rng, 100, trial % 2 == 0);
    if (!testutil::both_classes(raw)) continue;
    const auto hull = roc_hull(testutil::sample(raw.scores, raw.labels));
    REQUIRE(hull.vertices.size() >= 2);
    CHECK(hull.vertices.front().x == 0.0);
    CHECK(hull.vertices.front().y == 0.0);
    CHECK(hull.vertices.back().x == 1.0);
    CHECK(hull.vertices.back().y == 1.0);
    double prev_slope = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j + 1 < hull.vertices.size(); ++j) {
      const double dx = hull.vertices[j + 1].x - hull.vertices[j].x;
      const double dy = hull.vertices[j + 1].y - hull.vertices[j].y;
      CHECK(dx >= 0.0);
      CHECK(dy >= 0.0);
      CHECK(dx + dy > 0.0);
      const double slope = dx == 0.0 ? std::numeric_limits<double>::infinity() : dy / dx;
      CHECK(slope < prev_slope);
      prev_slope = slope;
    }
  }
}

TEST_CASE("mpc anchors") {
  ProfitParams p;
  SUBCASE("perfect classifier") {
    const auto s = testutil::perfect_sample(30, 70);
    const auto m = mpc(s, p);
    CHECK(m.mpc == doctest::Approx(16.8).epsilon(1e-12));
    CHECK(m.eta == doctest::Approx(0.3).epsilon(1e-12));
  }
  SUBCASE("constant scorer targets everybody") {
    const auto s = testutil::sample(std::vector<double>(100, 0.5),
                                    [] {
                                      std::vector<std::uint8_t> l(100, 0);
                                      for (int i = 0; i < 30; ++i) l[i] = 1;
                                      return l;
                                    }());
    const auto m = mpc(s, p);
    CHECK(m.mpc == doctest::Approx(9.1).epsilon(1e-12));
    CHECK(m.eta == 1.0);
  }
  SUBCASE("no churners means nothing is worth targeting") {
    const auto s = testutil::sample({0.4, 0.6, 0.2}, {0, 0, 0});
    const auto m = mpc(s, p);
    CHECK(m.mpc == 0.0);
    CHECK(m.eta == 0.0);
  }
  SUBCASE("all churners is rejected") {
    CHECK_THROWS_AS(mpc(testutil::sample({0.4, 0.6}, {1, 1}), p), DataError);
  }
}

TEST_CASE("mpc dominates the profit at every threshold") {
  Rng rng = make_stream(32, 0);
  ProfitParams p;
  for (int trial = 0; trial < 30; ++trial) {
    const auto raw = testutil::random_raw(rng, 80, trial % 2 == 0);
    if (!testutil::both_classes(raw)) continue;
    const auto s = testutil::sample(raw.scores, raw.labels);
    const auto m = mpc(s, p);
    CHECK(m.mpc >= 0.0);
    for (double t : raw.scores) {
      CHECK(m.mpc >= churn_profit(s, t, p, p.gamma()) - 1e-12);
    }
    CHECK(m.mpc >= churn_profit(s, 0.0, p, p.gamma()) - 1e-12);
    // the reported threshold reproduces the reported profit; only the
    // target-everybody vertex of a sample with zero-valued scores has no
    // admissible threshold
    if (s.groups().back().score > 0.0) {
      CHECK(churn_profit(s, m.t_opt, p, p.gamma()) == doctest::Approx(m.mpc).epsilon(1e-12));
    }
  }
}

TEST_CASE("empc anchors: zero churners and the perfect classifier") {
  ProfitParams p;
  CHECK(empc(testutil::sample({0.1, 0.2}, {0, 0}), p).empc == 0.0);
  CHECK_THROWS_AS(empc(testutil::sample({0.1, 0.2}, {1, 1}), p), DataError);

  const auto s = testutil::perfect_sample(300, 700);
  const auto e = empc(s, p);
  CHECK(e.empc == doctest::Approx(16.8).epsilon(0.01 / 16.8));
  CHECK(e.eta == doctest::Approx(0.3).epsilon(1e-4));
  // quadrature agreement at the anchor
  std::vector<double> scores(300, 0.9);
  std::vector<std::uint8_t> labels(300, 1);
  scores.insert(scores.end(), 700, 0.1);
  labels.insert(labels.end(), 700, 0);
  CHECK(e.empc == doctest::Approx(oracle::empc_quadrature(scores, labels, {})).epsilon(1e-9));
}

TEST_CASE("empc hull decomposition matches the quadrature oracle") {
  Rng rng = make_stream(33, 0);
  ProfitParams p;
  oracle::ProfitEconomics econ;
  int done = 0;
  for (int trial = 0; done < 50; ++trial) {
    REQUIRE(trial < 200);
    const auto raw = testutil::random_raw(rng, 50, trial % 2 == 0);
    if (!testutil::both_classes(raw)) continue;
    ++done;
    const auto s = testutil::sample(raw.scores, raw.labels);
    const auto e = empc(s, p);
    CHECK(e.empc ==
          doctest::Approx(oracle::empc_quadrature(raw.scores, raw.labels, econ)).epsilon(1e-6));
    CHECK(e.eta ==
          doctest::Approx(oracle::eta_empc_quadrature(raw.scores, raw.labels, econ))
              .epsilon(1e-6));
  }
}

TEST_CASE("rank invariance under strictly increasing score transforms") {
  Rng rng = make_stream(34, 0);
  ProfitParams p;
  for (int trial = 0; trial < 5; ++trial) {
    const auto raw = testutil::random_raw(rng, 60, trial % 2 == 0);
    if (!testutil::both_classes(raw)) continue;
    const auto s = testutil::sample(raw.scores, raw.labels);
    const auto e0 = empc(s, p);
    const auto m0 = mpc(s, p);
    const double a0 = auc(s);
    const auto eta0 = eta_measures(s, e0.eta);
    for (int k = 0; k < 20; ++k) {
      const auto s2 = testutil::sample(monotone_remap(raw.scores, rng), raw.labels);
      const auto e2 = empc(s2, p);
      const auto m2 = mpc(s2, p);
      CHECK(std::abs(e2.empc - e0.empc) <= 1e-12);
      CHECK(std::abs(e2.eta - e0.eta) <= 1e-12);
      CHECK(std::abs(m2.mpc - m0.mpc) <= 1e-12);
      CHECK(std::abs(m2.eta - m0.eta) <= 1e-12);
      CHECK(std::abs(auc(s2) - a0) <= 1e-12);
      const auto eta2 = eta_measures(s2, e2.eta);
      CHECK(std::abs(eta2.precision - eta0.precision) <= 1e-12);
      CHECK(std::abs(eta2.recall - eta0.recall) <= 1e-12);
      CHECK(std::abs(eta2.f1 - eta0.f1) <= 1e-12);
    }
  }
}

TEST_CASE("empc converges to mpc as the gamma prior concentrates") {
  Rng rng = make_stream(35, 0);
  const auto raw = testutil::random_raw(rng, 120, true);
  REQUIRE(testutil::both_classes(raw));
  const auto s = testutil::sample(raw.scores, raw.labels);
  double last_gap = std::numeric_limits<double>::infinity();
  for (double scale : {1.0, 100.0, 100000.0}) {
    ProfitParams p;
    p.alpha = 6.0 * scale;
    p.beta = 14.0 * scale;
    p.gamma_point = 0.3;  // the prior mean at every scale
    const double gap = std::abs(empc(s, p).empc - mpc(s, p).mpc);
    CHECK(gap <= last_gap + 1e-9);
    last_gap = gap;
  }
  CHECK(last_gap <= 0.01);
}

TEST_CASE("eta_measures anchors") {
  ProfitParams p;
  SUBCASE("perfect classifier lists exactly the churners") {
    const auto s = testutil::perfect_sample(300, 700);
    const auto m = eta_measures(s, p);
    CHECK(m.precision == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(m.recall == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(m.f1 == doctest::Approx(1.0).epsilon(1e-3));
  }
  SUBCASE("zero fraction gives zero measures") {
    const auto s = testutil::perfect_sample(5, 5);
    const auto m = eta_measures(s, 0.0);
    CHECK(m.precision == 0.0);
    CHECK(m.recall == 0.0);
    CHECK(m.f1 == 0.0);
  }
  SUBCASE("the reported tree row of the harmonic mean") {
    CHECK(harmonic_f1(0.520, 0.949) == doctest::Approx(0.672).epsilon(0.001 / 0.672));
  }
  SUBCASE("f1 never exceeds twice the smaller component") {
    Rng rng = make_stream(36, 0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
      const double pr = u(rng);
      const double rc = u(rng);
      CHECK(harmonic_f1(pr, rc) <= 2.0 * std::min(pr, rc) + 1e-12);
    }
  }
}

TEST_CASE("eta_measures breaks score ties by original row order") {
  // two tied scores, list size 1: the earlier row (a churner) wins
  const auto s = testutil::sample({0.6, 0.6, 0.1, 0.1}, {1, 0, 0, 0});
  const auto m = eta_measures(s, 0.25);
  CHECK(m.precision == 1.0);
  CHECK(m.recall == 1.0);
}

TEST_CASE("evaluate_sample bundles the individual measures") {
  Rng rng = make_stream(37, 0);
  const auto raw = testutil::random_raw(rng, 90, true);
  REQUIRE(testutil::both_classes(raw));
  const auto s = testutil::sample(raw.scores, raw.labels);
  ProfitParams p;
  const auto r = evaluate_sample(s, p);
  CHECK(r.empc == empc(s, p).empc);
  CHECK(r.mpc == mpc(s, p).mpc);
  CHECK(r.auc == auc(s));
  CHECK(r.mer == mer(s));
  CHECK(r.eta_f1 == harmonic_f1(r.eta_precision, r.eta_recall));
  CHECK(r.empc >= 0.0);
  CHECK(r.mpc >= 0.0);
  CHECK(r.eta_empc >= 0.0);
  CHECK(r.eta_empc <= 1.0);
}

TEST_CASE("profit_curve rows agree with churn_profit at their thresholds") {
  Rng rng = make_stream(38, 0);
  const auto raw = testutil::random_raw(rng, 40, true);
  REQUIRE(testutil::both_classes(raw));
  const auto s = testutil::sample(raw.scores, raw.labels);
  ProfitParams p;
  const auto curve = profit_curve(s, p, p.gamma());
  REQUIRE(curve.size() == static_cast<std::size_t>(s.group_count()) + 1);
  CHECK(curve.front().targeted_fraction == 0.0);
  CHECK(curve.back().targeted_fraction == 1.0);
  for (std::size_t k = 0; k + 1 < curve.size(); ++k) {
    CHECK(curve[k].profit ==
          doctest::Approx(churn_profit(s, curve[k].threshold, p, p.gamma())).epsilon(1e-12));
  }
}
