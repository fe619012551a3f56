#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "helpers.hpp"
#include "proftree/errors.hpp"
#include "proftree/evolve.hpp"
#include "proftree/greedy.hpp"
#include "proftree/synth.hpp"

using namespace proftree;

namespace {

double node_gini(std::int64_t churn, std::int64_t total) {
  const double p = static_cast<double>(churn) / static_cast<double>(total);
  return 2.0 * p * (1.0 - p);
}

// exhaustive root-split search over every column and every valid rule
double best_root_gain(const Dataset& data, const TreeConstraints& c) {
  const auto n = data.n_rows();
  std::int64_t churn = data.churner_count();
  double best = -1.0;
  const auto domains = build_split_domains(data);
  for (std::int32_t col = 0; col < data.n_cols(); ++col) {
    if (data.column(col).kind == ColumnKind::categorical) {
      const auto k = data.column(col).levels.size();
      for (std::uint64_t mask = 1; mask + 1 < (std::uint64_t{1} << k); ++mask) {
        std::int64_t lc = 0, lt = 0;
        for (std::int64_t r = 0; r < n; ++r) {
          if (mask & (std::uint64_t{1} << data.code(col, r))) {
            ++lt;
            lc += data.labels()[static_cast<std::size_t>(r)];
          }
        }
        if (lt < c.min_leaf || n - lt < c.min_leaf) continue;
        const double wl = double(lt) / double(n);
        const double wr = double(n - lt) / double(n);
        const double gain = node_gini(churn, n) -
                            (wl * node_gini(lc, lt) + wr * node_gini(churn - lc, n - lt));
        best = std::max(best, gain);
      }
    } else {
      for (double cut : domains.columns[static_cast<std::size_t>(col)].midpoints) {
        std::int64_t lc = 0, lt = 0;
        for (std::int64_t r = 0; r < n; ++r) {
          if (data.numeric_value(col, r) <= cut) {
            ++lt;
            lc += data.labels()[static_cast<std::size_t>(r)];
          }
        }
        if (lt < c.min_leaf || n - lt < c.min_leaf) continue;
        const double wl = double(lt) / double(n);
        const double wr = double(n - lt) / double(n);
        const double gain = node_gini(churn, n) -
                            (wl * node_gini(lc, lt) + wr * node_gini(churn - lc, n - lt));
        best = std::max(best, gain);
      }
    }
  }
  return best;
}

double root_gain_of(const Tree& t, const Dataset& data) {
  const auto& root = t.root();
  if (root.is_leaf()) return 0.0;
  const double wl = double(root.left->samples) / double(root.samples);
  const double wr = double(root.right->samples) / double(root.samples);
  return node_gini(root.churners, root.samples) -
         (wl * node_gini(root.left->churners, root.left->samples) +
          wr * node_gini(root.right->churners, root.right->samples));
}

}  // namespace

TEST_CASE("fit_greedy collapses pure data to a single leaf") {
  const auto data = testutil::one_column({1, 2, 3, 4, 5, 6, 7, 8, 9, 10},
                                         {0, 0, 0, 0, 0, 0, 0, 0, 0, 0});
  const Tree t = fit_greedy(data, TreeConstraints{2, 1, 5, 32});
  CHECK(t.leaf_count() == 1);
}

TEST_CASE("fit_greedy finds a perfectly separating cutoff") {
  std::vector<double> x;
  std::vector<std::uint8_t> y;
  for (int i = 0; i < 30; ++i) {
    x.push_back(i);
    y.push_back(i < 12 ? 1 : 0);
  }
  const auto data = testutil::one_column(x, y);
  const Tree t = fit_greedy(data, TreeConstraints{4, 2, 6, 64});
  CHECK(t.leaf_count() == 2);
  CHECK(t.root().rule.cutoff == doctest::Approx(11.5));
  CHECK(t.root().left->score == 1.0);
  CHECK(t.root().right->score == 0.0);
}

TEST_CASE("fit_greedy recovers the planted split variables") {
  int hits = 0;
  for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
    const auto synth = synth_churn(2000, 0.3, 2, 2, seed);
    const Tree t = fit_greedy(synth.data, TreeConstraints{20, 7, 2, 4});
    bool planted_only = !t.root().is_leaf();
    for (const auto* n : t.nodes()) {
      if (!n->is_leaf() && n->rule.column > 1) planted_only = false;
    }
    hits += planted_only;
  }
  CHECK(hits >= 4);
}

TEST_CASE("greedy trees always satisfy the constraints") {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const auto synth = synth_churn(300 + 100 * static_cast<int>(seed % 3), 0.25, 2, 2, seed);
    const TreeConstraints c{15, 5, 4, 16};
    const Tree t = fit_greedy(synth.data, c);
    CHECK(check_constraints(t, c).empty());
  }
}

TEST_CASE("the chosen root split matches an exhaustive enumeration") {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const auto synth = synth_churn(150, 0.35, 2, 2, 100 + seed);
    const TreeConstraints c{10, 4, 1, 2};
    const Tree t = fit_greedy(synth.data, c);
    if (t.root().is_leaf()) continue;
    const double expected = best_root_gain(synth.data, c);
    CHECK(root_gain_of(t, synth.data) == doctest::Approx(expected).epsilon(1e-9));
  }
}

TEST_CASE("prune_greedy identities and the crushing-lambda collapse") {
  const auto synth = synth_churn(600, 0.3, 2, 0, 61);
  ProfitParams p;

  Tree leaf(synth.data.schema());
  fit_leaves(leaf, synth.data);
  CHECK(prune_greedy(leaf, synth.data, 0.1, p).leaf_count() == 1);

  const Tree grown = fit_greedy(synth.data, TreeConstraints{20, 7, 4, 16});
  REQUIRE(grown.leaf_count() > 1);
  const Tree heavy = prune_greedy(grown, synth.data, 1000.0, p);
  CHECK(heavy.leaf_count() == 1);
}

TEST_CASE("prune_greedy keeps strictly beneficial splits at lambda zero") {
  const auto synth = synth_churn(800, 0.3, 2, 0, 62);
  ProfitParams p;
  Tree oracle_tree = synth.oracle;
  fit_leaves(oracle_tree, synth.data);
  // the planted splits carry real profit signal, so nothing should go
  const Tree kept = prune_greedy(oracle_tree, synth.data, 0.0, p);
  CHECK(kept.leaf_count() == oracle_tree.leaf_count());
}

TEST_CASE("prune_greedy never lowers the fitness and is idempotent") {
  ProfitParams p;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto synth = synth_churn(400, 0.3, 3, 1, 70 + seed);
    const Tree grown = fit_greedy(synth.data, TreeConstraints{15, 5, 5, 32});
    const double before = fitness(grown, p, 0.2);
    const Tree pruned = prune_greedy(grown, synth.data, 0.2, p);
    const double after = fitness(pruned, p, 0.2);
    CHECK(after >= before - 1e-12);
    const Tree again = prune_greedy(pruned, synth.data, 0.2, p);
    CHECK(export_tree(again, TreeFormat::json) == export_tree(pruned, TreeFormat::json));
  }
}

TEST_CASE("greedy output interoperates with export and evaluation") {
  const auto synth = synth_churn(500, 0.3, 2, 1, 63);
  const Tree t = fit_greedy(synth.data, TreeConstraints{20, 7, 3, 8});
  const auto text = export_tree(t, TreeFormat::json);
  const Tree back = tree_from_json(text);
  for (std::int64_t r = 0; r < std::min<std::int64_t>(synth.data.n_rows(), 100); ++r) {
    CHECK(score_row(back, synth.data, r) == score_row(t, synth.data, r));
  }
}
