#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "helpers.hpp"
#include "oracles.hpp"
#include "proftree/errors.hpp"
#include "proftree/synth.hpp"
#include "proftree/tree.hpp"

using namespace proftree;
using testutil::TempDir;

namespace {

// root split on column `col` at `cutoff`, two leaves
Tree stump(const Dataset& data, std::int32_t col, double cutoff) {
  Tree t(data.schema());
  auto& root = t.root();
  root.rule.column = col;
  root.rule.kind = ColumnKind::numeric;
  root.rule.cutoff = cutoff;
  root.left = std::make_unique<TreeNode>();
  root.right = std::make_unique<TreeNode>();
  return t;
}

// right-leaning chain of `splits` cuts over column 0 at 0.5, 1.5, ...
Tree chain(const Dataset& data, int splits) {
  Tree t(data.schema());
  TreeNode* node = &t.root();
  for (int i = 0; i < splits; ++i) {
    node->rule.column = 0;
    node->rule.kind = ColumnKind::numeric;
    node->rule.cutoff = i + 0.5;
    node->left = std::make_unique<TreeNode>();
    node->right = std::make_unique<TreeNode>();
    node = node->right.get();
  }
  return t;
}

}  // namespace

TEST_CASE("fit_leaves on a single leaf reproduces the base churn rate") {
  std::vector<double> x;
  std::vector<std::uint8_t> y;
  for (int i = 0; i < 889; ++i) {
    x.push_back(i);
    y.push_back(i < 277 ? 1 : 0);
  }
  const auto data = testutil::one_column(x, y);
  Tree t(data.schema());
  fit_leaves(t, data);
  CHECK(t.root().score == doctest::Approx(277.0 / 889.0));
  CHECK(t.root().score == doctest::Approx(0.3116).epsilon(1e-3));
  CHECK(t.root().samples == 889);
}

TEST_CASE("fit_leaves gives pure leaves score one") {
  const auto data = testutil::one_column({0, 1, 2, 3}, {1, 1, 0, 0});
  Tree t = stump(data, 0, 1.5);
  fit_leaves(t, data);
  CHECK(t.root().left->score == 1.0);
  CHECK(t.root().right->score == 0.0);
}

TEST_CASE("fit_leaves matches a group-by oracle on a stump") {
  Rng rng = make_stream(77, 1);
  std::vector<double> x;
  std::vector<std::uint8_t> y;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 400; ++i) {
    x.push_back(u(rng));
    y.push_back(u(rng) < (x.back() < 0.4 ? 0.7 : 0.2) ? 1 : 0);
  }
  const auto data = testutil::one_column(x, y);
  Tree t = stump(data, 0, 0.4);
  fit_leaves(t, data);

  std::vector<std::int64_t> keys;
  for (double v : x) keys.push_back(v <= 0.4 ? 0 : 1);
  const auto means = oracle::group_means(keys, y);
  CHECK(t.root().left->score == doctest::Approx(means.at(0)));
  CHECK(t.root().right->score == doctest::Approx(means.at(1)));
}

TEST_CASE("fit_leaves flags empty leaves") {
  const auto data = testutil::one_column({1, 2, 3}, {1, 0, 1});
  Tree t = stump(data, 0, 10.0);  // everything goes left
  CHECK_FALSE(try_fit_leaves(t, data));
  CHECK_THROWS_AS(fit_leaves(t, data), DataError);
}

TEST_CASE("score routes the boundary value left and is constant on single leaves") {
  const auto data = testutil::one_column({0.4, 0.5}, {1, 0});
  Tree t = stump(data, 0, 0.4);
  fit_leaves(t, data);
  CHECK(score_row(t, data, 0) == t.root().left->score);   // 0.4 <= 0.4
  CHECK(score_row(t, data, 1) == t.root().right->score);

  Tree leaf(data.schema());
  fit_leaves(leaf, data);
  CHECK(score_row(leaf, data, 0) == score_row(leaf, data, 1));
}

TEST_CASE("planted oracle tree scores the generator's Bayes probabilities") {
  const auto synth = synth_churn(500, 0.3, 2, 0, 4);
  const double spread = 0.75 * 0.3;
  const double expected[4] = {0.3 - spread, 0.3 - spread / 3.0, 0.3 + spread / 3.0,
                              0.3 + spread};
  for (std::int64_t r = 0; r < synth.data.n_rows(); ++r) {
    const int cell = (synth.data.numeric_value(0, r) <= 0.5 ? 0 : 2) +
                     (synth.data.numeric_value(1, r) <= 0.5 ? 0 : 1);
    CHECK(score_row(synth.oracle, synth.data, r) == doctest::Approx(expected[cell]));
  }
}

TEST_CASE("classify applies the score <= t rule") {
  const auto data = testutil::one_column({0.0, 1.0}, {1, 0});
  Tree t = stump(data, 0, 0.5);
  fit_leaves(t, data);  // left leaf score 1, right leaf score 0
  CHECK(classify_row(t, data, 0, 0.4) == 1);   // score 1 > 0.4
  CHECK(classify_row(t, data, 0, 1.0) == 0);   // t = 1 always predicts 0
  CHECK(classify_row(t, data, 1, 0.0) == 0);   // score 0 <= 0

  // boundary: score == t goes to class 0
  Tree leaf(data.schema());
  fit_leaves(leaf, data);  // score 0.5 everywhere
  CHECK(classify_row(leaf, data, 0, 0.5) == 0);
  CHECK(classify_row(leaf, data, 0, 0.49) == 1);
}

TEST_CASE("check_constraints reports sizes, depth and leaf counts") {
  std::vector<double> x;
  std::vector<std::uint8_t> y;
  for (int i = 0; i < 40; ++i) {
    x.push_back(i % 4);
    y.push_back(i % 2);
  }
  const auto data = testutil::one_column(x, y);

  Tree leaf(data.schema());
  fit_leaves(leaf, data);
  CHECK(check_constraints(leaf, TreeConstraints{}).empty());

  Tree deep = chain(data, 2);
  fit_leaves(deep, data);
  TreeConstraints c;
  c.min_internal = 1;
  c.min_leaf = 1;
  c.max_depth = 1;
  c.max_leaves = 2;
  const auto violations = check_constraints(deep, c);
  REQUIRE_FALSE(violations.empty());
  bool saw_depth = false, saw_leaves = false;
  for (const auto& v : violations) {
    saw_depth |= v.type == ConstraintViolation::Type::depth;
    saw_leaves |= v.type == ConstraintViolation::Type::leaf_count;
  }
  CHECK(saw_depth);
  CHECK(saw_leaves);
}

TEST_CASE("check_constraints flags a 6-row leaf under min_leaf 7") {
  std::vector<double> x;
  std::vector<std::uint8_t> y;
  for (int i = 0; i < 26; ++i) {
    x.push_back(i < 6 ? 0.0 : 1.0);
    y.push_back(i % 2);
  }
  const auto data = testutil::one_column(x, y);
  Tree t = stump(data, 0, 0.5);
  fit_leaves(t, data);
  TreeConstraints c;
  c.min_internal = 20;
  c.min_leaf = 7;
  const auto violations = check_constraints(t, c);
  REQUIRE(violations.size() == 1);
  CHECK(violations[0].type == ConstraintViolation::Type::leaf_size);
}

TEST_CASE("tree structure invariants: internal count and routing partition") {
  const auto synth = synth_churn(300, 0.3, 3, 1, 12);
  Tree t = synth.oracle;
  fit_leaves(t, synth.data);
  CHECK(t.internal_count() == t.leaf_count() - 1);

  // every row lands in exactly one leaf: leaf samples sum to N and the root
  // count equals N
  std::int64_t leaf_sum = 0;
  for (const auto* n : t.nodes()) {
    if (n->is_leaf()) leaf_sum += n->samples;
  }
  CHECK(leaf_sum == synth.data.n_rows());
  CHECK(t.root().samples == synth.data.n_rows());

  // scores stay within the leaf score range
  double lo = 1.0, hi = 0.0;
  for (const auto* n : t.nodes()) {
    if (n->is_leaf()) {
      lo = std::min(lo, n->score);
      hi = std::max(hi, n->score);
    }
  }
  for (std::int64_t r = 0; r < synth.data.n_rows(); ++r) {
    const double s = score_row(t, synth.data, r);
    CHECK(s >= lo);
    CHECK(s <= hi);
  }
}

TEST_CASE("json export round-trips scores exactly") {
  const auto synth = synth_churn(400, 0.25, 2, 2, 5);
  Tree t = synth.oracle;
  fit_leaves(t, synth.data);
  const auto text = export_tree(t, TreeFormat::json);
  const Tree back = tree_from_json(text);
  for (std::int64_t r = 0; r < synth.data.n_rows(); ++r) {
    CHECK(score_row(back, synth.data, r) == score_row(t, synth.data, r));
  }
  // serializing again gives the identical document
  CHECK(export_tree(back, TreeFormat::json) == text);
}

TEST_CASE("dot export of a single leaf has one node and no edges") {
  const auto data = testutil::one_column({1, 2}, {1, 0});
  Tree t(data.schema());
  fit_leaves(t, data);
  const auto dot = export_tree(t, TreeFormat::dot);
  CHECK(dot.find("->") == std::string::npos);
  CHECK(dot.find("n0") != std::string::npos);
}

TEST_CASE("text export of a depth-3 tree has at most 8 leaf lines") {
  const auto synth = synth_churn(600, 0.3, 3, 0, 77);
  Tree t = synth.oracle;  // depth 2
  fit_leaves(t, synth.data);
  const auto text = export_tree(t, TreeFormat::text);
  std::size_t leaves = 0, pos = 0;
  while ((pos = text.find("leaf", pos)) != std::string::npos) {
    ++leaves;
    pos += 4;
  }
  CHECK(leaves == 4);
  CHECK(leaves <= 8);
}

TEST_CASE("rebind routes unseen categorical levels right and counts them") {
  TempDir tmp;
  testutil::spit(tmp.file("train.csv"), "color,churn\nred,yes\nblue,no\nred,yes\nblue,no\n");
  const auto train = load_csv(tmp.file("train.csv"), "churn");
  Tree t(train.schema());
  auto& root = t.root();
  root.rule.column = 0;
  root.rule.kind = ColumnKind::categorical;
  root.rule.left_levels = {1, 0};  // red goes left
  root.left = std::make_unique<TreeNode>();
  root.right = std::make_unique<TreeNode>();
  fit_leaves(t, train);
  CHECK(t.root().left->score == 1.0);

  testutil::spit(tmp.file("test.csv"), "color,churn\nred,yes\ngreen,no\nblue,no\n");
  const auto test = load_csv(tmp.file("test.csv"), "churn");
  const Tree bound = rebind(t, test);
  PredictionReport rep;
  const auto scores = score_all(bound, test, &rep);
  CHECK(scores[0] == 1.0);
  CHECK(scores[1] == 0.0);  // unseen "green" went right
  CHECK(rep.unseen_level_events == 1);

  testutil::spit(tmp.file("other.csv"), "shape,churn\nround,yes\nflat,no\n");
  const auto other = load_csv(tmp.file("other.csv"), "churn");
  CHECK_THROWS_AS(rebind(t, other), SchemaError);
}

TEST_CASE("split domains enumerate midpoints and skip constant columns") {
  const auto data = testutil::two_columns({1, 1, 1, 1}, {1, 2, 4, 8}, {1, 0, 1, 0});
  const auto domains = build_split_domains(data);
  CHECK_FALSE(domains.columns[0].usable);
  CHECK(domains.columns[1].usable);
  CHECK(domains.columns[1].midpoints == std::vector<double>{1.5, 3.0, 6.0});

  Rng rng = make_stream(1, 2);
  for (int i = 0; i < 50; ++i) {
    CHECK(random_usable_column(domains, rng) == 1);
  }
  const auto rule = random_rule(data, domains, 1, rng);
  REQUIRE(rule.has_value());
  CHECK(std::count(domains.columns[1].midpoints.begin(), domains.columns[1].midpoints.end(),
                   rule->cutoff) == 1);
}
