#include "proftree/synth.hpp"

#include <cmath>
#include <memory>
#include <string>

#include "proftree/errors.hpp"
#include "proftree/rng.hpp"

namespace proftree {

namespace {

constexpr std::int32_t kSynthLevels = 4;

}  // namespace

SynthResult synth_churn(std::int64_t n, double churn_rate, std::int32_t p_numeric,
                        std::int32_t p_categorical, std::uint64_t seed) {
  if (n < 20) throw DataError("synth_churn: need n >= 20");
  if (!(churn_rate > 0.0 && churn_rate < 1.0)) throw DataError("synth_churn: churn_rate in (0,1)");
  if (p_numeric < 0 || p_categorical < 0 || p_numeric + p_categorical < 2) {
    throw DataError("synth_churn: need at least 2 feature columns");
  }

  std::vector<ColumnSchema> schema;
  for (std::int32_t c = 0; c < p_numeric; ++c) {
    schema.push_back({"num_" + std::to_string(c + 1), ColumnKind::numeric, {}});
  }
  for (std::int32_t c = 0; c < p_categorical; ++c) {
    schema.push_back(
        {"cat_" + std::to_string(c + 1), ColumnKind::categorical, {"a", "b", "c", "d"}});
  }

  Rng rng = make_stream(seed, 0x5E17ULL);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::int32_t> level(0, kSynthLevels - 1);
  std::vector<std::vector<double>> numeric_cols;
  std::vector<std::vector<std::int32_t>> coded_cols;
  for (std::int32_t c = 0; c < p_numeric; ++c) {
    std::vector<double> col(static_cast<std::size_t>(n));
    for (auto& v : col) v = unit(rng);
    numeric_cols.push_back(std::move(col));
  }
  for (std::int32_t c = 0; c < p_categorical; ++c) {
    std::vector<std::int32_t> col(static_cast<std::size_t>(n));
    for (auto& v : col) v = level(rng);
    coded_cols.push_back(std::move(col));
  }

  // planted columns are the first two schema positions; the cutoff sits at
  // the median of each column's distribution so all four cells carry mass
  auto goes_left = [&](std::int32_t col, std::int64_t row) {
    if (col < p_numeric) {
      return numeric_cols[static_cast<std::size_t>(col)][static_cast<std::size_t>(row)] <= 0.5;
    }
    return coded_cols[static_cast<std::size_t>(col - p_numeric)][static_cast<std::size_t>(row)] <
           kSynthLevels / 2;
  };

  const double spread = 0.75 * std::min(churn_rate, 1.0 - churn_rate);
  const double cell_prob[4] = {churn_rate - spread, churn_rate - spread / 3.0,
                               churn_rate + spread / 3.0, churn_rate + spread};

  std::vector<std::uint8_t> labels(static_cast<std::size_t>(n));
  std::int64_t cell_count[4] = {0, 0, 0, 0};
  std::int64_t cell_churn[4] = {0, 0, 0, 0};
  for (std::int64_t r = 0; r < n; ++r) {
    const int cell = (goes_left(0, r) ? 0 : 2) + (goes_left(1, r) ? 0 : 1);
    const bool churned = unit(rng) < cell_prob[cell];
    labels[static_cast<std::size_t>(r)] = churned ? 1 : 0;
    cell_count[cell]++;
    cell_churn[cell] += churned;
  }

  Dataset data(schema, std::move(numeric_cols), std::move(coded_cols), std::move(labels),
               "churn");

  auto planted_rule = [&](std::int32_t col) {
    SplitRule rule;
    rule.column = col;
    if (data.column(col).kind == ColumnKind::categorical) {
      rule.kind = ColumnKind::categorical;
      rule.left_levels.assign(kSynthLevels, 0);
      rule.left_levels[0] = rule.left_levels[1] = 1;
    } else {
      rule.kind = ColumnKind::numeric;
      rule.cutoff = 0.5;
    }
    return rule;
  };

  // depth-2 oracle tree whose leaf scores are the Bayes cell probabilities
  Tree oracle(data.schema());
  auto& root = oracle.root();
  root.rule = planted_rule(0);
  root.samples = n;
  for (int side = 0; side < 2; ++side) {
    auto child = std::make_unique<TreeNode>();
    child->rule = planted_rule(1);
    child->samples = cell_count[side * 2] + cell_count[side * 2 + 1];
    child->churners = cell_churn[side * 2] + cell_churn[side * 2 + 1];
    for (int sub = 0; sub < 2; ++sub) {
      const int cell = side * 2 + sub;
      auto leaf = std::make_unique<TreeNode>();
      leaf->samples = cell_count[cell];
      leaf->churners = cell_churn[cell];
      leaf->score = cell_prob[cell];
      (sub == 0 ? child->left : child->right) = std::move(leaf);
    }
    (side == 0 ? root.left : root.right) = std::move(child);
  }
  root.churners = root.left->churners + root.right->churners;
  oracle.set_fitted(true);

  return {std::move(data), std::move(oracle)};
}

}  // namespace proftree
