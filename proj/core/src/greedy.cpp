#include "proftree/greedy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "proftree/errors.hpp"
#include "proftree/evolve.hpp"

namespace proftree {

namespace {

double gini(std::int64_t churn, std::int64_t total) {
  if (total == 0) return 0.0;
  const double p = static_cast<double>(churn) / static_cast<double>(total);
  return 2.0 * p * (1.0 - p);
}

// child-weighted impurity decrease within the node
double gain_of(std::int64_t node_churn, std::int64_t node_total, std::int64_t left_churn,
               std::int64_t left_total) {
  const std::int64_t right_churn = node_churn - left_churn;
  const std::int64_t right_total = node_total - left_total;
  const double wl = static_cast<double>(left_total) / static_cast<double>(node_total);
  const double wr = static_cast<double>(right_total) / static_cast<double>(node_total);
  return gini(node_churn, node_total) -
         (wl * gini(left_churn, left_total) + wr * gini(right_churn, right_total));
}

struct Candidate {
  double gain = -1.0;
  SplitRule rule;
  // subset code for deterministic categorical tie-breaks
  std::uint64_t order_code = 0;

  bool beats(const Candidate& other) const {
    if (gain > other.gain + 1e-12) return true;
    if (gain < other.gain - 1e-12) return false;
    if (rule.column != other.rule.column) return rule.column < other.rule.column;
    if (rule.kind != ColumnKind::categorical) return rule.cutoff < other.rule.cutoff;
    return order_code < other.order_code;
  }
};

class GreedyBuilder {
 public:
  GreedyBuilder(const Dataset& data, const TreeConstraints& c, double min_gain)
      : data_(data), constraints_(c), min_gain_(min_gain) {}

  Tree build() {
    Tree tree(data_.schema());
    std::vector<std::int32_t> rows(static_cast<std::size_t>(data_.n_rows()));
    std::iota(rows.begin(), rows.end(), 0);
    leaves_ = 1;
    grow(tree.root(), rows, 0);
    fit_leaves(tree, data_);
    return tree;
  }

 private:
  void grow(TreeNode& node, std::vector<std::int32_t>& rows, std::int32_t depth) {
    const auto total = static_cast<std::int64_t>(rows.size());
    std::int64_t churn = 0;
    for (auto r : rows) churn += data_.labels()[static_cast<std::size_t>(r)];
    node.samples = total;
    node.churners = churn;
    node.score = total > 0 ? static_cast<double>(churn) / static_cast<double>(total) : 0.0;

    if (depth >= constraints_.max_depth || leaves_ >= constraints_.max_leaves ||
        total < constraints_.min_internal || total < 2 * std::int64_t{constraints_.min_leaf} ||
        churn == 0 || churn == total) {
      return;
    }
    Candidate best;
    for (std::int32_t c = 0; c < data_.n_cols(); ++c) {
      scan_column(c, rows, churn, total, best);
    }
    if (best.gain <= min_gain_) return;

    node.rule = best.rule;
    std::vector<std::int32_t> left_rows, right_rows;
    for (auto r : rows) {
      (goes_left(best.rule, r) ? left_rows : right_rows).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();
    node.left = std::make_unique<TreeNode>();
    node.right = std::make_unique<TreeNode>();
    ++leaves_;
    grow(*node.left, left_rows, depth + 1);
    grow(*node.right, right_rows, depth + 1);
  }

  bool goes_left(const SplitRule& rule, std::int32_t row) const {
    if (rule.kind == ColumnKind::categorical) {
      return rule.left_levels[static_cast<std::size_t>(data_.code(rule.column, row))];
    }
    return data_.numeric_value(rule.column, row) <= rule.cutoff;
  }

  void scan_column(std::int32_t col, const std::vector<std::int32_t>& rows, std::int64_t churn,
                   std::int64_t total, Candidate& best) const {
    if (data_.column(col).kind == ColumnKind::categorical) {
      scan_categorical(col, rows, churn, total, best);
    } else {
      scan_numeric(col, rows, churn, total, best);
    }
  }

  void scan_numeric(std::int32_t col, const std::vector<std::int32_t>& rows, std::int64_t churn,
                    std::int64_t total, Candidate& best) const {
    std::vector<std::pair<double, std::uint8_t>> vals;
    vals.reserve(rows.size());
    for (auto r : rows) {
      vals.emplace_back(data_.numeric_value(col, r), data_.labels()[static_cast<std::size_t>(r)]);
    }
    std::sort(vals.begin(), vals.end());
    std::int64_t left_churn = 0;
    std::int64_t left_total = 0;
    for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
      left_churn += vals[i].second;
      ++left_total;
      if (vals[i].first == vals[i + 1].first) continue;  // not a boundary
      if (left_total < constraints_.min_leaf || total - left_total < constraints_.min_leaf) {
        continue;
      }
      const double cutoff = vals[i].first + 0.5 * (vals[i + 1].first - vals[i].first);
      if (!(cutoff > vals[i].first && cutoff < vals[i + 1].first)) continue;
      Candidate cand;
      cand.gain = gain_of(churn, total, left_churn, left_total);
      cand.rule.column = col;
      cand.rule.kind = ColumnKind::numeric;
      cand.rule.cutoff = cutoff;
      if (cand.beats(best)) best = cand;
    }
  }

  void scan_categorical(std::int32_t col, const std::vector<std::int32_t>& rows,
                        std::int64_t churn, std::int64_t total, Candidate& best) const {
    const auto k = data_.column(col).levels.size();
    std::vector<std::int64_t> level_total(k, 0), level_churn(k, 0);
    for (auto r : rows) {
      const auto code = static_cast<std::size_t>(data_.code(col, r));
      level_total[code]++;
      level_churn[code] += data_.labels()[static_cast<std::size_t>(r)];
    }
    std::vector<std::size_t> present;
    for (std::size_t l = 0; l < k; ++l) {
      if (level_total[l] > 0) present.push_back(l);
    }
    if (present.size() < 2) return;

    auto try_subset = [&](const std::vector<std::uint8_t>& picked) {
      std::int64_t left_churn = 0, left_total = 0;
      std::vector<std::uint8_t> mask(k, 0);
      std::uint64_t order_code = 0;
      for (std::size_t i = 0; i < present.size(); ++i) {
        if (picked[i]) {
          mask[present[i]] = 1;
          left_churn += level_churn[present[i]];
          left_total += level_total[present[i]];
          if (present[i] < 64) order_code |= std::uint64_t{1} << present[i];
        }
      }
      if (left_total < constraints_.min_leaf || total - left_total < constraints_.min_leaf) {
        return;
      }
      Candidate cand;
      cand.gain = gain_of(churn, total, left_churn, left_total);
      cand.rule.column = col;
      cand.rule.kind = ColumnKind::categorical;
      cand.rule.left_levels = std::move(mask);
      cand.order_code = order_code;
      if (cand.beats(best)) best = cand;
    };

    std::vector<std::uint8_t> picked(present.size(), 0);
    if (k <= 12) {
      // exhaustive up to the left/right symmetry: the first present level
      // stays on the left side
      const std::size_t m = present.size();
      for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << (m - 1)); ++bits) {
        picked[0] = 1;
        for (std::size_t i = 1; i < m; ++i) {
          picked[i] = (bits >> (i - 1)) & 1 ? 1 : 0;
        }
        try_subset(picked);
      }
    } else {
      // levels ordered by churn rate; prefix subsets are optimal for a
      // two-class Gini criterion
      std::vector<std::size_t> order(present.size());
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double ra = static_cast<double>(level_churn[present[a]]) /
                          static_cast<double>(level_total[present[a]]);
        const double rb = static_cast<double>(level_churn[present[b]]) /
                          static_cast<double>(level_total[present[b]]);
        if (ra != rb) return ra < rb;
        return present[a] < present[b];
      });
      for (std::size_t i = 0; i + 1 < order.size(); ++i) {
        picked[order[i]] = 1;
        try_subset(picked);
      }
    }
  }

  const Dataset& data_;
  const TreeConstraints& constraints_;
  double min_gain_;
  std::int32_t leaves_ = 0;
};

}  // namespace

Tree fit_greedy(const Dataset& data, const TreeConstraints& c, double min_gain) {
  if (data.n_rows() < c.min_leaf) throw DataError("fit_greedy: fewer rows than min_leaf");
  GreedyBuilder builder(data, c, min_gain);
  return builder.build();
}

Tree prune_greedy(const Tree& tree, const Dataset& data, double lambda, const ProfitParams& p) {
  Tree current = tree;
  if (!current.fitted()) fit_leaves(current, data);
  double current_fitness = fitness(current, p, lambda);

  bool changed = true;
  while (changed) {
    changed = false;
    // bottom-up pass: deepest internal nodes first
    auto nodes = current.nodes();
    for (auto it = nodes.rbegin(); it != nodes.rend(); ++it) {
      TreeNode* n = *it;
      if (n->is_leaf()) continue;
      Tree candidate = current;
      // locate the matching node in the copy by pre-order position
      auto cur_nodes = current.nodes();
      auto cand_nodes = candidate.nodes();
      const auto pos = std::find(cur_nodes.begin(), cur_nodes.end(), n) - cur_nodes.begin();
      TreeNode* cn = cand_nodes[static_cast<std::size_t>(pos)];
      cn->left.reset();
      cn->right.reset();
      cn->rule = SplitRule{};
      cn->score = cn->samples > 0
                      ? static_cast<double>(cn->churners) / static_cast<double>(cn->samples)
                      : 0.0;
      const double cand_fitness = fitness(candidate, p, lambda);
      if (cand_fitness >= current_fitness) {
        current = std::move(candidate);
        current_fitness = cand_fitness;
        changed = true;
        break;  // node list is stale; restart the pass
      }
    }
  }
  return current;
}

}  // namespace proftree
