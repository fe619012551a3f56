#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "proftree/dataset.hpp"
#include "proftree/rng.hpp"

namespace proftree {

/// Two-way split rule. Numeric/ordered rules send `value <= cutoff` left;
/// categorical rules send codes flagged in `left_levels` left. Level codes
/// unknown to the rule (unseen at training time) go right.
struct SplitRule {
  std::int32_t column = -1;
  ColumnKind kind = ColumnKind::numeric;
  double cutoff = 0.0;
  std::vector<std::uint8_t> left_levels;   // categorical: mask over level codes
  std::vector<std::uint8_t> unseen_levels; // filled by rebind(); scoring reports hits
};

struct TreeNode {
  std::unique_ptr<TreeNode> left, right;  // both set (internal) or both null (leaf)
  SplitRule rule;                         // internal nodes only
  std::int64_t samples = 0;
  std::int64_t churners = 0;
  double score = 0.0;                     // leaf churn fraction p-hat

  bool is_leaf() const { return left == nullptr; }
};

/// Binary classification tree: M leaves, M-1 internal split nodes. The tree
/// keeps a snapshot of the schema it was built against so it can be
/// serialized and re-bound to other datasets by column name.
class Tree {
 public:
  Tree() = default;
  explicit Tree(std::vector<ColumnSchema> schema);  // single unfitted leaf

  Tree(const Tree& other);
  Tree& operator=(const Tree& other);
  Tree(Tree&&) noexcept = default;
  Tree& operator=(Tree&&) noexcept = default;

  TreeNode& root() { return *root_; }
  const TreeNode& root() const { return *root_; }
  bool empty() const { return root_ == nullptr; }

  const std::vector<ColumnSchema>& schema() const { return schema_; }

  std::int32_t leaf_count() const;
  std::int32_t internal_count() const { return leaf_count() - 1; }
  std::int32_t depth() const;  // single leaf has depth 0

  /// Pre-order node pointers; stable enumeration used for uniform node picks.
  std::vector<TreeNode*> nodes();
  std::vector<const TreeNode*> nodes() const;

  bool fitted() const { return fitted_; }
  void set_fitted(bool f) { fitted_ = f; }

 private:
  std::unique_ptr<TreeNode> root_;
  std::vector<ColumnSchema> schema_;
  bool fitted_ = false;
};

struct TreeConstraints {
  std::int32_t min_internal = 20;
  std::int32_t min_leaf = 7;
  std::int32_t max_depth = 9;
  std::int32_t max_leaves = 512;  // 2^max_depth for the defaults

  static TreeConstraints with_depth(std::int32_t depth) {
    TreeConstraints c;
    c.max_depth = depth;
    c.max_leaves = depth >= 30 ? 1 << 30 : (1 << depth);
    return c;
  }
};

struct ConstraintViolation {
  enum class Type { empty_leaf, leaf_size, internal_size, depth, leaf_count };
  Type type;
  std::string detail;
};

/// Routes every row of `data` through the tree, filling per-node sample and
/// churner counts and leaf scores. Throws DataError if some leaf receives no
/// rows (the structure is invalid for this data), SchemaError on bad column
/// references.
void fit_leaves(Tree& tree, const Dataset& data);

/// fit_leaves without the throw on empty leaves; returns false instead.
bool try_fit_leaves(Tree& tree, const Dataset& data);

struct PredictionReport {
  std::int64_t rows = 0;
  std::int64_t unseen_level_events = 0;
};

double score_row(const Tree& tree, const Dataset& data, std::int64_t row,
                 PredictionReport* report = nullptr);
std::vector<double> score_all(const Tree& tree, const Dataset& data,
                              PredictionReport* report = nullptr);

/// Threshold rule: score <= t predicts 0, score > t predicts 1.
int classify_row(const Tree& tree, const Dataset& data, std::int64_t row, double threshold);

std::vector<ConstraintViolation> check_constraints(const Tree& tree, const TreeConstraints& c);

/// Re-targets a fitted tree onto another dataset's schema, matching columns
/// by name and categorical levels by label. Levels absent from the training
/// data route right and are flagged so scoring can count them.
Tree rebind(const Tree& tree, const Dataset& target);

enum class TreeFormat { json, dot, text };

std::string export_tree(const Tree& tree, TreeFormat format);
Tree tree_from_json(const std::string& text);
Tree load_tree(const std::string& path);
void save_tree(const Tree& tree, const std::string& path);

/// Enumerable split space of a dataset: midpoints between adjacent distinct
/// values for numeric/ordered columns, level counts for categoricals.
struct SplitDomains {
  struct Column {
    std::vector<double> midpoints;      // numeric / ordered
    std::int32_t declared_levels = 0;   // categorical
    std::int32_t observed_levels = 0;
    bool usable = false;                // admits at least one valid rule
  };
  std::vector<Column> columns;
};

SplitDomains build_split_domains(const Dataset& data);

/// Uniform random rule for `column` (midpoint uniform for numeric/ordered,
/// per-level fair coin with empty/full rejection for categorical). Empty if
/// the column admits no rule or the subset draw keeps failing.
std::optional<SplitRule> random_rule(const Dataset& data, const SplitDomains& domains,
                                     std::int32_t column, Rng& rng);

/// Uniform pick among columns that admit at least one rule; -1 if none.
std::int32_t random_usable_column(const SplitDomains& domains, Rng& rng);

}  // namespace proftree
