#include "proftree/tree.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "proftree/csv.hpp"
#include "proftree/errors.hpp"

namespace proftree {

namespace {

using json = nlohmann::json;

std::unique_ptr<TreeNode> clone_node(const TreeNode& n) {
  auto out = std::make_unique<TreeNode>();
  out->rule = n.rule;
  out->samples = n.samples;
  out->churners = n.churners;
  out->score = n.score;
  if (!n.is_leaf()) {
    out->left = clone_node(*n.left);
    out->right = clone_node(*n.right);
  }
  return out;
}

std::int32_t count_leaves(const TreeNode& n) {
  if (n.is_leaf()) return 1;
  return count_leaves(*n.left) + count_leaves(*n.right);
}

std::int32_t node_depth(const TreeNode& n) {
  if (n.is_leaf()) return 0;
  return 1 + std::max(node_depth(*n.left), node_depth(*n.right));
}

template <typename Node, typename Out>
void collect_nodes(Node& n, Out& out) {
  out.push_back(&n);
  if (!n.is_leaf()) {
    collect_nodes(*n.left, out);
    collect_nodes(*n.right, out);
  }
}

// routing decision; true = left
bool goes_left(const SplitRule& rule, const Dataset& data, std::int64_t row,
               PredictionReport* report) {
  if (rule.kind == ColumnKind::categorical) {
    const auto code = static_cast<std::size_t>(data.code(rule.column, row));
    if (report && code < rule.unseen_levels.size() && rule.unseen_levels[code]) {
      report->unseen_level_events++;
    }
    return code < rule.left_levels.size() && rule.left_levels[code];
  }
  return data.numeric_value(rule.column, row) <= rule.cutoff;
}

void validate_rule(const SplitRule& rule, const Dataset& data) {
  if (rule.column < 0 || rule.column >= data.n_cols()) {
    throw SchemaError("split references column index " + std::to_string(rule.column));
  }
  const auto& col = data.column(rule.column);
  const bool rule_coded = rule.kind == ColumnKind::categorical;
  const bool col_coded = col.kind == ColumnKind::categorical;
  if (rule_coded != col_coded) {
    throw SchemaError("split kind does not match column " + col.name);
  }
  if (rule_coded && rule.left_levels.size() > col.levels.size()) {
    throw SchemaError("split references levels beyond column " + col.name);
  }
}

}  // namespace

Tree::Tree(std::vector<ColumnSchema> schema)
    : root_(std::make_unique<TreeNode>()), schema_(std::move(schema)) {}

Tree::Tree(const Tree& other)
    : root_(other.root_ ? clone_node(*other.root_) : nullptr),
      schema_(other.schema_),
      fitted_(other.fitted_) {}

Tree& Tree::operator=(const Tree& other) {
  if (this != &other) {
    root_ = other.root_ ? clone_node(*other.root_) : nullptr;
    schema_ = other.schema_;
    fitted_ = other.fitted_;
  }
  return *this;
}

std::int32_t Tree::leaf_count() const { return root_ ? count_leaves(*root_) : 0; }

std::int32_t Tree::depth() const { return root_ ? node_depth(*root_) : 0; }

std::vector<TreeNode*> Tree::nodes() {
  std::vector<TreeNode*> out;
  if (root_) collect_nodes(*root_, out);
  return out;
}

std::vector<const TreeNode*> Tree::nodes() const {
  std::vector<const TreeNode*> out;
  if (root_) collect_nodes<const TreeNode>(*root_, out);
  return out;
}

// ---- fitting -------------------------------------------------------------

bool try_fit_leaves(Tree& tree, const Dataset& data) {
  if (tree.empty()) throw Error("fit_leaves: empty tree");
  for (auto* n : tree.nodes()) {
    if (!n->is_leaf()) validate_rule(n->rule, data);
    n->samples = 0;
    n->churners = 0;
  }
  const auto& labels = data.labels();
  for (std::int64_t r = 0; r < data.n_rows(); ++r) {
    TreeNode* n = &tree.root();
    const std::int64_t y = labels[static_cast<std::size_t>(r)];
    for (;;) {
      n->samples++;
      n->churners += y;
      if (n->is_leaf()) break;
      n = goes_left(n->rule, data, r, nullptr) ? n->left.get() : n->right.get();
    }
  }
  bool ok = true;
  for (auto* n : tree.nodes()) {
    if (!n->is_leaf()) continue;
    if (n->samples == 0) {
      ok = false;
      n->score = 0.0;
    } else {
      n->score = static_cast<double>(n->churners) / static_cast<double>(n->samples);
    }
  }
  tree.set_fitted(ok);
  return ok;
}

void fit_leaves(Tree& tree, const Dataset& data) {
  if (!try_fit_leaves(tree, data)) {
    throw DataError("fit_leaves: a leaf receives no rows; structure invalid for this data");
  }
}

double score_row(const Tree& tree, const Dataset& data, std::int64_t row,
                 PredictionReport* report) {
  if (!tree.fitted()) throw Error("score: tree is not fitted");
  const TreeNode* n = &tree.root();
  while (!n->is_leaf()) {
    n = goes_left(n->rule, data, row, report) ? n->left.get() : n->right.get();
  }
  if (report) report->rows++;
  return n->score;
}

std::vector<double> score_all(const Tree& tree, const Dataset& data, PredictionReport* report) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(data.n_rows()));
  for (std::int64_t r = 0; r < data.n_rows(); ++r) out.push_back(score_row(tree, data, r, report));
  return out;
}

int classify_row(const Tree& tree, const Dataset& data, std::int64_t row, double threshold) {
  return score_row(tree, data, row) <= threshold ? 0 : 1;
}

std::vector<ConstraintViolation> check_constraints(const Tree& tree, const TreeConstraints& c) {
  if (!tree.fitted()) throw Error("check_constraints: tree is not fitted");
  std::vector<ConstraintViolation> out;
  for (const auto* n : tree.nodes()) {
    if (n->is_leaf()) {
      if (n->samples == 0) {
        out.push_back({ConstraintViolation::Type::empty_leaf, "leaf receives no rows"});
      } else if (n->samples < c.min_leaf) {
        out.push_back({ConstraintViolation::Type::leaf_size,
                       "leaf has " + std::to_string(n->samples) + " rows, needs " +
                           std::to_string(c.min_leaf)});
      }
    } else if (n->samples < c.min_internal) {
      out.push_back({ConstraintViolation::Type::internal_size,
                     "internal node has " + std::to_string(n->samples) + " rows, needs " +
                         std::to_string(c.min_internal)});
    }
  }
  if (tree.depth() > c.max_depth) {
    out.push_back({ConstraintViolation::Type::depth,
                   "depth " + std::to_string(tree.depth()) + " exceeds " +
                       std::to_string(c.max_depth)});
  }
  if (tree.leaf_count() > c.max_leaves) {
    out.push_back({ConstraintViolation::Type::leaf_count,
                   std::to_string(tree.leaf_count()) + " leaves exceed " +
                       std::to_string(c.max_leaves)});
  }
  return out;
}

// ---- rebinding to another schema ------------------------------------------

Tree rebind(const Tree& tree, const Dataset& target) {
  Tree out(target.schema());
  if (tree.empty()) throw Error("rebind: empty tree");
  out.root() = std::move(*clone_node(tree.root()));
  out.set_fitted(tree.fitted());
  const auto& source = tree.schema();
  for (auto* n : out.nodes()) {
    if (n->is_leaf()) continue;
    auto& rule = n->rule;
    if (rule.column < 0 || rule.column >= static_cast<std::int32_t>(source.size())) {
      throw SchemaError("tree rule references a column missing from its own schema");
    }
    const auto& src_col = source[static_cast<std::size_t>(rule.column)];
    const auto tcol = target.find_column(src_col.name);
    if (tcol < 0) throw SchemaError("dataset lacks column " + src_col.name);
    const auto& dst_col = target.column(tcol);
    if (rule.kind == ColumnKind::categorical) {
      if (dst_col.kind != ColumnKind::categorical) {
        throw SchemaError("column " + src_col.name + " is not categorical in the dataset");
      }
      std::unordered_set<std::string_view> left_names, known_names;
      for (std::size_t l = 0; l < src_col.levels.size(); ++l) {
        known_names.insert(src_col.levels[l]);
        if (l < rule.left_levels.size() && rule.left_levels[l]) left_names.insert(src_col.levels[l]);
      }
      std::vector<std::uint8_t> mask(dst_col.levels.size(), 0);
      std::vector<std::uint8_t> unseen(dst_col.levels.size(), 0);
      for (std::size_t l = 0; l < dst_col.levels.size(); ++l) {
        if (left_names.count(dst_col.levels[l])) mask[l] = 1;
        if (!known_names.count(dst_col.levels[l])) unseen[l] = 1;  // routes right
      }
      rule.left_levels = std::move(mask);
      rule.unseen_levels = std::move(unseen);
    } else {
      if (dst_col.kind == ColumnKind::categorical) {
        throw SchemaError("column " + src_col.name + " is categorical in the dataset");
      }
      if (src_col.kind == ColumnKind::ordered || dst_col.kind == ColumnKind::ordered) {
        if (src_col.levels != dst_col.levels) {
          throw SchemaError("ordered column " + src_col.name + " has a different level order");
        }
      }
    }
    rule.column = tcol;
  }
  return out;
}

// ---- serialization --------------------------------------------------------

namespace {

json node_to_json(const TreeNode& n, const std::vector<ColumnSchema>& schema) {
  json j;
  j["samples"] = n.samples;
  j["churners"] = n.churners;
  if (n.is_leaf()) {
    j["score"] = n.score;
    return j;
  }
  const auto& col = schema[static_cast<std::size_t>(n.rule.column)];
  j["column"] = col.name;
  // ordered rules are stored as numeric cutoffs over ranks; the column kind
  // in the header keeps the distinction
  j["kind"] = std::string(to_string(n.rule.kind));
  if (n.rule.kind == ColumnKind::categorical) {
    json lv = json::array();
    for (std::size_t l = 0; l < col.levels.size(); ++l) {
      if (l < n.rule.left_levels.size() && n.rule.left_levels[l]) lv.push_back(col.levels[l]);
    }
    j["left_levels"] = std::move(lv);
  } else {
    j["cutoff"] = n.rule.cutoff;
  }
  j["left"] = node_to_json(*n.left, schema);
  j["right"] = node_to_json(*n.right, schema);
  return j;
}

std::unique_ptr<TreeNode> node_from_json(const json& j, const std::vector<ColumnSchema>& schema) {
  auto n = std::make_unique<TreeNode>();
  n->samples = j.value("samples", std::int64_t{0});
  n->churners = j.value("churners", std::int64_t{0});
  if (!j.contains("column")) {
    n->score = j.at("score").get<double>();
    return n;
  }
  const std::string name = j.at("column").get<std::string>();
  std::int32_t col = -1;
  for (std::size_t c = 0; c < schema.size(); ++c) {
    if (schema[c].name == name) col = static_cast<std::int32_t>(c);
  }
  if (col < 0) throw IoError("tree json: unknown column " + name);
  n->rule.column = col;
  const auto kind = column_kind_from_string(j.at("kind").get<std::string>());
  n->rule.kind = kind == ColumnKind::categorical ? ColumnKind::categorical : ColumnKind::numeric;
  if (kind == ColumnKind::categorical) {
    const auto& levels = schema[static_cast<std::size_t>(col)].levels;
    n->rule.left_levels.assign(levels.size(), 0);
    for (const auto& lv : j.at("left_levels")) {
      const auto name_lv = lv.get<std::string>();
      const auto it = std::find(levels.begin(), levels.end(), name_lv);
      if (it == levels.end()) throw IoError("tree json: unknown level " + name_lv);
      n->rule.left_levels[static_cast<std::size_t>(it - levels.begin())] = 1;
    }
  } else {
    n->rule.cutoff = j.at("cutoff").get<double>();
  }
  n->left = node_from_json(j.at("left"), schema);
  n->right = node_from_json(j.at("right"), schema);
  return n;
}

void render_text(const TreeNode& n, const std::vector<ColumnSchema>& schema, std::string indent,
                 bool last, std::ostringstream& out) {
  out << indent;
  if (!indent.empty()) out << (last ? "`- " : "|- ");
  const std::string child_indent = indent + (indent.empty() ? "" : (last ? "   " : "|  "));
  if (n.is_leaf()) {
    out << "leaf p=" << format_double(n.score) << " n=" << n.samples << "\n";
    return;
  }
  const auto& col = schema[static_cast<std::size_t>(n.rule.column)];
  if (n.rule.kind == ColumnKind::categorical) {
    out << col.name << " in {";
    bool first = true;
    for (std::size_t l = 0; l < col.levels.size(); ++l) {
      if (l < n.rule.left_levels.size() && n.rule.left_levels[l]) {
        if (!first) out << ",";
        out << col.levels[l];
        first = false;
      }
    }
    out << "}";
  } else if (col.kind == ColumnKind::ordered) {
    out << col.name << " <= " << col.levels[static_cast<std::size_t>(
               std::min<double>(std::floor(n.rule.cutoff), double(col.levels.size() - 1)))];
  } else {
    out << col.name << " <= " << format_double(n.rule.cutoff);
  }
  out << "  [n=" << n.samples << "]\n";
  render_text(*n.left, schema, child_indent.empty() ? " " : child_indent, false, out);
  render_text(*n.right, schema, child_indent.empty() ? " " : child_indent, true, out);
}

std::string rule_label(const TreeNode& n, const std::vector<ColumnSchema>& schema, bool left) {
  const auto& col = schema[static_cast<std::size_t>(n.rule.column)];
  std::string lbl = col.name;
  if (n.rule.kind == ColumnKind::categorical) {
    lbl += left ? " in {" : " not in {";
    bool first = true;
    for (std::size_t l = 0; l < col.levels.size(); ++l) {
      if (l < n.rule.left_levels.size() && n.rule.left_levels[l]) {
        if (!first) lbl += ",";
        lbl += col.levels[l];
        first = false;
      }
    }
    lbl += "}";
  } else {
    lbl += left ? " <= " : " > ";
    lbl += format_double(n.rule.cutoff);
  }
  return lbl;
}

void render_dot(const TreeNode& n, const std::vector<ColumnSchema>& schema, int& counter,
                std::ostringstream& out) {
  const int id = counter++;
  if (n.is_leaf()) {
    out << "  n" << id << " [shape=box,label=\"p=" << format_double(n.score)
        << "\\nn=" << n.samples << "\"];\n";
    return;
  }
  const auto& col = schema[static_cast<std::size_t>(n.rule.column)];
  out << "  n" << id << " [label=\"" << col.name << "\"];\n";
  const int left_id = counter;
  render_dot(*n.left, schema, counter, out);
  const int right_id = counter;
  render_dot(*n.right, schema, counter, out);
  out << "  n" << id << " -> n" << left_id << " [label=\"" << rule_label(n, schema, true)
      << "\"];\n";
  out << "  n" << id << " -> n" << right_id << " [label=\"" << rule_label(n, schema, false)
      << "\"];\n";
}

}  // namespace

std::string export_tree(const Tree& tree, TreeFormat format) {
  if (tree.empty()) throw Error("export: empty tree");
  switch (format) {
    case TreeFormat::json: {
      json j;
      j["format"] = "proftree-tree";
      j["version"] = 1;
      json cols = json::array();
      for (const auto& c : tree.schema()) {
        json jc;
        jc["name"] = c.name;
        jc["kind"] = std::string(to_string(c.kind));
        if (!c.levels.empty()) jc["levels"] = c.levels;
        cols.push_back(std::move(jc));
      }
      j["columns"] = std::move(cols);
      j["root"] = node_to_json(tree.root(), tree.schema());
      return j.dump(2) + "\n";
    }
    case TreeFormat::dot: {
      std::ostringstream out;
      out << "digraph tree {\n";
      int counter = 0;
      render_dot(tree.root(), tree.schema(), counter, out);
      out << "}\n";
      return out.str();
    }
    case TreeFormat::text: {
      std::ostringstream out;
      render_text(tree.root(), tree.schema(), "", true, out);
      return out.str();
    }
  }
  throw Error("export: unknown format");
}

Tree tree_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw IoError(std::string("tree json: ") + e.what());
  }
  if (j.value("format", std::string{}) != "proftree-tree") {
    throw IoError("tree json: missing proftree-tree format marker");
  }
  std::vector<ColumnSchema> schema;
  for (const auto& jc : j.at("columns")) {
    ColumnSchema c;
    c.name = jc.at("name").get<std::string>();
    c.kind = column_kind_from_string(jc.at("kind").get<std::string>());
    if (jc.contains("levels")) c.levels = jc.at("levels").get<std::vector<std::string>>();
    schema.push_back(std::move(c));
  }
  Tree out(std::move(schema));
  auto root = node_from_json(j.at("root"), out.schema());
  out.root() = std::move(*root);
  out.set_fitted(true);
  return out;
}

Tree load_tree(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open tree file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return tree_from_json(buf.str());
}

void save_tree(const Tree& tree, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write tree file: " + path);
  out << export_tree(tree, TreeFormat::json);
}

// ---- split domains ---------------------------------------------------------

SplitDomains build_split_domains(const Dataset& data) {
  SplitDomains out;
  out.columns.resize(static_cast<std::size_t>(data.n_cols()));
  for (std::int32_t c = 0; c < data.n_cols(); ++c) {
    auto& dom = out.columns[static_cast<std::size_t>(c)];
    const auto& col = data.column(c);
    if (col.kind == ColumnKind::categorical) {
      dom.declared_levels = static_cast<std::int32_t>(col.levels.size());
      std::unordered_set<std::int32_t> seen;
      for (std::int64_t r = 0; r < data.n_rows(); ++r) seen.insert(data.code(c, r));
      dom.observed_levels = static_cast<std::int32_t>(seen.size());
      dom.usable = dom.observed_levels >= 2;
    } else {
      std::vector<double> vals;
      vals.reserve(static_cast<std::size_t>(data.n_rows()));
      for (std::int64_t r = 0; r < data.n_rows(); ++r) vals.push_back(data.numeric_value(c, r));
      std::sort(vals.begin(), vals.end());
      vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
      for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
        const double mid = vals[i] + 0.5 * (vals[i + 1] - vals[i]);
        if (mid > vals[i] && mid < vals[i + 1]) dom.midpoints.push_back(mid);
      }
      dom.usable = !dom.midpoints.empty();
    }
  }
  return out;
}

std::optional<SplitRule> random_rule(const Dataset& data, const SplitDomains& domains,
                                     std::int32_t column, Rng& rng) {
  const auto& dom = domains.columns[static_cast<std::size_t>(column)];
  if (!dom.usable) return std::nullopt;
  SplitRule rule;
  rule.column = column;
  const auto& col = data.column(column);
  if (col.kind == ColumnKind::categorical) {
    rule.kind = ColumnKind::categorical;
    const auto k = static_cast<std::size_t>(dom.declared_levels);
    for (int attempt = 0; attempt < 32; ++attempt) {
      std::vector<std::uint8_t> mask(k, 0);
      std::size_t picked = 0;
      for (auto& m : mask) {
        m = static_cast<std::uint8_t>(rng() & 1);
        picked += m;
      }
      if (picked == 0 || picked == k) continue;
      rule.left_levels = std::move(mask);
      return rule;
    }
    return std::nullopt;
  }
  rule.kind = ColumnKind::numeric;
  std::uniform_int_distribution<std::size_t> pick(0, dom.midpoints.size() - 1);
  rule.cutoff = dom.midpoints[pick(rng)];
  return rule;
}

std::int32_t random_usable_column(const SplitDomains& domains, Rng& rng) {
  std::vector<std::int32_t> usable;
  for (std::size_t c = 0; c < domains.columns.size(); ++c) {
    if (domains.columns[c].usable) usable.push_back(static_cast<std::int32_t>(c));
  }
  if (usable.empty()) return -1;
  std::uniform_int_distribution<std::size_t> pick(0, usable.size() - 1);
  return usable[pick(rng)];
}

}  // namespace proftree
