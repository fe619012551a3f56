#include "proftree/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <unordered_map>
#include <unordered_set>

#include "proftree/csv.hpp"
#include "proftree/errors.hpp"
#include "proftree/rng.hpp"

namespace proftree {

std::string_view to_string(ColumnKind k) {
  switch (k) {
    case ColumnKind::numeric: return "numeric";
    case ColumnKind::ordered: return "ordered";
    case ColumnKind::categorical: return "categorical";
  }
  return "?";
}

ColumnKind column_kind_from_string(std::string_view s) {
  if (s == "numeric") return ColumnKind::numeric;
  if (s == "ordered") return ColumnKind::ordered;
  if (s == "categorical") return ColumnKind::categorical;
  throw IoError("unknown column kind: " + std::string(s));
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (s.empty()) return false;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc{} && res.ptr == s.data() + s.size() && std::isfinite(out);
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool is_missing(std::string_view cell) {
  const auto t = trim(cell);
  return t.empty() || t == "NA";
}

int parse_label(std::string_view cell) {
  const std::string t = lower(trim(cell));
  if (t == "0" || t == "no" || t == "false") return 0;
  if (t == "1" || t == "yes" || t == "true") return 1;
  return -1;
}

}  // namespace

Dataset::Dataset(std::vector<ColumnSchema> schema,
                 std::vector<std::vector<double>> numeric_columns,
                 std::vector<std::vector<std::int32_t>> coded_columns,
                 std::vector<std::uint8_t> labels, std::string label_name)
    : schema_(std::move(schema)),
      numeric_(std::move(numeric_columns)),
      coded_(std::move(coded_columns)),
      labels_(std::move(labels)),
      label_name_(std::move(label_name)) {
  std::size_t n_numeric = 0, n_coded = 0;
  storage_.reserve(schema_.size());
  std::unordered_set<std::string> names;
  for (const auto& col : schema_) {
    if (!names.insert(col.name).second) {
      throw DataError("duplicate column name: " + col.name);
    }
    if (col.kind == ColumnKind::numeric) {
      storage_.push_back(static_cast<std::int32_t>(n_numeric++));
    } else {
      if (col.levels.empty()) throw DataError("column without levels: " + col.name);
      storage_.push_back(static_cast<std::int32_t>(n_coded++));
    }
  }
  if (n_numeric != numeric_.size() || n_coded != coded_.size()) {
    throw DataError("column storage does not match the schema");
  }
  const auto n = labels_.size();
  for (const auto& col : numeric_) {
    if (col.size() != n) throw DataError("numeric column length mismatch");
  }
  for (std::size_t c = 0, coded_idx = 0; c < schema_.size(); ++c) {
    if (schema_[c].kind == ColumnKind::numeric) continue;
    const auto& col = coded_[coded_idx++];
    if (col.size() != n) throw DataError("coded column length mismatch");
    const auto k = static_cast<std::int32_t>(schema_[c].levels.size());
    for (auto code : col) {
      if (code < 0 || code >= k) throw DataError("level code out of range in " + schema_[c].name);
    }
  }
  for (auto y : labels_) {
    if (y > 1) throw DataError("labels must be 0 or 1");
    churners_ += y;
  }
}

std::int32_t Dataset::find_column(std::string_view name) const {
  for (std::size_t c = 0; c < schema_.size(); ++c) {
    if (schema_[c].name == name) return static_cast<std::int32_t>(c);
  }
  return -1;
}

double Dataset::numeric_value(std::int32_t col, std::int64_t row) const {
  const auto& s = schema_[static_cast<std::size_t>(col)];
  if (s.kind == ColumnKind::numeric) {
    return numeric_[static_cast<std::size_t>(storage_[static_cast<std::size_t>(col)])]
                   [static_cast<std::size_t>(row)];
  }
  return static_cast<double>(code(col, row));
}

std::int32_t Dataset::code(std::int32_t col, std::int64_t row) const {
  return coded_[static_cast<std::size_t>(storage_[static_cast<std::size_t>(col)])]
               [static_cast<std::size_t>(row)];
}

Dataset Dataset::subset(std::span<const std::int32_t> rows) const {
  std::vector<std::vector<double>> num(numeric_.size());
  std::vector<std::vector<std::int32_t>> cod(coded_.size());
  std::vector<std::uint8_t> lab;
  lab.reserve(rows.size());
  for (std::size_t c = 0; c < numeric_.size(); ++c) {
    num[c].reserve(rows.size());
    for (auto r : rows) num[c].push_back(numeric_[c][static_cast<std::size_t>(r)]);
  }
  for (std::size_t c = 0; c < coded_.size(); ++c) {
    cod[c].reserve(rows.size());
    for (auto r : rows) cod[c].push_back(coded_[c][static_cast<std::size_t>(r)]);
  }
  for (auto r : rows) lab.push_back(labels_[static_cast<std::size_t>(r)]);
  return Dataset(schema_, std::move(num), std::move(cod), std::move(lab), label_name_);
}

// ---- CSV ingestion -----------------------------------------------------

Dataset load_csv(const std::string& path, const std::string& label_name,
                 const std::string& schema_path, IngestReport* report, std::ostream* log) {
  auto records = read_csv_file(path);
  if (records.empty()) throw IoError("empty csv: " + path);

  const auto header = records.front();
  const std::size_t width = header.size();
  std::int64_t label_col = -1;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (trim(header[c]) == label_name) label_col = static_cast<std::int64_t>(c);
  }
  if (label_col < 0) throw DataError("label column not found: " + label_name);

  // drop rows with any missing cell, reject malformed widths outright
  std::vector<std::vector<std::string>> rows;
  rows.reserve(records.size() - 1);
  std::int64_t dropped = 0;
  for (std::size_t r = 1; r < records.size(); ++r) {
    auto& rec = records[r];
    if (rec.size() == 1 && trim(rec[0]).empty()) continue;  // stray blank line
    if (rec.size() != width) {
      throw IoError(path + ": row " + std::to_string(r + 1) + " has " +
                    std::to_string(rec.size()) + " fields, expected " + std::to_string(width));
    }
    const bool missing =
        std::any_of(rec.begin(), rec.end(), [](const std::string& s) { return is_missing(s); });
    if (missing) {
      ++dropped;
      continue;
    }
    rows.push_back(std::move(rec));
  }
  const auto rows_read = static_cast<std::int64_t>(records.size()) - 1;
  if (report) {
    report->rows_read = rows_read;
    report->rows_dropped = dropped;
  }
  if (rows.empty()) throw DataError(path + ": no usable rows after cleaning");

  std::vector<std::pair<std::string, ColumnSchema>> overrides;
  if (!schema_path.empty()) overrides = load_schema_file(schema_path);
  auto find_override = [&](const std::string& name) -> const ColumnSchema* {
    for (const auto& [n, s] : overrides) {
      if (n == name) return &s;
    }
    return nullptr;
  };
  for (const auto& [name, s] : overrides) {
    bool known = false;
    for (const auto& h : header) known |= (trim(h) == name);
    if (!known) throw IoError("schema file names unknown column: " + name);
  }

  std::vector<ColumnSchema> schema;
  std::vector<std::vector<double>> numeric_cols;
  std::vector<std::vector<std::int32_t>> coded_cols;

  for (std::size_t c = 0; c < width; ++c) {
    if (static_cast<std::int64_t>(c) == label_col) continue;
    ColumnSchema s;
    s.name = std::string(trim(header[c]));
    const ColumnSchema* ov = find_override(s.name);
    if (ov) {
      s.kind = ov->kind;
      s.levels = ov->levels;
    } else {
      double tmp;
      const bool all_numeric = std::all_of(rows.begin(), rows.end(), [&](const auto& rec) {
        return parse_double(rec[c], tmp);
      });
      s.kind = all_numeric ? ColumnKind::numeric : ColumnKind::categorical;
    }

    if (s.kind == ColumnKind::numeric) {
      std::vector<double> vals;
      vals.reserve(rows.size());
      for (const auto& rec : rows) {
        double v;
        if (!parse_double(rec[c], v)) {
          throw DataError("column " + s.name + " declared numeric but holds '" + rec[c] + "'");
        }
        vals.push_back(v);
      }
      numeric_cols.push_back(std::move(vals));
    } else {
      std::unordered_map<std::string, std::int32_t> index;
      for (std::size_t i = 0; i < s.levels.size(); ++i) {
        index[s.levels[i]] = static_cast<std::int32_t>(i);
      }
      const bool fixed_levels = ov && !ov->levels.empty();
      std::vector<std::int32_t> codes;
      codes.reserve(rows.size());
      for (const auto& rec : rows) {
        const std::string cell(trim(rec[c]));
        auto it = index.find(cell);
        if (it == index.end()) {
          if (fixed_levels) {
            throw DataError("column " + s.name + ": value '" + cell +
                            "' not among the declared levels");
          }
          it = index.emplace(cell, static_cast<std::int32_t>(s.levels.size())).first;
          s.levels.push_back(cell);
        }
        codes.push_back(it->second);
      }
      coded_cols.push_back(std::move(codes));
    }
    schema.push_back(std::move(s));
  }

  std::vector<std::uint8_t> labels;
  labels.reserve(rows.size());
  for (const auto& rec : rows) {
    const int y = parse_label(rec[static_cast<std::size_t>(label_col)]);
    if (y < 0) {
      throw DataError("label value '" + rec[static_cast<std::size_t>(label_col)] +
                      "' is not a recognized binary encoding ({0,1}, {no,yes}, {false,true})");
    }
    labels.push_back(static_cast<std::uint8_t>(y));
  }

  Dataset out(std::move(schema), std::move(numeric_cols), std::move(coded_cols),
              std::move(labels), std::string(trim(header[static_cast<std::size_t>(label_col)])));
  if (log) {
    *log << "ingest: " << rows_read << " rows read, " << dropped << " dropped ("
         << out.n_rows() << " kept), " << out.churner_count() << " churners\n";
    for (const auto& col : out.schema()) {
      *log << "ingest: column " << col.name << " -> " << to_string(col.kind);
      if (col.kind != ColumnKind::numeric) *log << " (" << col.levels.size() << " levels)";
      *log << "\n";
    }
  }
  return out;
}

void save_csv(const Dataset& data, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write file: " + path);
  for (std::int32_t c = 0; c < data.n_cols(); ++c) {
    out << csv_escape(data.column(c).name) << ',';
  }
  out << csv_escape(data.label_name()) << '\n';
  for (std::int64_t r = 0; r < data.n_rows(); ++r) {
    for (std::int32_t c = 0; c < data.n_cols(); ++c) {
      const auto& col = data.column(c);
      if (col.kind == ColumnKind::numeric) {
        out << format_double(data.numeric_value(c, r));
      } else {
        out << csv_escape(col.levels[static_cast<std::size_t>(data.code(c, r))]);
      }
      out << ',';
    }
    out << int(data.labels()[static_cast<std::size_t>(r)]) << '\n';
  }
}

std::vector<std::pair<std::string, ColumnSchema>> load_schema_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open schema file: " + path);
  std::vector<std::pair<std::string, ColumnSchema>> out;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto t = trim(line);
    if (t.empty()) continue;
    const auto c1 = t.find(':');
    if (c1 == std::string_view::npos) throw IoError("schema file: expected name:kind in '" + line + "'");
    ColumnSchema s;
    s.name = std::string(trim(t.substr(0, c1)));
    auto rest = t.substr(c1 + 1);
    const auto c2 = rest.find(':');
    s.kind = column_kind_from_string(trim(rest.substr(0, c2)));
    if (c2 != std::string_view::npos) {
      auto lvls = rest.substr(c2 + 1);
      while (!lvls.empty()) {
        const auto comma = lvls.find(',');
        s.levels.emplace_back(trim(lvls.substr(0, comma)));
        if (comma == std::string_view::npos) break;
        lvls = lvls.substr(comma + 1);
      }
    }
    if (s.kind == ColumnKind::ordered && s.levels.empty()) {
      throw IoError("schema file: ordered column " + s.name + " needs an ordered level list");
    }
    if (s.kind == ColumnKind::numeric && !s.levels.empty()) {
      throw IoError("schema file: numeric column " + s.name + " cannot have levels");
    }
    out.emplace_back(s.name, std::move(s));
  }
  return out;
}

void save_schema_file(const Dataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write schema file: " + path);
  for (std::int32_t c = 0; c < data.n_cols(); ++c) {
    const auto& col = data.column(c);
    out << col.name << ':' << to_string(col.kind);
    if (col.kind != ColumnKind::numeric) {
      out << ':';
      for (std::size_t i = 0; i < col.levels.size(); ++i) {
        if (i) out << ',';
        out << col.levels[i];
      }
    }
    out << '\n';
  }
}

// ---- stratified twofold splits ------------------------------------------

FoldPlan stratified_split(const Dataset& data, std::int32_t replications, std::uint64_t seed) {
  const auto n = data.n_rows();
  if (n < 2) throw DataError("stratified_split: need at least 2 rows");
  if (replications < 1) throw DataError("stratified_split: need at least 1 replication");
  std::vector<std::int32_t> churn_idx, nonchurn_idx;
  for (std::int64_t r = 0; r < n; ++r) {
    (data.labels()[static_cast<std::size_t>(r)] ? churn_idx : nonchurn_idx)
        .push_back(static_cast<std::int32_t>(r));
  }
  if (churn_idx.empty() || nonchurn_idx.empty()) {
    throw DataError("stratified_split: both classes must be present");
  }

  FoldPlan plan;
  plan.replication_count = replications;
  plan.seed = seed;
  plan.assignments.resize(static_cast<std::size_t>(replications));
  const auto n1 = static_cast<std::int64_t>(churn_idx.size());

  for (std::int32_t rep = 0; rep < replications; ++rep) {
    Rng rng = make_stream(seed, 0xF01DULL, static_cast<std::uint64_t>(rep));
    auto churners = churn_idx;
    auto nonchurners = nonchurn_idx;
    std::shuffle(churners.begin(), churners.end(), rng);
    std::shuffle(nonchurners.begin(), nonchurners.end(), rng);

    // odd counts: a coin decides which fold carries the extra row so no
    // fold is systematically favored
    std::int64_t fold0_total = n / 2;
    if (n % 2 && (rng() & 1)) ++fold0_total;
    std::int64_t fold0_churn = n1 / 2;
    if (n1 % 2 && (rng() & 1)) ++fold0_churn;
    std::int64_t fold0_nonchurn = fold0_total - fold0_churn;
    fold0_nonchurn = std::clamp<std::int64_t>(fold0_nonchurn, 0,
                                              static_cast<std::int64_t>(nonchurners.size()));

    auto& folds = plan.assignments[static_cast<std::size_t>(rep)];
    folds[0].assign(churners.begin(), churners.begin() + fold0_churn);
    folds[0].insert(folds[0].end(), nonchurners.begin(), nonchurners.begin() + fold0_nonchurn);
    folds[1].assign(churners.begin() + fold0_churn, churners.end());
    folds[1].insert(folds[1].end(), nonchurners.begin() + fold0_nonchurn, nonchurners.end());
    std::sort(folds[0].begin(), folds[0].end());
    std::sort(folds[1].begin(), folds[1].end());
  }
  return plan;
}

}  // namespace proftree
