#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace proftree {

enum class ColumnKind { numeric, ordered, categorical };

std::string_view to_string(ColumnKind k);
ColumnKind column_kind_from_string(std::string_view s);

struct ColumnSchema {
  std::string name;
  ColumnKind kind = ColumnKind::numeric;
  std::vector<std::string> levels;  // categorical / ordered only

  bool operator==(const ColumnSchema&) const = default;
};

/// Immutable columnar table with a binary churn label (1 = churn).
/// Numeric columns store doubles; ordered and categorical columns store
/// level codes (indices into schema.levels). Ordered columns behave like
/// numerics over their level ranks wherever a cutoff is involved.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::vector<ColumnSchema> schema,
          std::vector<std::vector<double>> numeric_columns,
          std::vector<std::vector<std::int32_t>> coded_columns,
          std::vector<std::uint8_t> labels,
          std::string label_name);

  std::int64_t n_rows() const { return static_cast<std::int64_t>(labels_.size()); }
  std::int32_t n_cols() const { return static_cast<std::int32_t>(schema_.size()); }

  const std::vector<ColumnSchema>& schema() const { return schema_; }
  const ColumnSchema& column(std::int32_t c) const { return schema_[static_cast<std::size_t>(c)]; }
  std::int32_t find_column(std::string_view name) const;  // -1 if absent

  /// Value used for cutoff comparisons: the stored double for numeric
  /// columns, the level rank for ordered columns.
  double numeric_value(std::int32_t col, std::int64_t row) const;
  std::int32_t code(std::int32_t col, std::int64_t row) const;

  const std::vector<std::uint8_t>& labels() const { return labels_; }
  const std::string& label_name() const { return label_name_; }
  std::int64_t churner_count() const { return churners_; }

  Dataset subset(std::span<const std::int32_t> rows) const;

 private:
  std::vector<ColumnSchema> schema_;
  // per schema position, exactly one of these holds that column's data;
  // storage_[c] indexes into the matching pool
  std::vector<std::vector<double>> numeric_;
  std::vector<std::vector<std::int32_t>> coded_;
  std::vector<std::int32_t> storage_;
  std::vector<std::uint8_t> labels_;
  std::string label_name_;
  std::int64_t churners_ = 0;
};

struct IngestReport {
  std::int64_t rows_read = 0;
  std::int64_t rows_dropped = 0;
};

/// Loads an RFC-4180 CSV with a header row. Rows with a missing value
/// (empty cell or "NA") are dropped. Column kinds are inferred (numeric if
/// every kept cell parses as a finite number, categorical otherwise with
/// levels in first-appearance order) unless `schema_path` overrides them.
/// Label values must come from {0,1}, {no,yes} or {false,true},
/// case-insensitive. When `log` is given, a line-oriented ingestion report
/// is written to it.
Dataset load_csv(const std::string& path, const std::string& label_name,
                 const std::string& schema_path = {},
                 IngestReport* report = nullptr, std::ostream* log = nullptr);

void save_csv(const Dataset& data, const std::string& path);

/// Schema override file: one `name:kind[:level1,level2,...]` entry per line,
/// '#' starts a comment. Ordered columns must list their levels in order.
std::vector<std::pair<std::string, ColumnSchema>> load_schema_file(const std::string& path);
void save_schema_file(const Dataset& data, const std::string& path);

/// Stratified twofold split plans for replicated cross-validation.
struct FoldPlan {
  std::int32_t replication_count = 0;
  std::uint64_t seed = 0;
  // assignments[rep][fold] = sorted row indices
  std::vector<std::array<std::vector<std::int32_t>, 2>> assignments;
};

/// Per replication, partitions rows into two folds of near-equal size whose
/// churn rates track the full dataset (off by at most 1/min(fold sizes)).
/// Deterministic for a given seed. Throws DataError on single-class data.
FoldPlan stratified_split(const Dataset& data, std::int32_t replications, std::uint64_t seed);

}  // namespace proftree
