#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace proftree {

/// Scores paired with true labels, pre-grouped by distinct score value in
/// descending order. All classification and profit measures are functions
/// of this grouping; the per-row view is kept (when available) only for
/// campaign-list construction, which needs original row order on ties.
class ScoredSample {
 public:
  struct Group {
    double score = 0.0;
    std::int64_t churn = 0;
    std::int64_t nonchurn = 0;
  };

  static ScoredSample from_rows(std::vector<double> scores, std::vector<std::uint8_t> labels);
  /// Groups must already be strictly decreasing in score.
  static ScoredSample from_groups(std::vector<Group> groups);

  std::int64_t size() const { return total_; }
  std::int64_t churners() const { return churn_total_; }
  std::int64_t nonchurners() const { return total_ - churn_total_; }
  double prior_churn() const { return static_cast<double>(churn_total_) / static_cast<double>(total_); }
  double prior_nonchurn() const { return 1.0 - prior_churn(); }

  const std::vector<Group>& groups() const { return groups_; }
  std::int32_t group_count() const { return static_cast<std::int32_t>(groups_.size()); }

  /// Cumulative counts over the k highest-score groups, k in [0, group_count].
  std::int64_t cum_churn(std::int32_t k) const { return cum_churn_[static_cast<std::size_t>(k)]; }
  std::int64_t cum_nonchurn(std::int32_t k) const { return cum_nonchurn_[static_cast<std::size_t>(k)]; }

  /// Number of groups with score strictly above t.
  std::int32_t prefix_above(double t) const;

  /// A threshold t whose campaign {score > t} equals the top-k groups.
  /// For k == group_count the lower extreme 0 is returned, which reaches
  /// everyone only when the minimum score is positive.
  double threshold_for_prefix(std::int32_t k) const;

  bool has_rows() const { return !scores_.empty(); }
  std::span<const double> scores() const { return scores_; }
  std::span<const std::uint8_t> labels() const { return labels_; }

 private:
  void finish();  // build prefix sums and totals from groups_

  std::vector<Group> groups_;
  std::vector<std::int64_t> cum_churn_, cum_nonchurn_;
  std::int64_t total_ = 0;
  std::int64_t churn_total_ = 0;
  std::vector<double> scores_;
  std::vector<std::uint8_t> labels_;
};

/// Confusion-matrix measures at a threshold, oriented on the churner (case)
/// class: recall is the fraction of churners in the campaign {score > t},
/// precision the fraction of the campaign that churns. Precision and F1 are
/// absent when their denominator is empty (nobody targeted).
struct ThresholdMetrics {
  double accuracy = 0.0;
  double error_rate = 0.0;
  double recall = 0.0;
  std::optional<double> precision;
  std::optional<double> f1;
};

ThresholdMetrics threshold_metrics(const ScoredSample& s, double t);

/// Same measures for the campaign that targets the k top score groups.
ThresholdMetrics prefix_metrics(const ScoredSample& s, std::int32_t k);

/// Probability that a random churner outscores a random non-churner, ties
/// counted half. Throws DataError on a single-class sample.
double auc(const ScoredSample& s);

/// Minimum error rate over all score cutoffs (including "target nobody"
/// and "target everybody").
double mer(const ScoredSample& s);

/// Per-class benefits/costs of Table-style cost-benefit analysis, oriented
/// on the case (churner) class: b0/c0 apply to churners (targeted benefit /
/// missed cost), b1/c1 to non-churners (ignored benefit / targeted cost).
struct CostBenefitMatrix {
  double b0 = 0.0;
  double c0 = 0.0;
  double b1 = 0.0;
  double c1 = 0.0;
};

/// Average classification profit per customer at threshold t.
double general_profit(const ScoredSample& s, double t, const CostBenefitMatrix& cb);

}  // namespace proftree
