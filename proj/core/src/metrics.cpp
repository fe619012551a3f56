#include "proftree/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "proftree/errors.hpp"

namespace proftree {

ScoredSample ScoredSample::from_rows(std::vector<double> scores,
                                     std::vector<std::uint8_t> labels) {
  if (scores.size() != labels.size()) throw DataError("scores and labels differ in length");
  if (scores.empty()) throw DataError("empty sample");
  for (double s : scores) {
    if (!(s >= 0.0 && s <= 1.0)) throw DataError("score outside [0, 1]");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  ScoredSample out;
  for (auto i : order) {
    if (labels[i] > 1) throw DataError("labels must be 0 or 1");
    if (out.groups_.empty() || out.groups_.back().score != scores[i]) {
      out.groups_.push_back({scores[i], 0, 0});
    }
    (labels[i] ? out.groups_.back().churn : out.groups_.back().nonchurn)++;
  }
  out.scores_ = std::move(scores);
  out.labels_ = std::move(labels);
  out.finish();
  return out;
}

ScoredSample ScoredSample::from_groups(std::vector<Group> groups) {
  if (groups.empty()) throw DataError("empty sample");
  ScoredSample out;
  out.groups_ = std::move(groups);
  std::sort(out.groups_.begin(), out.groups_.end(),
            [](const Group& a, const Group& b) { return a.score > b.score; });
  // merge duplicates (different tree leaves can share a score)
  std::vector<Group> merged;
  for (const auto& g : out.groups_) {
    if (!(g.score >= 0.0 && g.score <= 1.0)) throw DataError("score outside [0, 1]");
    if (g.churn < 0 || g.nonchurn < 0 || g.churn + g.nonchurn == 0) {
      throw DataError("bad group counts");
    }
    if (!merged.empty() && merged.back().score == g.score) {
      merged.back().churn += g.churn;
      merged.back().nonchurn += g.nonchurn;
    } else {
      merged.push_back(g);
    }
  }
  out.groups_ = std::move(merged);
  out.finish();
  return out;
}

void ScoredSample::finish() {
  cum_churn_.assign(1, 0);
  cum_nonchurn_.assign(1, 0);
  for (const auto& g : groups_) {
    cum_churn_.push_back(cum_churn_.back() + g.churn);
    cum_nonchurn_.push_back(cum_nonchurn_.back() + g.nonchurn);
  }
  churn_total_ = cum_churn_.back();
  total_ = churn_total_ + cum_nonchurn_.back();
}

std::int32_t ScoredSample::prefix_above(double t) const {
  // groups_ is sorted by descending score
  auto it = std::lower_bound(groups_.begin(), groups_.end(), t,
                             [](const Group& g, double value) { return g.score > value; });
  return static_cast<std::int32_t>(it - groups_.begin());
}

double ScoredSample::threshold_for_prefix(std::int32_t k) const {
  if (k <= 0) return groups_.front().score;           // target nobody
  if (k >= group_count()) return 0.0;                 // target everybody (see header note)
  return groups_[static_cast<std::size_t>(k)].score;  // next score down
}

ThresholdMetrics threshold_metrics(const ScoredSample& s, double t) {
  return prefix_metrics(s, s.prefix_above(t));
}

ThresholdMetrics prefix_metrics(const ScoredSample& s, std::int32_t k) {
  const double tp = static_cast<double>(s.cum_churn(k));
  const double fp = static_cast<double>(s.cum_nonchurn(k));
  const double n = static_cast<double>(s.size());
  const double n1 = static_cast<double>(s.churners());
  const double n0 = static_cast<double>(s.nonchurners());

  ThresholdMetrics m;
  m.accuracy = (tp + (n0 - fp)) / n;
  m.error_rate = 1.0 - m.accuracy;
  m.recall = n1 > 0 ? tp / n1 : 0.0;
  if (tp + fp > 0) m.precision = tp / (tp + fp);
  if (n1 + tp + fp > 0) m.f1 = 2.0 * tp / (n1 + tp + fp);
  return m;
}

double auc(const ScoredSample& s) {
  const auto n1 = s.churners();
  const auto n0 = s.nonchurners();
  if (n1 == 0 || n0 == 0) throw DataError("auc: requires both classes");
  // 2 * concordant + ties, exact in integers
  std::int64_t num2 = 0;
  std::int64_t nonchurn_above = 0;
  for (const auto& g : s.groups()) {
    const std::int64_t nonchurn_below = n0 - nonchurn_above - g.nonchurn;
    num2 += g.churn * (2 * nonchurn_below + g.nonchurn);
    nonchurn_above += g.nonchurn;
  }
  return static_cast<double>(num2) / (2.0 * static_cast<double>(n1) * static_cast<double>(n0));
}

double mer(const ScoredSample& s) {
  const auto n1 = s.churners();
  std::int64_t best = s.size() + 1;
  for (std::int32_t k = 0; k <= s.group_count(); ++k) {
    const std::int64_t errors = (n1 - s.cum_churn(k)) + s.cum_nonchurn(k);
    best = std::min(best, errors);
  }
  return static_cast<double>(best) / static_cast<double>(s.size());
}

double general_profit(const ScoredSample& s, double t, const CostBenefitMatrix& cb) {
  const auto k = s.prefix_above(t);
  const double n = static_cast<double>(s.size());
  const double tp = static_cast<double>(s.cum_churn(k));      // churners targeted
  const double fp = static_cast<double>(s.cum_nonchurn(k));   // non-churners targeted
  const double fn = static_cast<double>(s.churners()) - tp;
  const double tn = static_cast<double>(s.nonchurners()) - fp;
  return (cb.b0 * tp + cb.b1 * tn - cb.c0 * fn - cb.c1 * fp) / n;
}

}  // namespace proftree
