#include "proftree/profit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "proftree/beta_fn.hpp"
#include "proftree/errors.hpp"

namespace proftree {

void ProfitParams::validate() const {
  if (!(clv > offer_cost) || !(offer_cost > 0.0) || !(contact_cost > 0.0)) {
    throw Error("profit params require CLV > d > 0 and f > 0");
  }
  if (!(alpha > 1.0) || !(beta > 1.0)) {
    throw Error("gamma prior requires alpha > 1 and beta > 1");
  }
  if (gamma_point && !(*gamma_point >= 0.0 && *gamma_point <= 1.0)) {
    throw Error("gamma outside [0, 1]");
  }
}

namespace {

// per-customer profit when the k top score groups are targeted
double prefix_profit(const ScoredSample& s, std::int32_t k, const ProfitParams& p, double gamma) {
  const double benefit = p.clv * (gamma * (1.0 - p.delta()) - p.phi());
  const double cost = p.clv * (p.delta() + p.phi());
  return (benefit * static_cast<double>(s.cum_churn(k)) -
          cost * static_cast<double>(s.cum_nonchurn(k))) /
         static_cast<double>(s.size());
}

double prefix_eta(const ScoredSample& s, std::int32_t k) {
  return static_cast<double>(s.cum_churn(k) + s.cum_nonchurn(k)) /
         static_cast<double>(s.size());
}

}  // namespace

RocHull roc_hull(const ScoredSample& s) {
  const auto n1 = s.churners();
  const auto n0 = s.nonchurners();
  if (n1 == 0 || n0 == 0) throw DataError("roc_hull: requires both classes");

  // monotone chain over the integer prefix points (cum_nonchurn, cum_churn);
  // exact cross products keep the hull free of rounding artifacts
  std::vector<std::int32_t> stack;
  auto cross = [&](std::int32_t a, std::int32_t b, std::int32_t c) -> __int128 {
    const std::int64_t bax = s.cum_nonchurn(b) - s.cum_nonchurn(a);
    const std::int64_t bay = s.cum_churn(b) - s.cum_churn(a);
    const std::int64_t cax = s.cum_nonchurn(c) - s.cum_nonchurn(a);
    const std::int64_t cay = s.cum_churn(c) - s.cum_churn(a);
    return static_cast<__int128>(bax) * cay - static_cast<__int128>(bay) * cax;
  };
  for (std::int32_t k = 0; k <= s.group_count(); ++k) {
    while (stack.size() >= 2 && cross(stack[stack.size() - 2], stack.back(), k) >= 0) {
      stack.pop_back();
    }
    stack.push_back(k);
  }

  RocHull hull;
  hull.vertices.reserve(stack.size());
  for (auto k : stack) {
    RocHull::Vertex v;
    v.x = static_cast<double>(s.cum_nonchurn(k)) / static_cast<double>(n0);
    v.y = static_cast<double>(s.cum_churn(k)) / static_cast<double>(n1);
    v.eta = prefix_eta(s, k);
    v.prefix = k;
    hull.vertices.push_back(v);
  }
  return hull;
}

double churn_profit(const ScoredSample& s, double t, const ProfitParams& p, double gamma) {
  p.validate();
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw Error("gamma outside [0, 1]");
  return prefix_profit(s, s.prefix_above(t), p, gamma);
}

MpcResult mpc(const ScoredSample& s, const ProfitParams& p) {
  p.validate();
  if (s.churners() == 0) {
    return {0.0, s.groups().front().score, 0.0};  // targeting anyone only costs
  }
  if (s.nonchurners() == 0) throw DataError("mpc: sample holds churners only");

  const double gamma = p.gamma();
  double best = -std::numeric_limits<double>::infinity();
  std::int32_t best_k = 0;
  for (std::int32_t k = 0; k <= s.group_count(); ++k) {
    const double profit = prefix_profit(s, k, p, gamma);
    if (profit >= best) {  // ties resolve to the larger campaign (lower threshold)
      best = profit;
      best_k = k;
    }
  }
  return {best, s.threshold_for_prefix(best_k), prefix_eta(s, best_k)};
}

EmpcResult empc(const ScoredSample& s, const ProfitParams& p) {
  p.validate();
  if (s.churners() == 0) return {0.0, 0.0};
  if (s.nonchurners() == 0) throw DataError("empc: sample holds churners only");

  const RocHull hull = roc_hull(s);
  const double delta = p.delta();
  const double phi = p.phi();
  const double slope = p.clv * (1.0 - delta);   // dA/dgamma of the churner benefit A(gamma)
  const double intercept = -p.clv * phi;        // A(0)
  const double cost = p.clv * (delta + phi);
  const double pi1 = s.prior_churn();
  const double pi0 = s.prior_nonchurn();
  const double mu = p.alpha / (p.alpha + p.beta);

  // Vertex j maximizes the profit on [g[j-1], g[j]]: taking segment j pays
  // off once A(gamma) * pi1 * dy exceeds cost * pi0 * dx, and the critical
  // gammas grow along the hull because segment slopes strictly decrease.
  const std::size_t nv = hull.vertices.size();
  std::vector<double> upper(nv, 1.0);
  double prev = 0.0;
  for (std::size_t j = 0; j + 1 < nv; ++j) {
    const double dx = hull.vertices[j + 1].x - hull.vertices[j].x;
    const double dy = hull.vertices[j + 1].y - hull.vertices[j].y;
    double g;
    if (dy <= 0.0) {
      g = 1.0;  // horizontal tail: never worth taking
    } else {
      g = (cost * pi0 * dx / (pi1 * dy) - intercept) / slope;
    }
    prev = std::clamp(g, prev, 1.0);
    upper[j] = prev;
  }
  upper[nv - 1] = 1.0;

  double total = 0.0;
  double eta_total = 0.0;
  double lo = 0.0;
  double ib_lo = 0.0;       // I_lo(alpha, beta)
  double ib_shift_lo = 0.0; // I_lo(alpha + 1, beta)
  for (std::size_t j = 0; j < nv; ++j) {
    const double hi = upper[j];
    if (hi <= lo) continue;
    const double ib_hi = ibeta(p.alpha, p.beta, hi);
    const double ib_shift_hi = ibeta(p.alpha + 1.0, p.beta, hi);
    const double mass = ib_hi - ib_lo;                       // prior mass of the interval
    const double gamma_mass = mu * (ib_shift_hi - ib_shift_lo);  // integral of gamma * h
    const auto& v = hull.vertices[j];
    total += pi1 * v.y * (slope * gamma_mass + intercept * mass) - pi0 * v.x * cost * mass;
    eta_total += v.eta * mass;
    lo = hi;
    ib_lo = ib_hi;
    ib_shift_lo = ib_shift_hi;
  }
  return {total, eta_total};
}

double harmonic_f1(double precision, double recall) {
  const double sum = precision + recall;
  return sum > 0.0 ? 2.0 * precision * recall / sum : 0.0;
}

EtaMeasures eta_measures(const ScoredSample& s, double eta_empc) {
  if (!s.has_rows()) throw Error("eta_measures: needs a row-level sample");
  const auto n = s.size();
  auto list_size = static_cast<std::int64_t>(
      std::ceil(eta_empc * static_cast<double>(n) - 1e-9));
  list_size = std::clamp<std::int64_t>(list_size, 0, n);
  if (list_size == 0) return {0.0, 0.0, 0.0};

  const auto scores = s.scores();
  std::vector<std::int64_t> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), std::int64_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::int64_t a, std::int64_t b) {
    return scores[static_cast<std::size_t>(a)] > scores[static_cast<std::size_t>(b)];
  });
  std::int64_t hits = 0;
  for (std::int64_t i = 0; i < list_size; ++i) {
    hits += s.labels()[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
  }
  EtaMeasures m;
  m.precision = static_cast<double>(hits) / static_cast<double>(list_size);
  m.recall = s.churners() > 0
                 ? static_cast<double>(hits) / static_cast<double>(s.churners())
                 : 0.0;
  m.f1 = harmonic_f1(m.precision, m.recall);
  return m;
}

EtaMeasures eta_measures(const ScoredSample& s, const ProfitParams& p) {
  return eta_measures(s, empc(s, p).eta);
}

ProfitReport evaluate_sample(const ScoredSample& s, const ProfitParams& p) {
  ProfitReport r;
  const auto e = empc(s, p);
  r.empc = e.empc;
  r.eta_empc = e.eta;
  const auto m = mpc(s, p);
  r.mpc = m.mpc;
  r.t_opt = m.t_opt;
  r.eta_mpc = m.eta;
  const auto etas = eta_measures(s, e.eta);
  r.eta_precision = etas.precision;
  r.eta_recall = etas.recall;
  r.eta_f1 = etas.f1;
  r.auc = auc(s);
  r.mer = mer(s);
  return r;
}

std::vector<CurvePoint> profit_curve(const ScoredSample& s, const ProfitParams& p, double gamma) {
  p.validate();
  std::vector<CurvePoint> out;
  out.reserve(static_cast<std::size_t>(s.group_count()) + 1);
  for (std::int32_t k = 0; k <= s.group_count(); ++k) {
    CurvePoint c;
    c.threshold = s.threshold_for_prefix(k);
    c.targeted_fraction = prefix_eta(s, k);
    c.profit = prefix_profit(s, k, p, gamma);
    c.metrics = prefix_metrics(s, k);
    out.push_back(c);
  }
  return out;
}

}  // namespace proftree
