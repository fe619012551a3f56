#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "proftree/metrics.hpp"

namespace proftree {

/// Economics of a retention campaign. Every targeted customer costs the
/// contact cost f; a targeted would-be churner accepts the offer with
/// probability gamma, in which case the CLV is retained and the offer cost d
/// is paid; targeted non-churners always accept the offer. gamma is
/// uncertain and modeled as Beta(alpha, beta).
struct ProfitParams {
  double clv = 200.0;
  double offer_cost = 10.0;    // d
  double contact_cost = 1.0;   // f
  double alpha = 6.0;          // Beta prior shape, > 1
  double beta = 14.0;          // Beta prior shape, > 1
  std::optional<double> gamma_point;  // fixed gamma for MPC; default prior mean

  double delta() const { return offer_cost / clv; }
  double phi() const { return contact_cost / clv; }
  double gamma() const { return gamma_point ? *gamma_point : alpha / (alpha + beta); }

  void validate() const;  // throws Error on violated parameter constraints
};

/// Upper convex hull of the targeting curve. x = fraction of non-churners
/// targeted, y = fraction of churners targeted, both over the campaigns
/// that take the k highest-score groups; eta is the fraction of the whole
/// customer base targeted at that vertex. Only hull vertices can maximize
/// the campaign profit for some gamma.
struct RocHull {
  struct Vertex {
    double x = 0.0;
    double y = 0.0;
    double eta = 0.0;
    std::int32_t prefix = 0;  // number of score groups targeted
  };
  std::vector<Vertex> vertices;
};

RocHull roc_hull(const ScoredSample& s);

/// Average campaign profit per customer at threshold t for a known gamma:
///   CLV*(gamma*(1-delta) - phi) * pi_churn * eta_c(t)
///     - CLV*(delta + phi) * pi_nonchurn * eta_n(t)
/// where eta_c, eta_n are the fractions of churners / non-churners with
/// score > t.
double churn_profit(const ScoredSample& s, double t, const ProfitParams& p, double gamma);

struct MpcResult {
  double mpc = 0.0;
  double t_opt = 0.0;
  double eta = 0.0;  // fraction of the base targeted at t_opt
};

/// Maximum profit at the fixed gamma_point. "Target nobody" is always
/// admissible, so mpc >= 0. Ties resolve toward the lowest threshold
/// (largest campaign). A sample with zero churners yields {0, max_score, 0};
/// a sample with zero non-churners is an error.
MpcResult mpc(const ScoredSample& s, const ProfitParams& p);

struct EmpcResult {
  double empc = 0.0;
  double eta = 0.0;
};

/// Expected maximum profit over the Beta(alpha, beta) prior on gamma,
/// computed exactly by hull segment decomposition: each hull vertex is
/// optimal on one gamma interval (slopes strictly decrease along the hull,
/// so the critical gammas are increasing), and the profit is affine in
/// gamma there, integrating to regularized incomplete beta terms of orders
/// (alpha, beta) and (alpha+1, beta).
EmpcResult empc(const ScoredSample& s, const ProfitParams& p);

struct EtaMeasures {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Precision/recall/F1 of the campaign list holding the ceil(eta_empc * N)
/// highest-score customers (original order on score ties). All zero when
/// the list is empty. Requires a row-level sample.
EtaMeasures eta_measures(const ScoredSample& s, double eta_empc);
EtaMeasures eta_measures(const ScoredSample& s, const ProfitParams& p);

double harmonic_f1(double precision, double recall);

/// Everything the evaluation engine knows about one model on one sample.
struct ProfitReport {
  double empc = 0.0;
  double eta_empc = 0.0;
  double mpc = 0.0;
  double t_opt = 0.0;
  double eta_mpc = 0.0;
  double eta_precision = 0.0;
  double eta_recall = 0.0;
  double eta_f1 = 0.0;
  double auc = 0.0;
  double mer = 0.0;
};

ProfitReport evaluate_sample(const ScoredSample& s, const ProfitParams& p);

/// One row per score cutoff of the piecewise-constant profit curve.
struct CurvePoint {
  double threshold = 0.0;
  double targeted_fraction = 0.0;
  double profit = 0.0;
  ThresholdMetrics metrics;
};

std::vector<CurvePoint> profit_curve(const ScoredSample& s, const ProfitParams& p, double gamma);

}  // namespace proftree
