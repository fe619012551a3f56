#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "proftree/dataset.hpp"
#include "proftree/evolve.hpp"
#include "proftree/profit.hpp"

namespace proftree {

struct LambdaGrid {
  std::vector<double> values;  // strictly increasing, all >= 0

  static LambdaGrid log_spaced(double lo, double hi, std::int32_t count);
  void validate() const;
};

struct TuneResult {
  struct Point {
    double lambda = 0.0;
    double mean_empc = 0.0;
    double sd_empc = 0.0;
  };
  std::vector<Point> curve;
  double lambda_opt = 0.0;
};

std::string tune_curve_csv(const TuneResult& r);

/// Grid search for the complexity weight under five replications of
/// stratified twofold cross-validation: per lambda, train on each fold and
/// score EMPC on the complement, average the 10 estimates. All lambdas
/// share one FoldPlan. lambda_opt maximizes the mean; ties go to the
/// larger lambda.
TuneResult tune_lambda(const Dataset& data, const ProfitParams& p, const LambdaGrid& grid,
                       const EvolveConfig& cfg, std::uint64_t seed, std::ostream* log = nullptr);

/// Benchmark over one or more datasets: the evolutionary learner (lambda
/// tuned on `grid` unless the grid has exactly one value), the greedy
/// baseline, the pruned greedy baseline and a constant scorer, all trained
/// and tested under the same 5x2 fold plan.
struct BenchmarkReport {
  struct Cell {
    std::vector<double> values;  // one per (replication, fold) evaluation
    double mean = 0.0;
    double sd = 0.0;
  };
  std::vector<std::string> dataset_names;
  std::vector<std::string> model_names;
  std::vector<std::string> metric_names;  // EMPC, MPC, eta_p, eta_r, eta_F, AUC, MER
  // cells[dataset][model][metric]
  std::vector<std::vector<std::vector<Cell>>> cells;
  // ranks[dataset][model][metric]; average rank on ties, MER ranks ascending
  std::vector<std::vector<std::vector<double>>> ranks;
  // avg_ranks[model][metric], averaged over datasets
  std::vector<std::vector<double>> avg_ranks;
  std::vector<double> tuned_lambda;  // per dataset
};

BenchmarkReport benchmark(const std::vector<Dataset>& datasets,
                          const std::vector<std::string>& names, const ProfitParams& p,
                          const EvolveConfig& cfg, const LambdaGrid& grid, std::uint64_t seed,
                          std::ostream* log = nullptr);

std::string benchmark_json(const BenchmarkReport& r);
std::string benchmark_text(const BenchmarkReport& r);
std::string benchmark_box_csv(const BenchmarkReport& r);

}  // namespace proftree
