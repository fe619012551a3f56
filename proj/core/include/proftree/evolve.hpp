#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "proftree/dataset.hpp"
#include "proftree/profit.hpp"
#include "proftree/tree.hpp"

namespace proftree {

enum class VariationOp : int { split = 0, prune, major_mutation, minor_mutation, crossover };

struct EvolveConfig {
  std::int32_t population_size = 100;
  // selection probabilities for {split, prune, major, minor, crossover}
  std::array<double, 5> operator_probs{0.2, 0.2, 0.2, 0.2, 0.2};
  double lambda = 0.1;  // complexity weight, currency per leaf
  std::int32_t min_iterations = 1000;
  std::int32_t convergence_window = 100;
  std::int32_t max_iterations = 10000;
  double elite_fraction = 0.05;
  TreeConstraints constraints;
  std::uint64_t seed = 0;
  std::int32_t jobs = 1;
  // re-validate every tree against the constraints each iteration
  bool validate_each_iteration = false;

  void validate() const;
};

struct FitnessTrace {
  struct Row {
    std::int32_t iteration = 0;
    double best = 0.0;
    double mean = 0.0;
    std::int32_t best_size = 0;  // leaf count of the best tree
  };
  std::vector<Row> rows;
};

std::string trace_to_csv(const FitnessTrace& trace);

/// Regularized fitness of a fitted tree: EMPC of its training scores minus
/// lambda per leaf. Higher is better.
double fitness(const Tree& tree, const ProfitParams& p, double lambda);

/// The scored sample a fitted tree induces on its training data, assembled
/// from leaf statistics (every leaf contributes one score group).
ScoredSample leaf_sample(const Tree& tree);

/// population_size random depth-1 trees (root split drawn uniformly over
/// the valid rule space), falling back to single leaves where no feasible
/// depth-1 tree exists.
std::vector<Tree> init_population(const Dataset& data, const SplitDomains& domains,
                                  const EvolveConfig& cfg, std::ostream* log = nullptr);

// Variation operators. Each returns a constraint-satisfying tree, falling
// back to (a copy of) the input after bounded retries.
Tree mutate_split(const Tree& tree, const Dataset& data, const SplitDomains& domains,
                  const TreeConstraints& c, Rng& rng);
Tree mutate_prune(const Tree& tree, const Dataset& data, Rng& rng);
Tree mutate_major(const Tree& tree, const Dataset& data, const SplitDomains& domains,
                  const TreeConstraints& c, Rng& rng);
Tree mutate_minor(const Tree& tree, const Dataset& data, const SplitDomains& domains,
                  const TreeConstraints& c, Rng& rng);
std::pair<Tree, Tree> crossover(const Tree& a, const Tree& b, const Dataset& data,
                                const TreeConstraints& c, Rng& rng);

struct EvolveResult {
  Tree best;
  double best_fitness = 0.0;
  FitnessTrace trace;
  std::int32_t iterations = 0;
};

/// Evolutionary search for the tree maximizing EMPC - lambda * leaves.
/// Every population slot is modified once per iteration by one operator and
/// keeps the fitter of incumbent and candidate, which makes the best
/// fitness non-decreasing. Runs at least min_iterations, then stops once
/// the mean fitness of the elite has not improved for convergence_window
/// iterations, or at max_iterations. Deterministic for a given seed
/// independent of the worker count.
EvolveResult evolve(const Dataset& data, const ProfitParams& p, const EvolveConfig& cfg,
                    std::ostream* log = nullptr);

}  // namespace proftree
