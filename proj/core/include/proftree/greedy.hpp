#pragma once

#include "proftree/dataset.hpp"
#include "proftree/profit.hpp"
#include "proftree/tree.hpp"

namespace proftree {

/// Greedy recursive partitioning with Gini impurity (the accuracy-driven
/// baseline). At each node the (column, rule) pair with the largest
/// weighted impurity decrease wins; ties break toward the lowest column
/// index, then the lowest cutoff / subset code. Categorical splits are
/// enumerated exhaustively up to 12 levels, above that levels are ordered
/// by node churn rate and only prefix subsets are scanned. Growth stops
/// when the constraints bind or the best gain is <= min_gain.
Tree fit_greedy(const Dataset& data, const TreeConstraints& c, double min_gain = 0.0);

/// Bottom-up pruning against the regularized EMPC fitness: repeatedly
/// collapses any internal node whose removal does not decrease
/// EMPC - lambda * leaves on `data`, until a fixpoint. Idempotent.
Tree prune_greedy(const Tree& tree, const Dataset& data, double lambda, const ProfitParams& p);

}  // namespace proftree
