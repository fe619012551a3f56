#pragma once

#include <cstdint>

#include "proftree/dataset.hpp"
#include "proftree/tree.hpp"

namespace proftree {

/// Synthetic churn data with a known ground truth: the churn probability is
/// a piecewise-constant function of the first two columns, given by a
/// planted depth-2 tree with four cells; remaining columns are noise. The
/// oracle tree carries the Bayes churn probability of each cell as its leaf
/// score.
struct SynthResult {
  Dataset data;
  Tree oracle;
};

/// n >= 20, 0 < churn_rate < 1, p_numeric + p_categorical >= 2.
/// Byte-identical output for equal arguments.
SynthResult synth_churn(std::int64_t n, double churn_rate, std::int32_t p_numeric,
                        std::int32_t p_categorical, std::uint64_t seed);

}  // namespace proftree
