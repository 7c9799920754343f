#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sparsenls/param_space.hpp"
#include "sparsenls/types.hpp"

namespace sparsenls {

// Estimates collected over Monte Carlo replications, normalized frame.
struct ReplicationSet {
    Matrix estimates;  // R x p
    std::optional<Vec> truth;
    std::vector<std::string> labels;
};

// [1 − Σ(y−ŷ)²/Σy²]·100; throws MetricError when Σy² = 0.
double vaf(const Vec& y, const Vec& yhat);

struct BiasVariance {
    Vec bias;      // |mean − truth| per parameter
    Vec variance;  // unbiased sample variance per parameter
};

// bias needs truth; variance needs R ≥ 2.
BiasVariance bias_variance(const ReplicationSet& reps);

// (1 − mean_k var_reg,k / mean_k var_unreg,k)·100
double variance_improvement(const ReplicationSet& regularized,
                            const ReplicationSet& unregularized);

}  // namespace sparsenls
