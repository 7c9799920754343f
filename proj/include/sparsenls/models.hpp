#pragma once

#include <memory>
#include <utility>
#include <vector>

#include "sparsenls/dataset.hpp"
#include "sparsenls/param_space.hpp"
#include "sparsenls/types.hpp"

namespace sparsenls {

// Residuals and Jacobian at one deviation point.
// jacobian(i,k) = ∂r_i/∂θ̃_k in normalized-deviation coordinates.
struct ModelEval {
    Vec residuals;
    Matrix jacobian;
};

class NonlinearModel {
public:
    virtual ~NonlinearModel() = default;

    virtual const ParameterSpec& spec() const = 0;

    // Prediction series for physical-frame parameters. Deterministic; throws
    // EvaluationError on non-finite or unbounded output.
    virtual Vec predict(const Dataset& data, const ParamVector& physical) const = 0;

    // Analytic ∂ŷ_i/∂θ_k (physical frame), n x free_count. Models without
    // derivatives return false and evaluate() falls back to differences.
    virtual bool predict_jacobian(const Dataset& data, const ParamVector& physical,
                                  Matrix& out) const {
        (void)data;
        (void)physical;
        (void)out;
        return false;
    }
};

// Residuals y - predict and the Jacobian in normalized-deviation frame,
// analytic when provided, otherwise central differences with h = 1e-6 on
// the normalized coordinates. FD columns evaluate in parallel.
ModelEval evaluate(const NonlinearModel& model, const Dataset& data, const DeviationVector& d);

// y = X·θ (physical frame). X column count must equal spec free count.
std::shared_ptr<NonlinearModel> linear_model(Matrix x, ParameterSpec spec);

// f(x;θ) = Σ_{j=1..p/2} a_j·exp(−b_j·x) with θ = (a_1,b_1,a_2,b_2,…),
// bounds [0.1, 5] on every entry. p must be even and ≥ 2. Typical decay
// rates are spread so terms stay distinguishable.
std::shared_ptr<NonlinearModel> expsum_model(std::size_t p);

// Closed-loop head-neck tracking surrogate, 12 free parameters plus fixed
// J and T_c; simulated at the dataset sample rate. Overrides replace
// typical values (physical frame) to place the operating point.
std::shared_ptr<NonlinearModel> headneck_surrogate(
    const std::vector<std::pair<std::string, double>>& typical_overrides = {});

}  // namespace sparsenls
