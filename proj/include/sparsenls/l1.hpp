#pragma once

#include <cstddef>

#include "sparsenls/types.hpp"

namespace sparsenls {

// Linear subproblem solved inside each LM iteration:
// minimize ‖lambda·x − target‖₂² subject to ‖x‖₁ ≤ radius.
struct SubproblemSpec {
    Matrix lambda;  // p x p, symmetric positive definite
    Vec target;     // g = Λθ̃ʲ − Jᵀr̃
    double radius = 0.0;
};

struct SubproblemResult {
    Vec x;
    std::size_t iterations = 0;
    double pg_residual = 0.0;  // ‖x − P(x − ∇f(x)/L)‖₂ at exit
    bool converged = false;
};

// Thrown when the inner iteration cap is reached; carries the best
// iterate found so callers can still make progress.
class SubproblemError : public Error {
public:
    SubproblemError(const std::string& msg, SubproblemResult best_result)
        : Error(msg), best(std::move(best_result)) {}
    SubproblemResult best;
};

// Exact Euclidean projection onto {‖x‖₁ ≤ radius}: sort-based
// soft-threshold search, O(p log p). radius < 0 throws InputError.
Vec project_l1(const Vec& v, double radius);

// Monotone accelerated projected gradient with step 1/L, L from power
// iteration on ΛᵀΛ. Stops when the projected-gradient residual drops to
// tol; throws SubproblemError after max_iter iterations. objective_trace,
// when given, receives the retained objective value per iteration.
SubproblemResult solve_subproblem(const SubproblemSpec& sp, const Vec& warm_start,
                                  double tol = 1e-10, std::size_t max_iter = 10000,
                                  Vec* objective_trace = nullptr);

}  // namespace sparsenls
