#pragma once

#include <cstdint>
#include <limits>
#include <string>

#include "sparsenls/models.hpp"
#include "sparsenls/types.hpp"

namespace sparsenls {

struct SolverConfig {
    double mu0 = 1e-3;
    double nu = 2.0;
    std::size_t max_outer = 200;
    double step_tol = 1e-6;  // infinity-norm of the accepted step
    double radius = std::numeric_limits<double>::infinity();  // T_θ; ∞ = unregularized
    double subproblem_tol = 1e-10;
    std::size_t subproblem_max_iter = 10000;
    double mu_limit = 1e10;
    double active_threshold = 0.001;
};

enum class SolveStatus { converged, max_outer, stalled };

struct TraceRow {
    std::size_t iter = 0;
    double sse = 0.0;
    double mu = 0.0;
    double step_inf = 0.0;
    double l1_norm = 0.0;
};

struct SolveResult {
    DeviationVector deviations;
    ParamVector params;  // physical frame
    double sse = 0.0;
    double vaf = 0.0;
    std::size_t outer_iters = 0;
    SolveStatus status = SolveStatus::converged;
    std::vector<TraceRow> trace;  // row 0 is the starting point, then accepted steps
    std::vector<bool> active_mask;
    double wall_time = 0.0;
};

// Outer LM loop: linearize, solve the L1-ball subproblem at damping μ,
// accept iff S_n strictly decreases (μ/ν), else reject (μ·ν) and re-solve
// at the same linearization. Stops on a small accepted step, max_outer, or
// μ exceeding mu_limit (status stalled, best iterate kept).
SolveResult fit(const NonlinearModel& model, const Dataset& data, const DeviationVector& init,
                const SolverConfig& cfg);

// fit from θ̄ plus n_starts−1 random feasible initializations; winner is the
// smallest (sse, start index). Starts run in parallel.
SolveResult fit_multistart(const NonlinearModel& model, const Dataset& data,
                           const SolverConfig& cfg, std::size_t n_starts, std::uint64_t seed);

void write_trace_csv(const std::string& path, const SolveResult& result);

}  // namespace sparsenls
