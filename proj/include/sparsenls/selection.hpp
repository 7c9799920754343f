#pragma once

#include <string>
#include <vector>

#include "sparsenls/solver.hpp"

namespace sparsenls {

struct SelectionConfig {
    std::size_t n_star = 1;
    double t_init = 1.0;
    double select_threshold = 0.001;  // normalized deviation magnitude
    std::size_t max_rounds = 100;
};

struct SelectionRound {
    std::size_t round = 0;
    double radius = 0.0;
    std::size_t num_params = 0;
};

struct SelectionOutcome {
    double radius = 0.0;
    std::vector<std::string> selected;  // spec order
    SolveResult result;
    std::size_t rounds = 0;
    std::vector<SelectionRound> round_trace;
};

class SelectionError : public Error {
public:
    SelectionError(const std::string& msg, std::vector<SelectionRound> trace)
        : Error(msg), round_trace(std::move(trace)) {}
    std::vector<SelectionRound> round_trace;
};

// Adjusts T_θ until exactly n_star deviations exceed the threshold:
// linear update T ← T − (NumParams − n*)/(p + n*) clamped at 0, switching
// to bisection once consecutive rounds bracket the target.
SelectionOutcome select(const NonlinearModel& model, const Dataset& data,
                        const SelectionConfig& cfg, const SolverConfig& solver_cfg);

// Most common selected subset (compared as name sets); ties break to the
// lexicographically smallest sorted name tuple.
std::vector<std::string> most_frequent_subset(const std::vector<SelectionOutcome>& outcomes);

}  // namespace sparsenls
