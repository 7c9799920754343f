#include "sparsenls/selection.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace sparsenls {

SelectionOutcome select(const NonlinearModel& model, const Dataset& data,
                        const SelectionConfig& cfg, const SolverConfig& solver_cfg) {
    const ParameterSpec& spec = model.spec();
    const std::size_t p = spec.free_count();
    if (cfg.n_star < 1 || cfg.n_star > p)
        throw InputError("n_star must lie in [1, free parameter count]");
    if (!(cfg.select_threshold > 0.0)) throw InputError("selection threshold must be positive");
    if (!(cfg.t_init > 0.0)) throw InputError("initial radius must be positive");

    SelectionOutcome out;
    double radius = cfg.t_init;
    bool bracketed = false;
    double brack_few = 0.0;   // radius that selected fewer than n_star
    double brack_many = 0.0;  // radius that selected more than n_star
    bool have_prev = false;
    double prev_radius = 0.0;
    int prev_sign = 0;

    for (std::size_t round = 1; round <= cfg.max_rounds; ++round) {
        SolverConfig scfg = solver_cfg;
        scfg.radius = radius;
        scfg.active_threshold = cfg.select_threshold;
        SolveResult res = fit(model, data, DeviationVector{Vec(p, 0.0)}, scfg);

        std::size_t num = 0;
        for (std::size_t k = 0; k < p; ++k)
            if (std::abs(res.deviations.values[k]) > cfg.select_threshold) ++num;

        out.round_trace.push_back({round, radius, num});
        out.rounds = round;

        if (num == cfg.n_star) {
            out.radius = radius;
            out.result = std::move(res);
            for (std::size_t k = 0; k < p; ++k)
                if (std::abs(out.result.deviations.values[k]) > cfg.select_threshold)
                    out.selected.push_back(spec.free_entry(k).name);
            return out;
        }

        int sign = num > cfg.n_star ? 1 : -1;
        if (radius == 0.0 && num > cfg.n_star)
            throw SelectionError("target sparsity infeasible: radius 0 still selects " +
                                     std::to_string(num) + " parameters",
                                 out.round_trace);

        if (!bracketed && have_prev && sign != prev_sign) {
            bracketed = true;
            brack_few = sign < 0 ? radius : prev_radius;
            brack_many = sign > 0 ? radius : prev_radius;
        } else if (bracketed) {
            (sign > 0 ? brack_many : brack_few) = radius;
        }
        have_prev = true;
        prev_radius = radius;
        prev_sign = sign;

        if (bracketed) {
            radius = 0.5 * (brack_few + brack_many);
        } else {
            radius -= static_cast<double>(static_cast<long long>(num) -
                                          static_cast<long long>(cfg.n_star)) /
                      static_cast<double>(p + cfg.n_star);
            if (radius < 0.0) radius = 0.0;
        }
    }
    throw SelectionError("selection did not reach the target count in " +
                             std::to_string(cfg.max_rounds) + " rounds",
                         out.round_trace);
}

std::vector<std::string> most_frequent_subset(const std::vector<SelectionOutcome>& outcomes) {
    if (outcomes.empty()) throw InputError("most_frequent_subset needs at least one outcome");
    std::map<std::vector<std::string>, std::size_t> counts;
    for (const SelectionOutcome& o : outcomes) {
        std::vector<std::string> key = o.selected;
        std::sort(key.begin(), key.end());
        ++counts[key];
    }
    // map iteration is ordered, so the first maximal count is the
    // lexicographically smallest tie-break winner
    std::vector<std::string> best;
    std::size_t best_count = 0;
    for (const auto& [subset, count] : counts)
        if (count > best_count) {
            best = subset;
            best_count = count;
        }
    return best;
}

}  // namespace sparsenls
