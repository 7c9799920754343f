#include "sparsenls/solver.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <omp.h>

#include "sparsenls/kernels.hpp"
#include "sparsenls/l1.hpp"
#include "sparsenls/metrics.hpp"
#include "sparsenls/rng.hpp"

namespace sparsenls {

namespace {

double l1_norm(const Vec& v) {
    double s = 0.0;
    for (double x : v) s += std::abs(x);
    return s;
}

double inf_norm_diff(const Vec& a, const Vec& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

void validate(const SolverConfig& cfg) {
    if (!(cfg.mu0 > 0.0)) throw InputError("mu0 must be positive");
    if (!(cfg.nu > 1.0)) throw InputError("nu must exceed 1");
    if (!(cfg.step_tol > 0.0) || !(cfg.subproblem_tol > 0.0))
        throw InputError("solver tolerances must be positive");
    if (std::isnan(cfg.radius) || cfg.radius < 0.0)
        throw InputError("radius must be non-negative or infinite");
}

struct Linearization {
    Matrix gram;  // JᵀJ
    Vec jtr;      // Jᵀr̃
    Vec diag;     // damping diagonal, floored away from zero
};

Linearization linearize(const ModelEval& eval) {
    Linearization lin;
    kernels::gram(eval.jacobian, lin.gram);
    kernels::jt_vec(eval.jacobian, eval.residuals, lin.jtr);
    const std::size_t p = lin.gram.rows;
    lin.diag.resize(p);
    double max_diag = 0.0;
    for (std::size_t k = 0; k < p; ++k) max_diag = std::max(max_diag, lin.gram(k, k));
    double floor = max_diag > 0.0 ? 1e-12 * max_diag : 1.0;
    for (std::size_t k = 0; k < p; ++k) lin.diag[k] = std::max(lin.gram(k, k), floor);
    return lin;
}

void finish(SolveResult& out, const NonlinearModel& model, const Dataset& data,
            const DeviationVector& dev, const ModelEval& eval, const SolverConfig& cfg,
            std::chrono::steady_clock::time_point t0) {
    const ParameterSpec& spec = model.spec();
    out.deviations = dev;
    out.params = denormalize(spec, recompose(spec, dev));
    out.sse = kernels::sum_squares(eval.residuals);
    Vec yhat(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) yhat[i] = data.y[i] - eval.residuals[i];
    out.vaf = vaf(data.y, yhat);
    out.active_mask.assign(dev.values.size(), false);
    for (std::size_t k = 0; k < dev.values.size(); ++k)
        out.active_mask[k] = std::abs(dev.values[k]) > cfg.active_threshold;
    out.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

SolveResult fit(const NonlinearModel& model, const Dataset& data, const DeviationVector& init,
                const SolverConfig& cfg) {
    validate(cfg);
    const auto t0 = std::chrono::steady_clock::now();
    const std::size_t p = model.spec().free_count();
    if (init.values.size() != p) throw InputError("initial deviation has wrong length");

    SolveResult out;

    if (cfg.radius == 0.0) {
        DeviationVector dev{Vec(p, 0.0)};
        ModelEval eval = evaluate(model, data, dev);
        out.trace.push_back({0, kernels::sum_squares(eval.residuals), cfg.mu0, 0.0, 0.0});
        out.status = SolveStatus::converged;
        finish(out, model, data, dev, eval, cfg, t0);
        return out;
    }
    const bool constrained = !std::isinf(cfg.radius);

    DeviationVector dev{constrained ? project_l1(init.values, cfg.radius) : init.values};
    ModelEval eval = evaluate(model, data, dev);
    double sse = kernels::sum_squares(eval.residuals);
    double mu = cfg.mu0;

    out.trace.push_back({0, sse, mu, 0.0, l1_norm(dev.values)});
    out.status = SolveStatus::max_outer;

    std::size_t outer = 0;
    bool need_linearize = true;
    Linearization lin;
    while (outer < cfg.max_outer) {
        if (need_linearize) {
            lin = linearize(eval);
            need_linearize = false;
        }

        // Λ = JᵀJ + μ·diag(JᵀJ), g = Λθ̃ʲ − Jᵀr̃
        Matrix lambda = lin.gram;
        for (std::size_t k = 0; k < p; ++k) lambda(k, k) = lin.gram(k, k) + mu * lin.diag[k];
        Vec g(p);
        kernels::matvec(lambda, dev.values, g);
        for (std::size_t k = 0; k < p; ++k) g[k] -= lin.jtr[k];

        Vec cand;
        if (constrained) {
            SubproblemSpec sp{std::move(lambda), std::move(g), cfg.radius};
            try {
                cand = solve_subproblem(sp, dev.values, cfg.subproblem_tol,
                                        cfg.subproblem_max_iter)
                           .x;
            } catch (const SubproblemError& e) {
                cand = e.best.x;
            }
        } else {
            cand = kernels::cholesky_solve(std::move(lambda), std::move(g));
        }

        ++outer;

        bool accepted = false;
        double cand_sse = 0.0;
        ModelEval cand_eval;
        try {
            cand_eval = evaluate(model, data, DeviationVector{cand});
            cand_sse = kernels::sum_squares(cand_eval.residuals);
            accepted = cand_sse < sse;
        } catch (const EvaluationError&) {
            accepted = false;  // unstable candidate handled like any failed step
        }

        if (accepted) {
            double step = inf_norm_diff(cand, dev.values);
            dev.values = std::move(cand);
            eval = std::move(cand_eval);
            sse = cand_sse;
            mu /= cfg.nu;
            need_linearize = true;
            out.trace.push_back({outer, sse, mu, step, l1_norm(dev.values)});
            if (step < cfg.step_tol) {
                out.status = SolveStatus::converged;
                break;
            }
        } else {
            mu *= cfg.nu;
            if (mu > cfg.mu_limit) {
                out.status = SolveStatus::stalled;
                break;
            }
        }
    }

    out.outer_iters = outer;
    finish(out, model, data, dev, eval, cfg, t0);
    return out;
}

SolveResult fit_multistart(const NonlinearModel& model, const Dataset& data,
                           const SolverConfig& cfg, std::size_t n_starts, std::uint64_t seed) {
    validate(cfg);
    if (n_starts < 1) throw InputError("n_starts must be at least 1");
    const std::size_t p = model.spec().free_count();

    std::vector<Vec> inits(n_starts, Vec(p, 0.0));
    const double ball = std::isinf(cfg.radius) ? 1.0 : cfg.radius;
    for (std::size_t s = 1; s < n_starts; ++s) {
        Rng rng = Rng::stream(seed, s);
        Vec raw(p);
        for (std::size_t k = 0; k < p; ++k) raw[k] = rng.uniform(-1.0, 1.0);
        double target = ball * rng.uniform();
        double norm = l1_norm(raw);
        if (norm > 0.0)
            for (double& x : raw) x *= target / norm;
        inits[s] = std::move(raw);
    }

    std::vector<SolveResult> results(n_starts);
    std::vector<std::string> failures(n_starts);
    std::vector<char> ok(n_starts, 0);
#pragma omp parallel for schedule(dynamic)
    for (std::size_t s = 0; s < n_starts; ++s) {
        try {
            results[s] = fit(model, data, DeviationVector{inits[s]}, cfg);
            ok[s] = 1;
        } catch (const std::exception& e) {
            failures[s] = e.what();
        }
    }

    std::size_t best = n_starts;
    for (std::size_t s = 0; s < n_starts; ++s) {
        if (!ok[s]) continue;
        if (best == n_starts || results[s].sse < results[best].sse) best = s;
    }
    if (best == n_starts) {
        std::string msg = "all starts failed:";
        for (std::size_t s = 0; s < n_starts; ++s)
            msg += " [start " + std::to_string(s) + ": " + failures[s] + "]";
        throw Error(msg);
    }
    return results[best];
}

void write_trace_csv(const std::string& path, const SolveResult& result) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write trace file: " + path);
    out << "iter,sse,mu,step_inf,l1_norm\n";
    char buf[160];
    for (const TraceRow& row : result.trace) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g\n", row.iter, row.sse,
                      row.mu, row.step_inf, row.l1_norm);
        out << buf;
    }
    if (!out) throw InputError("write failed: " + path);
}

}  // namespace sparsenls
