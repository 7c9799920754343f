#include "sparsenls/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>

#include "sparsenls/kernels.hpp"
#include "sparsenls/rng.hpp"
#include "sparsenls/selection.hpp"

namespace sparsenls {

namespace {

double l1_norm(const Vec& v) {
    double s = 0.0;
    for (double x : v) s += std::abs(x);
    return s;
}

double median(Vec v) {
    if (v.empty()) throw MetricError("median of empty set");
    std::sort(v.begin(), v.end());
    std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

void validate_config(const StudyConfig& cfg, const NonlinearModel& model) {
    if (cfg.replications < 2) throw InputError("study needs at least 2 replications");
    if (cfg.sample_sizes.empty()) throw InputError("study needs at least one sample size");
    for (std::size_t i = 1; i < cfg.sample_sizes.size(); ++i)
        if (cfg.sample_sizes[i] <= cfg.sample_sizes[i - 1])
            throw InputError("sample sizes must be strictly increasing");
    if (!(cfg.sigma >= 0.0)) throw InputError("noise fraction must be non-negative");
    if (cfg.truth_dev.size() != model.spec().free_count())
        throw InputError("truth deviation length does not match the model");
    if (cfg.policy == RadiusPolicy::fixed && !(cfg.radius >= 0.0))
        throw InputError("fixed radius policy needs a non-negative radius");
    if (cfg.policy == RadiusPolicy::selection &&
        (cfg.n_star < 1 || cfg.n_star > model.spec().free_count()))
        throw InputError("selection policy needs 1 <= n_star <= p");
}

double resolve_radius(const StudyConfig& cfg) {
    return cfg.policy == RadiusPolicy::fixed ? cfg.radius : l1_norm(cfg.truth_dev);
}

// Regularized per-replication estimate under the configured policy.
Vec regularized_estimate(const NonlinearModel& model, const Dataset& data,
                         const StudyConfig& cfg) {
    if (cfg.policy == RadiusPolicy::selection) {
        SelectionConfig sel;
        sel.n_star = cfg.n_star;
        return select(model, data, sel, SolverConfig{}).result.deviations.values;
    }
    SolverConfig scfg;
    scfg.radius = resolve_radius(cfg);
    return fit(model, data, DeviationVector{Vec(cfg.truth_dev.size(), 0.0)}, scfg)
        .deviations.values;
}

std::vector<std::size_t> support_of(const Vec& truth) {
    std::vector<std::size_t> s;
    for (std::size_t k = 0; k < truth.size(); ++k)
        if (truth[k] != 0.0) s.push_back(k);
    return s;
}

struct CellAccumulator {
    Matrix estimates;  // R x p, rows of failed replications left zero
    std::vector<char> ok;
    std::size_t failures() const {
        return ok.size() - static_cast<std::size_t>(std::count(ok.begin(), ok.end(), 1));
    }
    ReplicationSet successes(std::optional<Vec> truth, std::vector<std::string> labels) const {
        std::size_t r_eff = ok.size() - failures();
        Matrix m(r_eff, estimates.cols);
        std::size_t row = 0;
        for (std::size_t r = 0; r < ok.size(); ++r) {
            if (!ok[r]) continue;
            for (std::size_t k = 0; k < estimates.cols; ++k) m(row, k) = estimates(r, k);
            ++row;
        }
        return ReplicationSet{std::move(m), std::move(truth), std::move(labels)};
    }
};

void require_yield(const CellAccumulator& acc, std::size_t n, const char* what) {
    std::size_t failed = acc.failures();
    if (failed * 5 > acc.ok.size())
        throw StudyError(std::string(what) + " study lost more than 20% of replications at n = " +
                         std::to_string(n) + " (" + std::to_string(failed) + "/" +
                         std::to_string(acc.ok.size()) + ")");
}

std::vector<std::string> free_names(const NonlinearModel& model) {
    std::vector<std::string> names;
    for (std::size_t k = 0; k < model.spec().free_count(); ++k)
        names.push_back(model.spec().free_entry(k).name);
    return names;
}

}  // namespace

std::shared_ptr<NonlinearModel> make_study_model(const StudyConfig& cfg) {
    if (cfg.model_id == "headneck") return headneck_surrogate(cfg.typical_overrides);
    if (cfg.model_id.rfind("expsum", 0) == 0) {
        char* end = nullptr;
        long p = std::strtol(cfg.model_id.c_str() + 6, &end, 10);
        if (end && *end == '\0' && p >= 2)
            return expsum_model(static_cast<std::size_t>(p));
    }
    throw InputError("unknown study model: " + cfg.model_id);
}

Dataset make_study_dataset(const StudyConfig& cfg, const NonlinearModel& model,
                           std::size_t n, std::uint64_t replication) {
    const ParameterSpec& spec = model.spec();
    ParamVector truth_phys =
        denormalize(spec, recompose(spec, DeviationVector{cfg.truth_dev}));

    Dataset shell = [&] {
        if (cfg.model_id == "headneck") {
            std::uint64_t ref_seed = Rng::mix(cfg.seed ^ Rng::mix(2 * replication + 1));
            return generate_reference(static_cast<double>(n) / cfg.sample_rate,
                                      cfg.sample_rate, ref_seed);
        }
        double rate = static_cast<double>(n) / cfg.duration_s;
        Vec t(n), x(n);
        for (std::size_t i = 0; i < n; ++i) {
            t[i] = static_cast<double>(i) / rate;
            x[i] = t[i];
        }
        return make_dataset(std::move(t), std::move(x), Vec(n, 0.0), rate);
    }();

    Vec y = model.predict(shell, truth_phys);
    if (cfg.sigma > 0.0) {
        double rms = std::sqrt(kernels::serial::sum_squares(y) / static_cast<double>(n));
        double sd = cfg.sigma * rms;
        Rng noise = Rng::stream(cfg.seed, 2 * replication);
        for (auto& v : y) v += sd * noise.gauss();
    }
    return make_dataset(shell.t, shell.x, std::move(y), shell.sample_rate);
}

StudyReport run_bias_variance_study(const StudyConfig& cfg) {
    auto model = make_study_model(cfg);
    validate_config(cfg, *model);
    const std::size_t p = cfg.truth_dev.size();
    const std::size_t reps = cfg.replications;

    StudyReport report;
    report.labels = free_names(*model);

    for (std::size_t n : cfg.sample_sizes) {
        CellAccumulator reg{Matrix(reps, p), std::vector<char>(reps, 0)};
        CellAccumulator unreg{Matrix(reps, p), std::vector<char>(reps, 0)};

#pragma omp parallel for schedule(dynamic)
        for (std::size_t r = 0; r < reps; ++r) {
            try {
                Dataset data = make_study_dataset(cfg, *model, n, r);
                Vec est_reg = regularized_estimate(*model, data, cfg);
                SolverConfig plain;
                Vec est_unreg =
                    fit(*model, data, DeviationVector{Vec(p, 0.0)}, plain).deviations.values;
                for (std::size_t k = 0; k < p; ++k) {
                    reg.estimates(r, k) = est_reg[k];
                    unreg.estimates(r, k) = est_unreg[k];
                }
                reg.ok[r] = 1;
                unreg.ok[r] = 1;
            } catch (const Error&) {
            }
        }
        require_yield(reg, n, "bias-variance");

        ReplicationSet reg_set = reg.successes(cfg.truth_dev, report.labels);
        ReplicationSet unreg_set = unreg.successes(cfg.truth_dev, report.labels);
        BiasVariance bv_reg = bias_variance(reg_set);
        BiasVariance bv_unreg = bias_variance(unreg_set);

        report.cells.push_back(
            {n, "lasso", bv_reg.bias, bv_reg.variance, reg_set.estimates.rows, reg.failures()});
        report.cells.push_back({n, "unregularized", bv_unreg.bias, bv_unreg.variance,
                                unreg_set.estimates.rows, unreg.failures()});

        try {
            report.variance_improvement_pct = variance_improvement(reg_set, unreg_set);
        } catch (const MetricError&) {
            // noiseless arms have zero unregularized variance; leave NaN
        }
        report.median_bias_regularized = median(bv_reg.bias);
        report.median_bias_unregularized = median(bv_unreg.bias);
    }
    return report;
}

StudyReport run_consistency_study(const StudyConfig& cfg) {
    auto model = make_study_model(cfg);
    validate_config(cfg, *model);
    if (cfg.sample_sizes.size() < 3)
        throw InputError("consistency study needs at least 3 sample sizes");
    if (cfg.sample_sizes.back() < 4 * cfg.sample_sizes.front())
        throw InputError("consistency study sample sizes must span a factor of 4");

    const std::size_t p = cfg.truth_dev.size();
    const std::size_t reps = cfg.replications;
    const std::vector<std::size_t> support = support_of(cfg.truth_dev);
    if (support.empty()) throw InputError("consistency study needs a nonzero truth");

    StudyReport report;
    report.labels = free_names(*model);

    for (std::size_t n : cfg.sample_sizes) {
        CellAccumulator acc{Matrix(reps, p), std::vector<char>(reps, 0)};

#pragma omp parallel for schedule(dynamic)
        for (std::size_t r = 0; r < reps; ++r) {
            try {
                Dataset data = make_study_dataset(cfg, *model, n, r);
                Vec est = regularized_estimate(*model, data, cfg);
                for (std::size_t k = 0; k < p; ++k) acc.estimates(r, k) = est[k];
                acc.ok[r] = 1;
            } catch (const Error&) {
            }
        }
        require_yield(acc, n, "consistency");

        double sq = 0.0;
        std::size_t count = 0;
        for (std::size_t r = 0; r < reps; ++r) {
            if (!acc.ok[r]) continue;
            for (std::size_t k : support) {
                double e = acc.estimates(r, k) - cfg.truth_dev[k];
                sq += e * e;
            }
            ++count;
        }
        double rmse = std::sqrt(sq / static_cast<double>(count * support.size()));
        report.rmse_by_n.emplace_back(n, rmse);

        ReplicationSet set = acc.successes(cfg.truth_dev, report.labels);
        BiasVariance bv = bias_variance(set);
        report.cells.push_back(
            {n, "lasso", bv.bias, bv.variance, set.estimates.rows, acc.failures()});
    }

    // least-squares slope of log RMSE against log n
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (const auto& [n, rmse] : report.rmse_by_n) {
        double lx = std::log(static_cast<double>(n)), ly = std::log(rmse);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    double m = static_cast<double>(report.rmse_by_n.size());
    report.consistency_slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    return report;
}

StudyReport run_oracle_study(const StudyConfig& cfg) {
    auto model = make_study_model(cfg);
    validate_config(cfg, *model);
    const std::size_t p = cfg.truth_dev.size();
    const std::size_t reps = cfg.replications;
    const std::vector<std::size_t> support = support_of(cfg.truth_dev);
    if (support.empty() || support.size() >= p)
        throw InputError("oracle study needs a sparse nonzero truth");

    StudyReport report;
    report.labels = free_names(*model);
    const double threshold = 0.001;

    for (std::size_t n : cfg.sample_sizes) {
        CellAccumulator acc{Matrix(reps, p), std::vector<char>(reps, 0)};
        std::vector<char> recovered(reps, 0);

#pragma omp parallel for schedule(dynamic)
        for (std::size_t r = 0; r < reps; ++r) {
            try {
                Dataset data = make_study_dataset(cfg, *model, n, r);
                Vec est = regularized_estimate(*model, data, cfg);
                for (std::size_t k = 0; k < p; ++k) acc.estimates(r, k) = est[k];
                bool exact = true;
                for (std::size_t k = 0; k < p; ++k) {
                    bool active = std::abs(est[k]) > threshold;
                    bool truth_active = cfg.truth_dev[k] != 0.0;
                    if (active != truth_active) exact = false;
                }
                recovered[r] = exact ? 1 : 0;
                acc.ok[r] = 1;
            } catch (const Error&) {
            }
        }
        require_yield(acc, n, "oracle");

        // failures count against recovery, not only against the yield
        double rate = static_cast<double>(std::count(recovered.begin(), recovered.end(), 1)) /
                      static_cast<double>(reps);
        report.recovery_by_n.emplace_back(n, rate);

        ReplicationSet set = acc.successes(cfg.truth_dev, report.labels);
        BiasVariance bv = bias_variance(set);
        report.cells.push_back(
            {n, "lasso", bv.bias, bv.variance, set.estimates.rows, acc.failures()});

        if (n == cfg.sample_sizes.back()) {
            report.qq_correlation.clear();
            for (std::size_t k : support) {
                Vec coord;
                for (std::size_t r = 0; r < reps; ++r)
                    if (acc.ok[r]) coord.push_back(acc.estimates(r, k));
                report.qq_correlation.push_back(qq_correlation(coord));
            }
        }
    }
    return report;
}

StudyReport run_timing_benchmark(const StudyConfig& cfg) {
    auto model = make_study_model(cfg);
    validate_config(cfg, *model);
    const std::size_t p = cfg.truth_dev.size();
    const std::size_t n = cfg.sample_sizes.front();
    const double radius = resolve_radius(cfg);

    StudyReport report;
    report.labels = free_names(*model);

    Dataset data = make_study_dataset(cfg, *model, n, 0);
    const std::size_t repeats = std::max<std::size_t>(cfg.replications, 5);

    Vec lm_times, nm_times;
    SolveResult lm_last;
    SimplexResult nm_last;
    for (std::size_t rep = 0; rep < repeats; ++rep) {
        auto t0 = std::chrono::steady_clock::now();
        SolverConfig scfg;
        scfg.radius = radius;
        lm_last = fit(*model, data, DeviationVector{Vec(p, 0.0)}, scfg);
        lm_times.push_back(
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());

        t0 = std::chrono::steady_clock::now();
        nm_last = fit_simplex_penalty(*model, data, radius);
        nm_times.push_back(
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }

    report.lm_median_s = median(lm_times);
    report.baseline_median_s = median(nm_times);
    report.speedup = report.baseline_median_s / report.lm_median_s;
    report.lm_sse = lm_last.sse;
    report.baseline_sse = nm_last.sse;
    report.baseline_converged = nm_last.converged;
    return report;
}

SimplexResult fit_simplex_penalty(const NonlinearModel& model, const Dataset& data,
                                  double radius, std::size_t max_iter, double tol) {
    const std::size_t p = model.spec().free_count();
    if (!(radius >= 0.0) && !std::isinf(radius))
        throw InputError("simplex baseline radius must be non-negative or infinite");

    SimplexResult out;
    double weight = 1.0;

    auto penalized = [&](const Vec& dev) {
        double f;
        try {
            ModelEval eval = evaluate(model, data, DeviationVector{dev});
            f = kernels::serial::sum_squares(eval.residuals);
        } catch (const EvaluationError&) {
            return std::numeric_limits<double>::infinity();
        }
        ++out.evaluations;
        if (std::isinf(radius)) return f;
        double excess = l1_norm(dev) - radius;
        return excess > 0.0 ? f + weight * excess : f;
    };

    Vec incumbent(p, 0.0);
    Vec best_pt = incumbent;
    double best_sse = std::numeric_limits<double>::infinity();
    const int max_rounds = 60;
    int stagnant = 0;
    bool exhausted = true;
    for (int round = 0; round < max_rounds; ++round) {
        // fresh simplex around the incumbent, standard coefficients
        std::vector<Vec> vx(p + 1, incumbent);
        double delta = round == 0 ? 0.05 : (stagnant > 0 ? 0.002 : 0.01);
        for (std::size_t k = 0; k < p; ++k) vx[k + 1][k] += delta;
        Vec fv(p + 1);
        for (std::size_t i = 0; i <= p; ++i) fv[i] = penalized(vx[i]);

        bool settled = false;
        for (std::size_t it = 0; it < max_iter; ++it) {
            std::vector<std::size_t> order(p + 1);
            for (std::size_t i = 0; i <= p; ++i) order[i] = i;
            std::sort(order.begin(), order.end(),
                      [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
            std::size_t lo = order[0], hi = order[p], second = order[p - 1];

            if (std::abs(fv[hi] - fv[lo]) <= tol * (1.0 + std::abs(fv[lo]))) {
                settled = true;
                break;
            }

            Vec centroid(p, 0.0);
            for (std::size_t i = 0; i <= p; ++i) {
                if (i == hi) continue;
                for (std::size_t k = 0; k < p; ++k) centroid[k] += vx[i][k];
            }
            for (double& c : centroid) c /= static_cast<double>(p);

            auto blend = [&](double coef) {
                Vec v(p);
                for (std::size_t k = 0; k < p; ++k)
                    v[k] = centroid[k] + coef * (vx[hi][k] - centroid[k]);
                return v;
            };

            Vec refl = blend(-1.0);
            double f_refl = penalized(refl);
            if (f_refl < fv[lo]) {
                Vec expa = blend(-2.0);
                double f_expa = penalized(expa);
                if (f_expa < f_refl) {
                    vx[hi] = std::move(expa);
                    fv[hi] = f_expa;
                } else {
                    vx[hi] = std::move(refl);
                    fv[hi] = f_refl;
                }
            } else if (f_refl < fv[second]) {
                vx[hi] = std::move(refl);
                fv[hi] = f_refl;
            } else {
                Vec contr = blend(f_refl < fv[hi] ? -0.5 : 0.5);
                double f_contr = penalized(contr);
                if (f_contr < std::min(f_refl, fv[hi])) {
                    vx[hi] = std::move(contr);
                    fv[hi] = f_contr;
                } else {
                    for (std::size_t i = 0; i <= p; ++i) {
                        if (i == lo) continue;
                        for (std::size_t k = 0; k < p; ++k)
                            vx[i][k] = vx[lo][k] + 0.5 * (vx[i][k] - vx[lo][k]);
                        fv[i] = penalized(vx[i]);
                    }
                }
            }
        }

        std::size_t lo = 0;
        for (std::size_t i = 1; i <= p; ++i)
            if (fv[i] < fv[lo]) lo = i;
        incumbent = vx[lo];
        (void)settled;

        if (!std::isinf(radius) && l1_norm(incumbent) > radius + 1e-6) {
            // still outside the ball: ramp the exact penalty and retry
            weight *= 2.0;
            continue;
        }

        double sse_now;
        try {
            ModelEval eval = evaluate(model, data, DeviationVector{incumbent});
            sse_now = kernels::serial::sum_squares(eval.residuals);
            ++out.evaluations;
        } catch (const EvaluationError&) {
            sse_now = std::numeric_limits<double>::infinity();
        }
        if (sse_now < best_sse) {
            bool real_gain = sse_now < best_sse * (1.0 - 1e-7);
            best_sse = sse_now;
            best_pt = incumbent;
            stagnant = real_gain ? 0 : stagnant + 1;
        } else {
            incumbent = best_pt;
            ++stagnant;
        }
        // three restarts without measurable progress ends the polish phase
        if (stagnant >= 3) {
            exhausted = false;
            break;
        }
    }

    out.dev = best_pt;
    out.sse = best_sse;
    out.penalty_weight = weight;
    out.converged = !exhausted && std::isfinite(best_sse) &&
                    (std::isinf(radius) || l1_norm(best_pt) <= radius + 1e-6);
    return out;
}

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw InputError("normal quantile needs p in (0,1)");
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425, phigh = 1.0 - plow;

    double x;
    if (p < plow) {
        double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= phigh) {
        double q = p - 0.5, r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }

    // one Halley step against the erfc-based CDF
    double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
    double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
    return x - u / (1.0 + x * u / 2.0);
}

double qq_correlation(const Vec& sample) {
    if (sample.size() < 3) throw MetricError("qq correlation needs at least 3 samples");
    Vec sorted = sample;
    std::sort(sorted.begin(), sorted.end());
    const double m = static_cast<double>(sorted.size());

    Vec q(sorted.size());
    for (std::size_t i = 0; i < sorted.size(); ++i)
        q[i] = normal_quantile((static_cast<double>(i) + 1.0 - 0.375) / (m + 0.25));

    double ms = 0.0, mq = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        ms += sorted[i];
        mq += q[i];
    }
    ms /= m;
    mq /= m;
    double css = 0.0, cqq = 0.0, csq = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        double ds = sorted[i] - ms, dq = q[i] - mq;
        css += ds * ds;
        cqq += dq * dq;
        csq += ds * dq;
    }
    if (css == 0.0 || cqq == 0.0) throw MetricError("qq correlation undefined for constant input");
    return csq / std::sqrt(css * cqq);
}

}  // namespace sparsenls
