#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "sparsenls/metrics.hpp"
#include "sparsenls/models.hpp"
#include "sparsenls/solver.hpp"

namespace sparsenls {

// How the constraint radius is chosen for the regularized arm of a study.
enum class RadiusPolicy { fixed, oracle, selection };

struct StudyConfig {
    std::string model_id;  // "expsum<p>" or "headneck"
    Vec truth_dev;         // normalized deviations from the typical point
    std::vector<std::size_t> sample_sizes;
    double sigma = 0.0;  // noise sd as a fraction of the clean signal RMS
    std::size_t replications = 2;
    std::uint64_t seed = 0;
    RadiusPolicy policy = RadiusPolicy::oracle;
    double radius = std::numeric_limits<double>::infinity();  // fixed policy
    std::size_t n_star = 0;                                   // selection policy
    double duration_s = 3.0;   // expsum span; headneck duration = n / sample_rate
    double sample_rate = 60.0;  // headneck only
    std::vector<std::pair<std::string, double>> typical_overrides;
};

struct StudyCell {
    std::size_t n = 0;
    std::string method;  // "lasso" or "unregularized"
    Vec bias;
    Vec variance;
    std::size_t r_effective = 0;
    std::size_t r_failed = 0;
};

struct StudyReport {
    std::vector<std::string> labels;
    std::vector<StudyCell> cells;

    // consistency
    std::vector<std::pair<std::size_t, double>> rmse_by_n;
    double consistency_slope = std::numeric_limits<double>::quiet_NaN();

    // oracle / sparsity
    std::vector<std::pair<std::size_t, double>> recovery_by_n;
    Vec qq_correlation;  // support coordinates, at the largest n

    // bias-variance
    double variance_improvement_pct = std::numeric_limits<double>::quiet_NaN();
    double median_bias_regularized = std::numeric_limits<double>::quiet_NaN();
    double median_bias_unregularized = std::numeric_limits<double>::quiet_NaN();

    // timing
    double lm_median_s = std::numeric_limits<double>::quiet_NaN();
    double baseline_median_s = std::numeric_limits<double>::quiet_NaN();
    double speedup = std::numeric_limits<double>::quiet_NaN();
    double lm_sse = std::numeric_limits<double>::quiet_NaN();
    double baseline_sse = std::numeric_limits<double>::quiet_NaN();
    bool baseline_converged = true;
};

std::shared_ptr<NonlinearModel> make_study_model(const StudyConfig& cfg);

// One replication's synthetic dataset: deterministic design for expsum,
// seeded reference trajectory for the surrogate, plus seeded output noise.
Dataset make_study_dataset(const StudyConfig& cfg, const NonlinearModel& model,
                           std::size_t n, std::uint64_t replication);

StudyReport run_bias_variance_study(const StudyConfig& cfg);
StudyReport run_consistency_study(const StudyConfig& cfg);
StudyReport run_oracle_study(const StudyConfig& cfg);
StudyReport run_timing_benchmark(const StudyConfig& cfg);

struct SimplexResult {
    Vec dev;
    double sse = 0.0;
    std::size_t evaluations = 0;
    bool converged = false;
    double penalty_weight = 0.0;
};

// Nelder-Mead on S_n plus an exact penalty for the L1 ball, the weight
// doubled until the solution is feasible within 1e-6. The brute-force
// baseline the timing study compares against.
SimplexResult fit_simplex_penalty(const NonlinearModel& model, const Dataset& data,
                                  double radius, std::size_t max_iter = 20000,
                                  double tol = 1e-10);

// Inverse standard normal CDF (Acklam's rational approximation, refined by
// one Halley step); p in (0,1).
double normal_quantile(double p);

// Pearson correlation between sorted standardized values and normal
// quantiles at Blom plotting positions. Near 1 for Gaussian samples.
double qq_correlation(const Vec& sample);

}  // namespace sparsenls
