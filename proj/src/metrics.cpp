#include "sparsenls/metrics.hpp"

#include <cmath>

namespace sparsenls {

double vaf(const Vec& y, const Vec& yhat) {
    if (y.size() != yhat.size()) throw MetricError("vaf series lengths differ");
    if (y.empty()) throw MetricError("vaf needs at least one sample");
    double ss_err = 0.0, ss_y = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        double e = y[i] - yhat[i];
        ss_err += e * e;
        ss_y += y[i] * y[i];
    }
    if (ss_y == 0.0) throw MetricError("vaf undefined for an all-zero observation series");
    return (1.0 - ss_err / ss_y) * 100.0;
}

static void check_shape(const ReplicationSet& reps) {
    if (reps.estimates.rows < 1) throw MetricError("replication set is empty");
    if (reps.estimates.cols != reps.labels.size())
        throw MetricError("replication column count does not match labels");
    if (reps.truth && reps.truth->size() != reps.estimates.cols)
        throw MetricError("truth length does not match estimate columns");
}

BiasVariance bias_variance(const ReplicationSet& reps) {
    check_shape(reps);
    if (!reps.truth) throw MetricError("bias requires a truth vector");
    const std::size_t r = reps.estimates.rows, p = reps.estimates.cols;
    if (r < 2) throw MetricError("variance requires at least two replications");

    BiasVariance out;
    out.bias.resize(p);
    out.variance.resize(p);
    for (std::size_t k = 0; k < p; ++k) {
        double mean = 0.0;
        for (std::size_t i = 0; i < r; ++i) mean += reps.estimates(i, k);
        mean /= static_cast<double>(r);
        double ss = 0.0;
        for (std::size_t i = 0; i < r; ++i) {
            double d = reps.estimates(i, k) - mean;
            ss += d * d;
        }
        out.bias[k] = std::abs(mean - (*reps.truth)[k]);
        out.variance[k] = ss / static_cast<double>(r - 1);
    }
    return out;
}

double variance_improvement(const ReplicationSet& regularized,
                            const ReplicationSet& unregularized) {
    check_shape(regularized);
    check_shape(unregularized);
    if (regularized.labels != unregularized.labels)
        throw MetricError("variance_improvement parameter sets differ");

    auto mean_variance = [](const ReplicationSet& reps) {
        const std::size_t r = reps.estimates.rows, p = reps.estimates.cols;
        if (r < 2) throw MetricError("variance requires at least two replications");
        double total = 0.0;
        for (std::size_t k = 0; k < p; ++k) {
            double mean = 0.0;
            for (std::size_t i = 0; i < r; ++i) mean += reps.estimates(i, k);
            mean /= static_cast<double>(r);
            double ss = 0.0;
            for (std::size_t i = 0; i < r; ++i) {
                double d = reps.estimates(i, k) - mean;
                ss += d * d;
            }
            total += ss / static_cast<double>(r - 1);
        }
        return total / static_cast<double>(p);
    };

    double v_unreg = mean_variance(unregularized);
    if (v_unreg == 0.0) throw MetricError("variance_improvement undefined: unregularized variance is zero");
    return (1.0 - mean_variance(regularized) / v_unreg) * 100.0;
}

}  // namespace sparsenls
