#include <doctest.h>

#include <cmath>

#include "sparsenls/metrics.hpp"
#include "sparsenls/rng.hpp"

using namespace sparsenls;

namespace {

ReplicationSet reps_from(const std::vector<Vec>& rows, std::optional<Vec> truth,
                         std::vector<std::string> labels) {
    Matrix m(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
    return ReplicationSet{std::move(m), std::move(truth), std::move(labels)};
}

}  // namespace

TEST_CASE("vaf basics") {
    Vec y = {1.0, -2.0, 3.0, 0.5};
    CHECK(vaf(y, y) == doctest::Approx(100.0).epsilon(1e-12));
    CHECK(vaf(y, Vec(4, 0.0)) == doctest::Approx(0.0).epsilon(1e-12));

    // residual power exactly one quarter of signal power
    Vec y2 = {2.0, 2.0, 2.0, 2.0};
    Vec yhat = {1.0, 3.0, 1.0, 3.0};
    CHECK(vaf(y2, yhat) == doctest::Approx(75.0).epsilon(1e-12));
}

TEST_CASE("vaf rejects degenerate input") {
    CHECK_THROWS_AS(vaf({0.0, 0.0}, {1.0, 1.0}), MetricError);
    CHECK_THROWS_AS(vaf({1.0, 2.0}, {1.0}), MetricError);
    CHECK_THROWS_AS(vaf({}, {}), MetricError);
}

TEST_CASE("bias_variance against hand-computed values") {
    // column 0: mean 2, truth 1.5 → bias 0.5; values {1,3} → var 2
    // column 1: mean 0, truth 0 → bias 0; values {-1,1} → var 2
    ReplicationSet reps =
        reps_from({{1.0, -1.0}, {3.0, 1.0}}, Vec{1.5, 0.0}, {"a", "b"});
    BiasVariance bv = bias_variance(reps);
    CHECK(bv.bias[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(bv.bias[1] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(bv.variance[0] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(bv.variance[1] == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("bias_variance matches moments on random draws") {
    Rng rng(2024);
    std::size_t r = 500, p = 3;
    std::vector<Vec> rows(r, Vec(p));
    for (auto& row : rows)
        for (auto& x : row) x = rng.gauss();
    ReplicationSet reps = reps_from(rows, Vec(p, 0.0), {"a", "b", "c"});
    BiasVariance bv = bias_variance(reps);
    for (std::size_t j = 0; j < p; ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < r; ++i) mean += rows[i][j];
        mean /= static_cast<double>(r);
        double var = 0.0;
        for (std::size_t i = 0; i < r; ++i) var += (rows[i][j] - mean) * (rows[i][j] - mean);
        var /= static_cast<double>(r - 1);
        CHECK(bv.bias[j] == doctest::Approx(std::abs(mean)).epsilon(1e-12));
        CHECK(bv.variance[j] == doctest::Approx(var).epsilon(1e-12));
    }
}

TEST_CASE("bias_variance preconditions") {
    CHECK_THROWS_AS(bias_variance(reps_from({{1.0}}, Vec{0.0}, {"a"})), MetricError);
    CHECK_THROWS_AS(bias_variance(reps_from({{1.0}, {2.0}}, std::nullopt, {"a"})),
                    MetricError);
}

TEST_CASE("variance_improvement on constructed ensembles") {
    // unregularized column variances 4 and 16 (mean 10);
    // regularized column variances 1 and 4 (mean 2.5) → 75% improvement
    ReplicationSet unreg =
        reps_from({{-2.0, -4.0}, {2.0, 4.0}}, std::nullopt, {"a", "b"});
    ReplicationSet reg = reps_from({{-1.0, -2.0}, {1.0, 2.0}}, std::nullopt, {"a", "b"});
    CHECK(variance_improvement(reg, unreg) == doctest::Approx(75.0).epsilon(1e-12));
    CHECK(variance_improvement(unreg, unreg) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("variance_improvement validates label agreement") {
    ReplicationSet a = reps_from({{1.0}, {2.0}}, std::nullopt, {"a"});
    ReplicationSet b = reps_from({{1.0}, {2.0}}, std::nullopt, {"b"});
    CHECK_THROWS_AS(variance_improvement(a, b), MetricError);
    ReplicationSet degenerate = reps_from({{1.0}, {1.0}}, std::nullopt, {"a"});
    CHECK_THROWS_AS(variance_improvement(a, degenerate), MetricError);
}
