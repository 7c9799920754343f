#include "sparsenls/kernels.hpp"

#include <omp.h>

#include <cmath>
#include <cstdint>

namespace sparsenls::kernels {

namespace serial {

double sum_squares(const Vec& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
}

void gram(const Matrix& j, Matrix& out) {
    const std::size_t n = j.rows, p = j.cols;
    out = Matrix(p, p);
    for (std::size_t a = 0; a < p; ++a) {
        for (std::size_t b = a; b < p; ++b) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += j(i, a) * j(i, b);
            out(a, b) = s;
            out(b, a) = s;
        }
    }
}

void jt_vec(const Matrix& j, const Vec& v, Vec& out) {
    const std::size_t n = j.rows, p = j.cols;
    out.assign(p, 0.0);
    for (std::size_t a = 0; a < p; ++a) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += j(i, a) * v[i];
        out[a] = s;
    }
}

}  // namespace serial

double sum_squares(const Vec& v) {
    // fixed chunking, independent of thread count
    constexpr std::size_t chunk = 2048;
    const std::size_t n = v.size();
    const std::size_t nchunks = (n + chunk - 1) / chunk;
    if (nchunks <= 1) return serial::sum_squares(v);
    Vec partial(nchunks, 0.0);
#pragma omp parallel for schedule(static)
    for (std::int64_t c = 0; c < static_cast<std::int64_t>(nchunks); ++c) {
        const std::size_t lo = static_cast<std::size_t>(c) * chunk;
        const std::size_t hi = lo + chunk < n ? lo + chunk : n;
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) s += v[i] * v[i];
        partial[static_cast<std::size_t>(c)] = s;
    }
    double s = 0.0;
    for (double x : partial) s += x;
    return s;
}

void gram(const Matrix& j, Matrix& out) {
    const std::size_t n = j.rows, p = j.cols;
    out = Matrix(p, p);
    const std::int64_t entries = static_cast<std::int64_t>(p * (p + 1) / 2);
#pragma omp parallel for schedule(static)
    for (std::int64_t e = 0; e < entries; ++e) {
        // unrank e -> (a, b) with a <= b over the upper triangle
        std::size_t a = 0;
        std::size_t rem = static_cast<std::size_t>(e);
        while (rem >= p - a) {
            rem -= p - a;
            ++a;
        }
        const std::size_t b = a + rem;
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += j(i, a) * j(i, b);
        out(a, b) = s;
        out(b, a) = s;
    }
}

void jt_vec(const Matrix& j, const Vec& v, Vec& out) {
    const std::size_t n = j.rows, p = j.cols;
    out.assign(p, 0.0);
#pragma omp parallel for schedule(static)
    for (std::int64_t a = 0; a < static_cast<std::int64_t>(p); ++a) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += j(i, static_cast<std::size_t>(a)) * v[i];
        out[static_cast<std::size_t>(a)] = s;
    }
}

void matvec(const Matrix& a, const Vec& x, Vec& y) {
    const std::size_t p = a.rows;
    y.assign(p, 0.0);
    for (std::size_t i = 0; i < p; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < a.cols; ++j) s += a(i, j) * x[j];
        y[i] = s;
    }
}

Vec cholesky_solve(Matrix a, Vec b) {
    const std::size_t p = a.rows;
    if (a.cols != p || b.size() != p) throw InputError("cholesky_solve dimensions mismatch");
    for (std::size_t j = 0; j < p; ++j) {
        double d = a(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= a(j, k) * a(j, k);
        if (!(d > 0.0)) throw Error("matrix lost positive definiteness in Cholesky");
        d = std::sqrt(d);
        a(j, j) = d;
        for (std::size_t i = j + 1; i < p; ++i) {
            double s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= a(i, k) * a(j, k);
            a(i, j) = s / d;
        }
    }
    for (std::size_t i = 0; i < p; ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= a(i, k) * b[k];
        b[i] = s / a(i, i);
    }
    for (std::size_t ii = p; ii-- > 0;) {
        double s = b[ii];
        for (std::size_t k = ii + 1; k < p; ++k) s -= a(k, ii) * b[k];
        b[ii] = s / a(ii, ii);
    }
    return b;
}

void set_jobs(int jobs) {
    if (jobs > 0) omp_set_num_threads(jobs);
}

int max_jobs() { return omp_get_max_threads(); }

}  // namespace sparsenls::kernels
