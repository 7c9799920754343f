#include "sparsenls/l1.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "sparsenls/kernels.hpp"

namespace sparsenls {

Vec project_l1(const Vec& v, double radius) {
    if (radius < 0.0) throw InputError("L1 ball radius must be non-negative");
    double norm1 = 0.0;
    for (double x : v) norm1 += std::abs(x);
    if (norm1 <= radius) return v;
    if (radius == 0.0) return Vec(v.size(), 0.0);

    Vec mags(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) mags[i] = std::abs(v[i]);
    std::stable_sort(mags.begin(), mags.end(), std::greater<double>());

    // largest rho with mags[rho-1] > (prefix_sum(rho) - radius)/rho
    double prefix = 0.0, theta = 0.0;
    for (std::size_t j = 0; j < mags.size(); ++j) {
        prefix += mags[j];
        double cand = (prefix - radius) / static_cast<double>(j + 1);
        if (mags[j] > cand) theta = cand;
    }

    Vec out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        double m = std::abs(v[i]) - theta;
        out[i] = m > 0.0 ? std::copysign(m, v[i]) : 0.0;
    }
    return out;
}

namespace {

void validate(const SubproblemSpec& sp) {
    const std::size_t p = sp.lambda.rows;
    if (sp.lambda.cols != p || sp.target.size() != p)
        throw InputError("subproblem dimensions are inconsistent");
    if (sp.radius < 0.0) throw InputError("subproblem radius must be non-negative");
    double scale = 0.0;
    for (std::size_t a = 0; a < p; ++a) scale = std::max(scale, std::abs(sp.lambda(a, a)));
    for (std::size_t a = 0; a < p; ++a) {
        if (!(sp.lambda(a, a) > 0.0)) throw InputError("subproblem matrix diagonal must be positive");
        for (std::size_t b = a + 1; b < p; ++b)
            if (std::abs(sp.lambda(a, b) - sp.lambda(b, a)) > 1e-10 * std::max(1.0, scale))
                throw InputError("subproblem matrix is not symmetric");
    }
}

// largest eigenvalue of ΛᵀΛ = Λ² by power iteration, padded 1%
double lipschitz_bound(const Matrix& lambda) {
    const std::size_t p = lambda.rows;
    Vec v(p), tmp(p);
    for (std::size_t i = 0; i < p; ++i) v[i] = 1.0 + 0.01 * static_cast<double>(i % 7);
    double norm = std::sqrt(kernels::serial::sum_squares(v));
    for (double& x : v) x /= norm;

    double eig = 0.0;
    for (int it = 0; it < 200; ++it) {
        kernels::matvec(lambda, v, tmp);
        kernels::matvec(lambda, tmp, v);
        norm = std::sqrt(kernels::serial::sum_squares(v));
        if (norm == 0.0) break;
        for (double& x : v) x /= norm;
        double prev = eig;
        eig = norm;
        if (it > 3 && std::abs(eig - prev) <= 1e-8 * eig) break;
    }
    return 1.01 * eig;
}

}  // namespace

SubproblemResult solve_subproblem(const SubproblemSpec& sp, const Vec& warm_start,
                                  double tol, std::size_t max_iter, Vec* objective_trace) {
    validate(sp);
    const std::size_t p = sp.lambda.rows;
    if (warm_start.size() != p) throw InputError("warm start has wrong length");
    if (!(tol > 0.0)) throw InputError("subproblem tolerance must be positive");

    // Gradient steps use the half-objective ½‖Λx − g‖² so the 1/L step with
    // L = λmax(Λ²) is exactly the descent limit; the trace reports ‖Λx − g‖².
    Vec tmp(p), tmp2(p);
    auto objective = [&](const Vec& x) {
        kernels::matvec(sp.lambda, x, tmp);
        for (std::size_t i = 0; i < p; ++i) tmp[i] -= sp.target[i];
        return kernels::serial::sum_squares(tmp);
    };
    auto gradient = [&](const Vec& x, Vec& out) {
        kernels::matvec(sp.lambda, x, tmp);
        for (std::size_t i = 0; i < p; ++i) tmp[i] -= sp.target[i];
        kernels::matvec(sp.lambda, tmp, out);
    };

    SubproblemResult res;
    if (sp.radius == 0.0) {
        res.x = Vec(p, 0.0);
        res.converged = true;
        return res;
    }

    const double lip = lipschitz_bound(sp.lambda);
    const double step = lip > 0.0 ? 1.0 / lip : 1.0;

    // When the unconstrained minimizer Λ⁻¹g is already inside the ball the
    // direct solve settles it; iterating would only matter on the boundary.
    try {
        Vec direct = kernels::cholesky_solve(sp.lambda, sp.target);
        double direct_norm1 = 0.0;
        for (double x : direct) direct_norm1 += std::abs(x);
        if (direct_norm1 <= sp.radius) {
            Vec grad_d(p), shifted(p);
            gradient(direct, grad_d);
            for (std::size_t i = 0; i < p; ++i) shifted[i] = direct[i] - step * grad_d[i];
            Vec fixed = project_l1(shifted, sp.radius);
            double resid = 0.0;
            for (std::size_t i = 0; i < p; ++i) {
                double d = direct[i] - fixed[i];
                resid += d * d;
            }
            res.pg_residual = std::sqrt(resid);
            if (res.pg_residual <= tol) {
                res.x = std::move(direct);
                res.converged = true;
                if (objective_trace) objective_trace->push_back(objective(res.x));
                return res;
            }
        }
    } catch (const Error&) {
    }

    Vec x = project_l1(warm_start, sp.radius);
    Vec x_prev = x;
    Vec y = x;
    Vec grad(p), z(p);
    double fx = objective(x);
    double t = 1.0;

    for (std::size_t it = 1; it <= max_iter; ++it) {
        gradient(y, grad);
        for (std::size_t i = 0; i < p; ++i) tmp2[i] = y[i] - step * grad[i];
        z = project_l1(tmp2, sp.radius);
        double fz = objective(z);

        x_prev.swap(x);
        if (fz <= fx) {  // monotone update keeps the best iterate in x
            x = z;
            fx = fz;
        } else {
            x = x_prev;
        }

        if (objective_trace) objective_trace->push_back(fx);

        double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        for (std::size_t i = 0; i < p; ++i)
            y[i] = x[i] + (t / t_next) * (z[i] - x[i]) +
                   ((t - 1.0) / t_next) * (x[i] - x_prev[i]);
        t = t_next;

        gradient(x, grad);
        for (std::size_t i = 0; i < p; ++i) tmp2[i] = x[i] - step * grad[i];
        Vec fixed = project_l1(tmp2, sp.radius);
        double resid = 0.0;
        for (std::size_t i = 0; i < p; ++i) {
            double d = x[i] - fixed[i];
            resid += d * d;
        }
        resid = std::sqrt(resid);

        res.iterations = it;
        res.pg_residual = resid;
        if (resid <= tol) {
            res.x = x;
            res.converged = true;
            return res;
        }
    }

    res.x = x;
    res.converged = false;
    throw SubproblemError("subproblem did not converge in " + std::to_string(max_iter) +
                              " iterations (residual " + std::to_string(res.pg_residual) + ")",
                          res);
}

}  // namespace sparsenls
