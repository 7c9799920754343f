#include "sparsenls/models.hpp"

#include <cmath>
#include <string>
#include <utility>

#include <omp.h>

namespace sparsenls {

namespace {

void check_finite(const Vec& yhat, const ParamVector& physical) {
    for (double v : yhat)
        if (!std::isfinite(v))
            throw EvaluationError("model prediction is not finite", physical.values);
}

class LinearModel final : public NonlinearModel {
public:
    LinearModel(Matrix x, ParameterSpec spec) : x_(std::move(x)), spec_(std::move(spec)) {
        if (x_.cols != spec_.free_count())
            throw InputError("design matrix has " + std::to_string(x_.cols) +
                             " columns for " + std::to_string(spec_.free_count()) + " free parameters");
    }

    const ParameterSpec& spec() const override { return spec_; }

    Vec predict(const Dataset& data, const ParamVector& physical) const override {
        if (physical.frame != Frame::physical) throw InputError("predict expects physical frame");
        if (data.size() != x_.rows) throw InputError("dataset length does not match design matrix");
        Vec yhat(x_.rows, 0.0);
        for (std::size_t i = 0; i < x_.rows; ++i) {
            double acc = 0.0;
            for (std::size_t k = 0; k < x_.cols; ++k) acc += x_(i, k) * physical.values[k];
            yhat[i] = acc;
        }
        check_finite(yhat, physical);
        return yhat;
    }

    bool predict_jacobian(const Dataset&, const ParamVector&, Matrix& out) const override {
        out = x_;
        return true;
    }

private:
    Matrix x_;
    ParameterSpec spec_;
};

class ExpSumModel final : public NonlinearModel {
public:
    explicit ExpSumModel(std::size_t p) : spec_(make_spec(p)) {}

    const ParameterSpec& spec() const override { return spec_; }

    Vec predict(const Dataset& data, const ParamVector& physical) const override {
        if (physical.frame != Frame::physical) throw InputError("predict expects physical frame");
        const std::size_t terms = spec_.free_count() / 2;
        Vec yhat(data.size(), 0.0);
        for (std::size_t i = 0; i < data.size(); ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < terms; ++j) {
                double a = physical.values[2 * j];
                double b = physical.values[2 * j + 1];
                acc += a * std::exp(-b * data.x[i]);
            }
            yhat[i] = acc;
        }
        check_finite(yhat, physical);
        return yhat;
    }

    bool predict_jacobian(const Dataset& data, const ParamVector& physical,
                          Matrix& out) const override {
        const std::size_t terms = spec_.free_count() / 2;
        out = Matrix(data.size(), spec_.free_count());
        for (std::size_t i = 0; i < data.size(); ++i) {
            for (std::size_t j = 0; j < terms; ++j) {
                double a = physical.values[2 * j];
                double b = physical.values[2 * j + 1];
                double e = std::exp(-b * data.x[i]);
                out(i, 2 * j) = e;
                out(i, 2 * j + 1) = -a * data.x[i] * e;
            }
        }
        return true;
    }

private:
    static ParameterSpec make_spec(std::size_t p) {
        if (p < 2 || p % 2 != 0) throw InputError("expsum_model needs an even parameter count >= 2");
        const std::size_t terms = p / 2;
        std::vector<ParamEntry> entries;
        for (std::size_t j = 0; j < terms; ++j) {
            double decay = terms == 1 ? 2.5 : 1.0 + 3.0 * static_cast<double>(j) /
                                                        static_cast<double>(terms - 1);
            entries.push_back({"a" + std::to_string(j + 1), 0.1, 5.0, {}, 1.0});
            entries.push_back({"b" + std::to_string(j + 1), 0.1, 5.0, {}, decay});
        }
        return ParameterSpec(std::move(entries));
    }

    ParameterSpec spec_;
};

}  // namespace

ModelEval evaluate(const NonlinearModel& model, const Dataset& data, const DeviationVector& d) {
    const ParameterSpec& spec = model.spec();
    const std::size_t p = spec.free_count();
    if (d.values.size() != p) throw InputError("deviation length does not match model spec");

    ParamVector normalized = recompose(spec, d);
    ParamVector physical = denormalize(spec, normalized);

    Vec yhat = model.predict(data, physical);
    ModelEval eval;
    eval.residuals.resize(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) eval.residuals[i] = data.y[i] - yhat[i];

    Matrix dy_dtheta;
    if (model.predict_jacobian(data, physical, dy_dtheta)) {
        if (dy_dtheta.rows != data.size() || dy_dtheta.cols != p)
            throw EvaluationError("analytic jacobian has wrong shape", physical.values);
        eval.jacobian = Matrix(data.size(), p);
        for (std::size_t i = 0; i < data.size(); ++i)
            for (std::size_t k = 0; k < p; ++k)
                eval.jacobian(i, k) = -dy_dtheta(i, k) * spec.scale(k);
        for (double v : eval.jacobian.data)
            if (!std::isfinite(v))
                throw EvaluationError("analytic jacobian is not finite", physical.values);
        return eval;
    }

    // central differences on the normalized coordinates; residual columns are
    // (r(d+h e_k) - r(d-h e_k)) / 2h and each column is independent
    const double h = 1e-6;
    eval.jacobian = Matrix(data.size(), p);
    std::vector<std::exception_ptr> failures(p);
#pragma omp parallel for schedule(static)
    for (std::size_t k = 0; k < p; ++k) {
        try {
            ParamVector lo = normalized, hi = normalized;
            lo.values[k] -= h;
            hi.values[k] += h;
            Vec y_lo = model.predict(data, denormalize(spec, lo));
            Vec y_hi = model.predict(data, denormalize(spec, hi));
            for (std::size_t i = 0; i < data.size(); ++i) {
                double v = -(y_hi[i] - y_lo[i]) / (2.0 * h);
                if (!std::isfinite(v)) throw EvaluationError("difference jacobian is not finite", physical.values);
                eval.jacobian(i, k) = v;
            }
        } catch (...) {
            failures[k] = std::current_exception();
        }
    }
    for (const std::exception_ptr& e : failures)
        if (e) std::rethrow_exception(e);
    return eval;
}

std::shared_ptr<NonlinearModel> linear_model(Matrix x, ParameterSpec spec) {
    return std::make_shared<LinearModel>(std::move(x), std::move(spec));
}

std::shared_ptr<NonlinearModel> expsum_model(std::size_t p) {
    return std::make_shared<ExpSumModel>(p);
}

}  // namespace sparsenls
