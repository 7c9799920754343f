#include <cmath>
#include <vector>

#include "sparsenls/models.hpp"

namespace sparsenls {

namespace {

// Bilinear sections with K = 2·fs, stepped in transposed direct form II.

// H(s) = (b1 s + b0)/(a1 s + a0)
struct FirstOrder {
    double n0 = 0, n1 = 0, d1 = 0;
    double s = 0;

    void init(double b1, double b0, double a1, double a0, double k) {
        double d0 = a0 + a1 * k;
        n0 = (b0 + b1 * k) / d0;
        n1 = (b0 - b1 * k) / d0;
        d1 = (a0 - a1 * k) / d0;
    }

    double step(double x) {
        double y = n0 * x + s;
        s = n1 * x - d1 * y;
        return y;
    }
};

// H(s) = (b2 s² + b1 s + b0)/(a2 s² + a1 s + a0)
struct Biquad {
    double n0 = 0, n1 = 0, n2 = 0, d1 = 0, d2 = 0;
    double s1 = 0, s2 = 0;

    void init(double b2, double b1, double b0, double a2, double a1, double a0, double k) {
        double k2 = k * k;
        double d0 = a2 * k2 + a1 * k + a0;
        n0 = (b2 * k2 + b1 * k + b0) / d0;
        n1 = 2.0 * (b0 - b2 * k2) / d0;
        n2 = (b2 * k2 - b1 * k + b0) / d0;
        d1 = 2.0 * (a0 - a2 * k2) / d0;
        d2 = (a2 * k2 - a1 * k + a0) / d0;
    }

    double step(double x) {
        double y = n0 * x + s1;
        s1 = n1 * x - d1 * y + s2;
        s2 = n2 * x - d2 * y;
        return y;
    }
};

// Fractional-sample delay: circular buffer, linear interpolation between
// the two bracketing samples.
struct FractionalDelay {
    std::vector<double> buf;
    std::size_t head = 0;
    std::size_t whole = 0;
    double frac = 0;

    void init(double delay_samples) {
        whole = static_cast<std::size_t>(std::floor(delay_samples));
        frac = delay_samples - static_cast<double>(whole);
        buf.assign(whole + 2, 0.0);
        head = 0;
    }

    double step(double x) {
        buf[head] = x;
        std::size_t n = buf.size();
        std::size_t i0 = (head + n - whole) % n;
        std::size_t i1 = (head + n - whole - 1) % n;
        double y = (1.0 - frac) * buf[i0] + frac * buf[i1];
        head = (head + 1) % n;
        return y;
    }
};

constexpr double kOutputLimit = 1e6;

class HeadNeckModel final : public NonlinearModel {
public:
    explicit HeadNeckModel(const std::vector<std::pair<std::string, double>>& overrides)
        : spec_(overrides.empty() ? make_spec() : make_spec().with_typical(overrides)) {}

    const ParameterSpec& spec() const override { return spec_; }

    Vec predict(const Dataset& data, const ParamVector& physical) const override {
        if (physical.frame != Frame::physical) throw InputError("predict expects physical frame");
        if (physical.values.size() != 12) throw InputError("surrogate expects 12 free parameters");

        const double k_vis = physical.values[0];
        const double k_vcr = physical.values[1];
        const double k_ccr = physical.values[2];
        const double tau = physical.values[3];
        const double tau_1a = physical.values[4];
        const double tau_cns1 = physical.values[5];
        const double tau_c = physical.values[6];
        const double tau_cns2 = physical.values[7];
        const double tau_ms1 = physical.values[8];
        const double tau_ms2 = physical.values[9];
        const double b_damp = physical.values[10];
        const double k_stiff = physical.values[11];
        const double j_inertia = spec_.fixed_value("J");
        const double t_conv = spec_.fixed_value("T_c");

        const double fs = data.sample_rate;
        const double k = 2.0 * fs;

        FractionalDelay vis_delay;
        vis_delay.init(tau * fs);
        FirstOrder vis_leadlag;  // (tau_CNS1 s + 1)/(tau_CNS2 s + 1)
        vis_leadlag.init(tau_cns1, 1.0, tau_cns2, 1.0, k);

        FirstOrder vcr_leadlag;  // (tau_1A s + 1)/(tau_C s + 1)
        vcr_leadlag.init(tau_1a, 1.0, tau_c, 1.0, k);
        FirstOrder vcr_smooth;  // 1/(0.01 s + 1), pole at 100 rad/s
        vcr_smooth.init(0.0, 1.0, 0.01, 1.0, k);

        Biquad ccr_lead;  // (tau_MS1 s + 1)(tau_MS2 s + 1)/(0.001 s + 1)²
        ccr_lead.init(tau_ms1 * tau_ms2, tau_ms1 + tau_ms2, 1.0, 1e-6, 0.002, 1.0, k);

        FirstOrder converter;  // 1/(T_c s + 1)
        converter.init(0.0, 1.0, t_conv, 1.0, k);
        Biquad plant;  // 1/(J s² + B s + K)
        plant.init(0.0, 0.0, 1.0, j_inertia, b_damp, k_stiff, k);

        Vec yhat(data.size(), 0.0);
        double y_prev = 0.0;  // fed-back output lags one sample
        double dd1 = 0.0, dd2 = 0.0;
        for (std::size_t i = 0; i < data.size(); ++i) {
            double err = data.x[i] - y_prev;
            double u_vis = k_vis * vis_leadlag.step(vis_delay.step(err));

            double w = -y_prev;
            double dd = w - 2.0 * dd1 + dd2;  // (1 - z⁻¹)² double difference
            dd2 = dd1;
            dd1 = w;
            double u_vcr = k_vcr * vcr_smooth.step(vcr_leadlag.step(dd));

            double u_ccr = k_ccr * ccr_lead.step(-y_prev);

            double torque = converter.step(u_vis + u_vcr + u_ccr);
            double y = plant.step(torque);
            if (!std::isfinite(y) || std::abs(y) > kOutputLimit)
                throw EvaluationError("surrogate simulation unbounded at t = " +
                                          std::to_string(data.t[i]),
                                      physical.values);
            yhat[i] = y;
            y_prev = y;
        }
        return yhat;
    }

private:
    static ParameterSpec make_spec() {
        auto mid = [](double lo, double hi) { return 0.5 * (lo + hi); };
        std::vector<ParamEntry> entries{
            {"K_vis", 50.0, 1e3, {}, mid(50.0, 1e3)},
            {"K_vcr", 500.0, 1e4, {}, mid(500.0, 1e4)},
            {"K_ccr", 1.0, 300.0, {}, mid(1.0, 300.0)},
            {"tau", 0.1, 0.4, {}, mid(0.1, 0.4)},
            {"tau_1A", 0.01, 0.2, {}, mid(0.01, 0.2)},
            {"tau_CNS1", 0.05, 1.0, {}, mid(0.05, 1.0)},
            {"tau_C", 0.1, 5.0, {}, mid(0.1, 5.0)},
            {"tau_CNS2", 5.0, 60.0, {}, mid(5.0, 60.0)},
            {"tau_MS1", 0.01, 1.0, {}, mid(0.01, 1.0)},
            {"tau_MS2", 0.01, 1.0, {}, mid(0.01, 1.0)},
            {"B", 0.1, 5.0, {}, mid(0.1, 5.0)},
            {"K", 0.1, 5.0, {}, mid(0.1, 5.0)},
            {"J", 0.0148, 0.0148, 0.0148, 0.0148},
            {"T_c", 0.1, 0.1, 0.1, 0.1},
        };
        return ParameterSpec(std::move(entries));
    }

    ParameterSpec spec_;
};

}  // namespace

std::shared_ptr<NonlinearModel> headneck_surrogate(
    const std::vector<std::pair<std::string, double>>& typical_overrides) {
    return std::make_shared<HeadNeckModel>(typical_overrides);
}

}  // namespace sparsenls
