#pragma once

#include <cstdint>
#include <string>

#include "sparsenls/types.hpp"

namespace sparsenls {

// Uniformly sampled series triple: time, input command, observation.
struct Dataset {
    Vec t;
    Vec x;
    Vec y;
    double sample_rate = 0.0;  // Hz

    std::size_t size() const { return t.size(); }
};

// Validating constructor: equal lengths, at least two samples, t strictly
// increasing with spacing 1/sample_rate to 1e-6 relative.
Dataset make_dataset(Vec t, Vec x, Vec y, double sample_rate);

// CSV with header `t,x,y`, decimal point, LF line endings. Parse failures
// throw InputError with path:line:column diagnostics.
Dataset read_csv(const std::string& path);
void write_csv(const std::string& path, const Dataset& ds);

// Piecewise-constant step reference: step durations uniform on [0.5, 3] s,
// amplitudes uniform on [-0.0698, 0.0698] rad, deterministic per seed.
// y is returned all-zero; simulation fills it.
Dataset generate_reference(double duration_s, double sample_rate, std::uint64_t seed);

}  // namespace sparsenls
