#include "sparsenls/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "sparsenls/rng.hpp"

namespace sparsenls {

Dataset make_dataset(Vec t, Vec x, Vec y, double sample_rate) {
    if (t.size() != x.size() || t.size() != y.size())
        throw InputError("dataset series lengths differ: t=" + std::to_string(t.size()) +
                         " x=" + std::to_string(x.size()) + " y=" + std::to_string(y.size()));
    if (t.size() < 2) throw InputError("dataset needs at least two samples");
    if (!(sample_rate > 0.0)) throw InputError("sample rate must be positive");
    const double dt = 1.0 / sample_rate;
    for (std::size_t i = 1; i < t.size(); ++i) {
        double step = t[i] - t[i - 1];
        if (!(step > 0.0) || std::abs(step - dt) > 1e-6 * dt)
            throw InputError("dataset time base is not uniform at sample " + std::to_string(i) +
                             ": spacing " + std::to_string(step) + " vs expected " + std::to_string(dt));
    }
    Dataset ds;
    ds.t = std::move(t);
    ds.x = std::move(x);
    ds.y = std::move(y);
    ds.sample_rate = sample_rate;
    return ds;
}

namespace {

[[noreturn]] void csv_fail(const std::string& path, std::size_t line, std::size_t col,
                           const std::string& msg) {
    throw InputError(path + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + msg);
}

// One numeric field ending at ',' or end of line; advances *pos past the field.
double parse_field(const std::string& path, const std::string& row, std::size_t line,
                   std::size_t* pos, bool last) {
    const char* begin = row.c_str() + *pos;
    char* end = nullptr;
    double value = std::strtod(begin, &end);
    if (end == begin) csv_fail(path, line, *pos + 1, "expected a number");
    std::size_t next = *pos + static_cast<std::size_t>(end - begin);
    if (last) {
        if (next != row.size()) csv_fail(path, line, next + 1, "trailing characters after last field");
    } else {
        if (next >= row.size() || row[next] != ',')
            csv_fail(path, line, next + 1, "expected ','");
        ++next;
    }
    *pos = next;
    return value;
}

}  // namespace

Dataset read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open dataset file: " + path);

    std::string row;
    std::size_t line = 1;
    if (!std::getline(in, row)) csv_fail(path, 1, 1, "empty file");
    if (!row.empty() && row.back() == '\r') row.pop_back();
    if (row != "t,x,y") csv_fail(path, 1, 1, "header must be exactly 't,x,y'");

    Vec t, x, y;
    while (std::getline(in, row)) {
        ++line;
        if (!row.empty() && row.back() == '\r') row.pop_back();
        if (row.empty()) continue;
        std::size_t pos = 0;
        double ti = parse_field(path, row, line, &pos, false);
        double xi = parse_field(path, row, line, &pos, false);
        double yi = parse_field(path, row, line, &pos, true);
        if (!std::isfinite(ti) || !std::isfinite(xi) || !std::isfinite(yi))
            csv_fail(path, line, 1, "non-finite value");
        t.push_back(ti);
        x.push_back(xi);
        y.push_back(yi);
    }
    if (t.size() < 2) throw InputError(path + ": dataset needs at least two samples");
    double sample_rate = 1.0 / (t[1] - t[0]);
    return make_dataset(std::move(t), std::move(x), std::move(y), sample_rate);
}

void write_csv(const std::string& path, const Dataset& ds) {
    std::ofstream out(path, std::ios::binary);  // binary keeps LF endings everywhere
    if (!out) throw InputError("cannot write dataset file: " + path);
    out << "t,x,y\n";
    char buf[96];
    for (std::size_t i = 0; i < ds.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", ds.t[i], ds.x[i], ds.y[i]);
        out << buf;
    }
    if (!out) throw InputError("write failed: " + path);
}

Dataset generate_reference(double duration_s, double sample_rate, std::uint64_t seed) {
    if (!(duration_s > 0.0)) throw InputError("reference duration must be positive");
    if (!(sample_rate > 0.0)) throw InputError("sample rate must be positive");
    const std::size_t n = static_cast<std::size_t>(std::llround(duration_s * sample_rate));
    if (n < 2) throw InputError("reference would have fewer than two samples");

    Vec t(n), x(n), y(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) t[i] = static_cast<double>(i) / sample_rate;

    Rng rng(seed);
    double step_end = 0.0;
    double amplitude = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (t[i] >= step_end) {
            step_end += rng.uniform(0.5, 3.0);
            amplitude = rng.uniform(-0.0698, 0.0698);
        }
        x[i] = amplitude;
    }
    return make_dataset(std::move(t), std::move(x), std::move(y), sample_rate);
}

}  // namespace sparsenls
