#include <chrono>
#include <cstdio>
#include <random>
#include <vector>

#include <CLI11.hpp>

#include "sparsenls/kernels.hpp"
#include "sparsenls/types.hpp"

namespace {

using namespace sparsenls;
using Clock = std::chrono::steady_clock;

// Median-of-reps wall time per call, with enough inner calls per rep to
// get the measurement above timer noise.
template <typename F>
double time_call(F&& f, double min_rep_s, int reps) {
    std::vector<double> samples;
    for (int r = 0; r < reps; ++r) {
        std::size_t calls = 1;
        for (;;) {
            auto t0 = Clock::now();
            for (std::size_t c = 0; c < calls; ++c) f();
            double elapsed = std::chrono::duration<double>(Clock::now() - t0).count();
            if (elapsed >= min_rep_s) {
                samples.push_back(elapsed / static_cast<double>(calls));
                break;
            }
            calls *= 4;
        }
    }
    std::sort(samples.begin(), samples.end());
    return samples[samples.size() / 2];
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"serial vs OpenMP kernel timings"};
    int jobs = 0;
    int reps = 5;
    double min_rep_s = 0.05;
    app.add_option("--jobs", jobs, "OpenMP thread count (0 keeps the default)");
    app.add_option("--reps", reps, "timing repetitions per kernel");
    app.add_option("--min-time", min_rep_s, "minimum seconds per timing sample");
    CLI11_PARSE(app, argc, argv);

    kernels::set_jobs(jobs);
    std::printf("threads: %d\n", kernels::max_jobs());
    std::printf("%-12s %8s %4s %14s %14s %9s\n", "kernel", "n", "p", "serial_us", "parallel_us",
                "speedup");

    const std::size_t shapes[][2] = {{1800, 6}, {5400, 12}, {20000, 12}, {60000, 16}};
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);

    for (const auto& shape : shapes) {
        std::size_t n = shape[0], p = shape[1];
        Matrix j(n, p);
        for (double& v : j.data) v = unif(gen);
        Vec v(n);
        for (double& e : v) e = unif(gen);
        Matrix gram_out(p, p);
        Vec jtv_out(p);

        double checksum = 0.0;
        struct Row {
            const char* name;
            double serial_s;
            double parallel_s;
        };
        Row rows[] = {
            {"sum_squares",
             time_call([&] { checksum += kernels::serial::sum_squares(v); }, min_rep_s, reps),
             time_call([&] { checksum += kernels::sum_squares(v); }, min_rep_s, reps)},
            {"gram", time_call([&] { kernels::serial::gram(j, gram_out); }, min_rep_s, reps),
             time_call([&] { kernels::gram(j, gram_out); }, min_rep_s, reps)},
            {"jt_vec", time_call([&] { kernels::serial::jt_vec(j, v, jtv_out); }, min_rep_s, reps),
             time_call([&] { kernels::jt_vec(j, v, jtv_out); }, min_rep_s, reps)},
        };
        for (const Row& row : rows)
            std::printf("%-12s %8zu %4zu %14.2f %14.2f %8.2fx\n", row.name, n, p,
                        row.serial_s * 1e6, row.parallel_s * 1e6, row.serial_s / row.parallel_s);
        (void)checksum;
    }
    return 0;
}
