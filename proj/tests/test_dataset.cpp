#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "sparsenls/dataset.hpp"
#include "sparsenls/rng.hpp"

using namespace sparsenls;

namespace {

std::filesystem::path temp_csv(const std::string& tag) {
    return std::filesystem::temp_directory_path() / ("sparsenls_test_" + tag + ".csv");
}

struct FileGuard {
    std::filesystem::path path;
    ~FileGuard() { std::filesystem::remove(path); }
};

}  // namespace

TEST_CASE("make_dataset validates shape and spacing") {
    Vec t = {0.0, 0.1, 0.2};
    Vec x = {1.0, 1.0, 1.0};
    Vec y = {0.0, 0.5, 1.0};
    Dataset d = make_dataset(t, x, y, 10.0);
    CHECK(d.size() == 3);
    CHECK(d.sample_rate == 10.0);

    CHECK_THROWS_AS(make_dataset({0.0, 0.1}, {1.0}, {0.0, 0.5}, 10.0), InputError);
    CHECK_THROWS_AS(make_dataset({0.0}, {1.0}, {0.0}, 10.0), InputError);
    CHECK_THROWS_AS(make_dataset(t, x, y, 0.0), InputError);
    CHECK_THROWS_AS(make_dataset({0.0, 0.1, 0.35}, x, y, 10.0), InputError);
}

TEST_CASE("csv round trip preserves doubles exactly") {
    Rng rng(5);
    std::size_t n = 64;
    Vec t(n), x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
        t[i] = static_cast<double>(i) / 128.0;
        x[i] = rng.uniform(-0.07, 0.07);
        y[i] = rng.gauss() * 1e-3;
    }
    Dataset d = make_dataset(t, x, y, 128.0);
    FileGuard f{temp_csv("roundtrip")};
    write_csv(f.path.string(), d);
    Dataset back = read_csv(f.path.string());
    CHECK(back.t == d.t);
    CHECK(back.x == d.x);
    CHECK(back.y == d.y);
    CHECK(back.sample_rate == doctest::Approx(d.sample_rate).epsilon(1e-9));
}

TEST_CASE("read_csv rejects malformed files with location info") {
    FileGuard f{temp_csv("badheader")};
    {
        std::ofstream out(f.path);
        out << "time,input,output\n0,0,0\n0.1,0,0\n";
    }
    CHECK_THROWS_AS(read_csv(f.path.string()), InputError);

    {
        std::ofstream out(f.path);
        out << "t,x,y\n0,0,0\n0.1,abc,0\n";
    }
    try {
        read_csv(f.path.string());
        FAIL("expected InputError");
    } catch (const InputError& e) {
        CHECK(std::string(e.what()).find(":3") != std::string::npos);
    }

    {
        std::ofstream out(f.path);
        out << "t,x,y\n0,0,0\n0.1,inf,0\n";
    }
    CHECK_THROWS_AS(read_csv(f.path.string()), InputError);

    CHECK_THROWS_AS(read_csv("/nonexistent/path.csv"), InputError);
}

TEST_CASE("read_csv tolerates CRLF and blank lines") {
    FileGuard f{temp_csv("crlf")};
    {
        std::ofstream out(f.path, std::ios::binary);
        out << "t,x,y\r\n0,1,2\r\n\r\n0.5,3,4\r\n";
    }
    Dataset d = read_csv(f.path.string());
    CHECK(d.size() == 2);
    CHECK(d.x == Vec{1.0, 3.0});
    CHECK(d.sample_rate == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("generate_reference produces bounded piecewise-constant steps") {
    Dataset d = generate_reference(30.0, 60.0, 99);
    CHECK(d.size() == 1800);
    CHECK(d.sample_rate == 60.0);
    CHECK(d.t[0] == 0.0);
    CHECK(d.t[1] == doctest::Approx(1.0 / 60.0).epsilon(1e-12));
    CHECK(d.y == Vec(1800, 0.0));

    std::size_t transitions = 0;
    double hold_start = 0.0;
    double min_hold = 1e9, max_hold = 0.0;
    for (std::size_t i = 1; i < d.size(); ++i) {
        CHECK(std::abs(d.x[i]) <= 0.0698 + 1e-12);
        if (d.x[i] != d.x[i - 1]) {
            ++transitions;
            double hold = d.t[i] - hold_start;
            min_hold = std::min(min_hold, hold);
            max_hold = std::max(max_hold, hold);
            hold_start = d.t[i];
        }
    }
    CHECK(transitions >= 8);   // 30 s of holds drawn from [0.5, 3] s
    CHECK(transitions <= 62);
    CHECK(min_hold >= 0.5 - 1.0 / 60.0 - 1e-12);
    CHECK(max_hold <= 3.0 + 1.0 / 60.0 + 1e-12);

    Dataset a = generate_reference(5.0, 100.0, 7);
    Dataset b = generate_reference(5.0, 100.0, 7);
    CHECK(a.x == b.x);
}
