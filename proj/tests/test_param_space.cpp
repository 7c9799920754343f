#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "sparsenls/param_space.hpp"
#include "sparsenls/rng.hpp"

using namespace sparsenls;

namespace {

ParameterSpec demo_spec() {
    return ParameterSpec({
        {"K_vis", 50.0, 1e3, {}, 500.0},
        {"K", 0.1, 5.0, {}, 2.55},
        {"tau", 0.1, 0.4, {}, 0.25},
        {"K_ccr", 1.0, 300.0, {}, 150.5},
        {"J", 0.0148, 0.0148, 0.0148, 0.0148},
    });
}

}  // namespace

TEST_CASE("normalize maps bounds and interior points per the min-max formula") {
    ParameterSpec spec = demo_spec();
    ParamVector v{{50.0, 2.55, 0.25, 150.5}, Frame::physical};
    ParamVector n = normalize(spec, v);
    REQUIRE(n.frame == Frame::normalized);
    CHECK(n.values[0] == doctest::Approx(0.0));
    CHECK(n.values[1] == doctest::Approx(0.5));
    CHECK(n.values[2] == doctest::Approx((0.25 - 0.1) / (0.4 - 0.1)));
    CHECK(n.values[2] == doctest::Approx(0.5));
    CHECK(n.values[3] == doctest::Approx(0.5));
}

TEST_CASE("denormalize maps zeros to mins, ones to maxs, interior per formula") {
    ParameterSpec spec = demo_spec();

    ParamVector zeros{{0.0, 0.0, 0.0, 0.0}, Frame::normalized};
    ParamVector at_min = denormalize(spec, zeros);
    CHECK(at_min.values == Vec{50.0, 0.1, 0.1, 1.0});

    ParamVector ones{{1.0, 1.0, 1.0, 1.0}, Frame::normalized};
    ParamVector at_max = denormalize(spec, ones);
    CHECK(at_max.values == Vec{1e3, 5.0, 0.4, 300.0});

    ParamVector half{{0.5, 0.5, 0.5, 0.5}, Frame::normalized};
    CHECK(denormalize(spec, half).values[3] == doctest::Approx(150.5));
}

TEST_CASE("round trips hold to 1e-12 relative on random in-bounds vectors") {
    ParameterSpec spec = demo_spec();
    Rng rng(123);
    for (int trial = 0; trial < 200; ++trial) {
        ParamVector v{Vec(4), Frame::physical};
        for (std::size_t k = 0; k < 4; ++k) {
            const ParamEntry& e = spec.free_entry(k);
            v.values[k] = rng.uniform(e.min, e.max);
        }
        ParamVector back = denormalize(spec, normalize(spec, v));
        for (std::size_t k = 0; k < 4; ++k)
            CHECK(back.values[k] == doctest::Approx(v.values[k]).epsilon(1e-12));

        ParamVector back2 = recompose(spec, deviation(spec, v));
        ParamVector direct = normalize(spec, v);
        for (std::size_t k = 0; k < 4; ++k)
            CHECK(back2.values[k] == doctest::Approx(direct.values[k]).epsilon(1e-12));
    }
}

TEST_CASE("deviation is zero at the typical values and subtracts component-wise") {
    ParameterSpec spec = demo_spec();
    ParamVector at_typical{spec.typical_physical(), Frame::physical};
    DeviationVector d0 = deviation(spec, at_typical);
    for (double x : d0.values) CHECK(x == doctest::Approx(0.0));

    ParameterSpec mid({{"a", 0.0, 2.0, {}, 1.0}, {"b", 10.0, 30.0, {}, 20.0}});
    ParamVector shifted{{0.7, 0.5}, Frame::normalized};
    DeviationVector d = deviation(mid, shifted);
    CHECK(d.values[0] == doctest::Approx(0.2));
    CHECK(d.values[1] == doctest::Approx(0.0));
}

TEST_CASE("fixed entries are excluded from free-vector indexing") {
    ParameterSpec spec = demo_spec();
    CHECK(spec.total_count() == 5);
    CHECK(spec.free_count() == 4);
    CHECK(spec.fixed_value("J") == doctest::Approx(0.0148));
    std::vector<std::string> names = spec.free_names();
    CHECK(std::find(names.begin(), names.end(), "J") == names.end());
}

TEST_CASE("permuting entries permutes outputs identically") {
    std::vector<ParamEntry> fwd{
        {"a", 0.0, 2.0, {}, 1.0},
        {"b", 10.0, 30.0, {}, 15.0},
        {"c", -1.0, 1.0, {}, 0.0},
    };
    std::vector<ParamEntry> rev(fwd.rbegin(), fwd.rend());
    ParameterSpec s1{fwd}, s2{rev};

    ParamVector v1{{0.5, 12.0, 0.25}, Frame::physical};
    ParamVector v2{{0.25, 12.0, 0.5}, Frame::physical};
    ParamVector n1 = normalize(s1, v1);
    ParamVector n2 = normalize(s2, v2);
    CHECK(n1.values[0] == n2.values[2]);
    CHECK(n1.values[1] == n2.values[1]);
    CHECK(n1.values[2] == n2.values[0]);
}

TEST_CASE("out-of-bounds physical values clamp with a warning record") {
    ParameterSpec spec = demo_spec();
    ParamVector v{{40.0, 2.55, 0.45, 150.5}, Frame::physical};
    std::vector<std::size_t> clamped;
    ParamVector n = normalize(spec, v, &clamped);
    CHECK(n.values[0] == doctest::Approx(0.0));
    CHECK(n.values[2] == doctest::Approx(1.0));
    CHECK(clamped == std::vector<std::size_t>{0, 2});

    std::vector<std::size_t> flagged;
    ParamVector wide{{-0.25, 0.5, 1.5, 0.5}, Frame::normalized};
    ParamVector phys = denormalize(spec, wide, &flagged);
    CHECK(phys.values[0] == doctest::Approx(50.0 - 0.25 * 950.0));
    CHECK(phys.values[2] == doctest::Approx(0.1 + 1.5 * 0.3));
    CHECK(flagged == std::vector<std::size_t>{0, 2});
}

TEST_CASE("spec validation rejects malformed entries") {
    CHECK_THROWS_AS(ParameterSpec({{"x", 2.0, 1.0, {}, 1.5}}), InputError);
    CHECK_THROWS_AS(ParameterSpec({{"x", 0.0, 1.0, {}, 2.0}}), InputError);
    CHECK_THROWS_AS(ParameterSpec({{"x", 0.0, 1.0, {}, 0.5}, {"x", 0.0, 1.0, {}, 0.5}}),
                    InputError);
    CHECK_THROWS_AS(ParameterSpec({{"x", 0.0, 1.0, 0.7, 0.7}}), InputError);
    CHECK_THROWS_AS(ParameterSpec({{"j", 1.0, 1.0, 1.0, 1.0}}), InputError);
}

TEST_CASE("JSON round trip preserves the schema") {
    ParameterSpec spec = demo_spec();
    std::string text = spec.to_json_text();
    ParameterSpec back = ParameterSpec::from_json_text(text);
    CHECK(back.total_count() == spec.total_count());
    CHECK(back.free_count() == spec.free_count());
    for (std::size_t k = 0; k < spec.free_count(); ++k) {
        CHECK(back.free_entry(k).name == spec.free_entry(k).name);
        CHECK(back.free_entry(k).min == spec.free_entry(k).min);
        CHECK(back.free_entry(k).max == spec.free_entry(k).max);
        CHECK(back.free_entry(k).typical == spec.free_entry(k).typical);
    }
    CHECK(back.fixed_value("J") == doctest::Approx(0.0148));

    CHECK_THROWS_AS(ParameterSpec::from_json_text("{\"not\": \"an array\"}"), InputError);
    CHECK_THROWS_AS(ParameterSpec::from_json_text("[{\"name\": \"x\"}]"), InputError);
}

TEST_CASE("typical overrides replace stored values for free entries only") {
    ParameterSpec spec = demo_spec();
    ParameterSpec over = spec.with_typical({{"tau", 0.1}});
    CHECK(over.free_entry(2).typical == doctest::Approx(0.1));
    CHECK(over.free_entry(0).typical == doctest::Approx(500.0));
    CHECK_THROWS_AS(spec.with_typical({{"J", 1.0}}), InputError);
    CHECK_THROWS_AS(spec.with_typical({{"missing", 1.0}}), InputError);
    CHECK_THROWS_AS(spec.with_typical({{"tau", 99.0}}), InputError);
}
