#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "sparsenls/report.hpp"

using namespace sparsenls;
using nlohmann::json;

namespace {

std::string repo_root() {
    const char* r = std::getenv("SPARSE_NLS_ROOT");
    REQUIRE(r != nullptr);
    return r;
}

std::string write_temp(const std::string& name, const std::string& content) {
    auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream out(path, std::ios::binary);
    out << content;
    return path.string();
}

json shipped_schema() {
    std::ifstream in(repo_root() + "/schemas/report.schema.json");
    REQUIRE(in.good());
    return json::parse(in);
}

SolveResult tiny_result() {
    SolveResult res;
    res.deviations.values = {0.1, 0.0, -0.2, 0.0, 0.0, 0.0};
    res.params = ParamVector{{1.49, 1.0, 0.02, 2.5, 1.0, 4.0}, Frame::physical};
    res.sse = 0.25;
    res.vaf = 99.5;
    res.outer_iters = 7;
    res.status = SolveStatus::converged;
    res.trace = {{0, 1.0, 1e-3, 0.0, 0.3}, {1, 0.25, 5e-4, 0.05, 0.3}};
    res.active_mask = {true, false, true, false, false, false};
    res.wall_time = 0.01;
    return res;
}

const ParameterSpec& expsum_spec() {
    StudyConfig cfg;
    cfg.model_id = "expsum6";
    static auto model = make_study_model(cfg);
    return model->spec();
}

}  // namespace

TEST_CASE("fnv1a64 matches the published test vectors") {
    // offset basis: no bytes processed
    CHECK(fnv1a64("") == 0xcbf29ce484222325ull);
    // one manual round: (basis ^ 'a') * prime
    std::uint64_t expect_a = (0xcbf29ce484222325ull ^ 0x61ull) * 1099511628211ull;
    CHECK(fnv1a64("a") == expect_a);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
    std::uint64_t expect_ab = (expect_a ^ 0x62ull) * 1099511628211ull;
    CHECK(fnv1a64("ab") == expect_ab);
    CHECK(fnv1a64("ab") != fnv1a64("ba"));
}

TEST_CASE("to_hex pads to sixteen digits") {
    CHECK(to_hex(0) == "0000000000000000");
    CHECK(to_hex(0xdeadbeefull) == "00000000deadbeef");
    CHECK(to_hex(0xffffffffffffffffull) == "ffffffffffffffff");
}

TEST_CASE("iso8601_utc_now shape") {
    std::string ts = iso8601_utc_now();
    REQUIRE(ts.size() == 20);
    CHECK(ts[4] == '-');
    CHECK(ts[10] == 'T');
    CHECK(ts[19] == 'Z');
}

TEST_CASE("config hash is insensitive to key insertion order") {
    json a;
    a["seed"] = 7;
    a["spec"] = "x";
    json b;
    b["spec"] = "x";
    b["seed"] = 7;
    CHECK(to_hex(fnv1a64(a.dump())) == to_hex(fnv1a64(b.dump())));
    b["seed"] = 8;
    CHECK(to_hex(fnv1a64(a.dump())) != to_hex(fnv1a64(b.dump())));
}

TEST_CASE("solve_payload carries the fit and drops wall time") {
    SolveResult res = tiny_result();
    json p = solve_payload(res, expsum_spec());
    CHECK(p["kind"] == "solve");
    CHECK(p["status"] == "converged");
    CHECK(p["outer_iters"] == 7);
    CHECK(p["sse"] == 0.25);
    CHECK(p["deviations"].size() == 6);
    CHECK(p["params"]["names"][0] == "a1");
    CHECK(p["params"]["values"][3] == 2.5);
    CHECK(p["active"]["count"] == 2);
    CHECK(p["active"]["names"] == json::array({"a1", "a2"}));
    CHECK(p["trace"].size() == 2);
    CHECK(p["trace"][1]["sse"] == 0.25);
    CHECK(!p.contains("wall_time"));

    res.status = SolveStatus::stalled;
    res.sse = std::numeric_limits<double>::quiet_NaN();
    json q = solve_payload(res, expsum_spec());
    CHECK(q["status"] == "stalled");
    CHECK(q["sse"].is_null());
}

TEST_CASE("selection_payload embeds the final fit") {
    SelectionOutcome out;
    out.radius = 0.03;
    out.selected = {"a1", "a2"};
    out.result = tiny_result();
    out.rounds = 13;
    out.round_trace = {{1, 1.0, 6}, {13, 0.03, 2}};
    json p = selection_payload(out, expsum_spec());
    CHECK(p["kind"] == "selection");
    CHECK(p["radius"] == 0.03);
    CHECK(p["rounds"] == 13);
    CHECK(p["selected"].size() == 2);
    CHECK(p["round_trace"][1]["num_params"] == 2);
    CHECK(p["fit"]["kind"] == "solve");
    CHECK(p["fit"]["vaf"] == 99.5);
}

TEST_CASE("study payload and timing are disjoint") {
    StudyReport rep;
    rep.labels = {"a1", "b1"};
    rep.cells = {{100, "lasso", {0.1, 0.2}, {0.01, 0.02}, 9, 1}};
    rep.rmse_by_n = {{100, 0.05}};
    rep.consistency_slope = -0.5;
    rep.lm_sse = 1.25;
    rep.lm_median_s = 0.2;
    rep.baseline_median_s = 10.0;
    rep.speedup = 50.0;

    json p = study_payload(rep);
    CHECK(p["kind"] == "study");
    CHECK(p["cells"][0]["n"] == 100);
    CHECK(p["cells"][0]["bias"][1] == 0.2);
    CHECK(p["cells"][0]["r_failed"] == 1);
    CHECK(p["rmse_by_n"][0]["rmse"] == 0.05);
    CHECK(p["consistency_slope"] == -0.5);
    CHECK(p["variance_improvement_pct"].is_null());
    CHECK(p["lm_sse"] == 1.25);
    CHECK(!p.contains("lm_median_s"));
    CHECK(!p.contains("speedup"));

    json t = study_timing(rep);
    CHECK(t["lm_median_s"] == 0.2);
    CHECK(t["speedup"] == 50.0);

    StudyReport empty;
    CHECK(study_timing(empty).empty());
}

TEST_CASE("assembled report validates against the shipped schema") {
    ReportEnvelope env;
    env.subcommand = "fit";
    env.command = {"sparse-nls", "fit"};
    env.config_hash = to_hex(fnv1a64("x"));
    env.spec_name = "demo";
    env.payload = solve_payload(tiny_result(), expsum_spec());
    env.metrics = {{"vaf", 99.5}};
    env.timing = {{"started_at", iso8601_utc_now()},
                  {"finished_at", iso8601_utc_now()},
                  {"wall_s", 0.01}};
    json report = assemble_report(env);
    json schema = shipped_schema();
    CHECK(schema_violations(report, schema).empty());

    SUBCASE("tampered reports fail validation") {
        json bad = report;
        bad["report_schema"] = 2;
        CHECK(!schema_violations(bad, schema).empty());

        bad = report;
        bad.erase("config_hash");
        CHECK(!schema_violations(bad, schema).empty());

        bad = report;
        bad["config_hash"] = "XYZ";
        CHECK(!schema_violations(bad, schema).empty());

        bad = report;
        bad["subcommand"] = "train";
        CHECK(!schema_violations(bad, schema).empty());

        bad = report;
        bad["payload"].erase("status");
        CHECK(!schema_violations(bad, schema).empty());

        bad = report;
        bad["timing"]["wall_s"] = -1.0;
        CHECK(!schema_violations(bad, schema).empty());

        bad = report;
        bad["extra"] = 1;
        CHECK(!schema_violations(bad, schema).empty());
    }
}

TEST_CASE("schema checker primitives") {
    json schema = {{"type", "object"},
                   {"required", {"a"}},
                   {"properties",
                    {{"a", {{"type", "integer"}, {"minimum", 0}}},
                     {"b", {{"type", {"string", "null"}}}},
                     {"c", {{"enum", {"x", "y"}}}},
                     {"d", {{"type", "array"}, {"minItems", 2}, {"items", {{"type", "number"}}}}}}}};

    CHECK(schema_violations(json{{"a", 3}}, schema).empty());
    CHECK(schema_violations(json{{"a", 3}, {"b", nullptr}}, schema).empty());
    CHECK(schema_violations(json{{"a", 3}, {"b", "s"}}, schema).empty());
    CHECK(schema_violations(json{{"a", 3}, {"d", {1.0, 2.0}}}, schema).empty());

    CHECK(!schema_violations(json::object(), schema).empty());          // missing a
    CHECK(!schema_violations(json{{"a", -1}}, schema).empty());         // minimum
    CHECK(!schema_violations(json{{"a", 1.5}}, schema).empty());        // not integer
    CHECK(!schema_violations(json{{"a", 3}, {"b", 4}}, schema).empty());  // type list
    CHECK(!schema_violations(json{{"a", 3}, {"c", "z"}}, schema).empty());  // enum
    CHECK(!schema_violations(json{{"a", 3}, {"d", {1.0}}}, schema).empty());  // minItems
    CHECK(!schema_violations(json{{"a", 3}, {"d", {1.0, "s"}}}, schema).empty());  // items

    json one_of = {{"oneOf", {json{{"type", "string"}}, json{{"type", "number"}}}}};
    CHECK(schema_violations(json("s"), one_of).empty());
    CHECK(schema_violations(json(1.0), one_of).empty());
    CHECK(!schema_violations(json(true), one_of).empty());

    json both = {{"oneOf", {json{{"type", "number"}}, json{{"minimum", 0}}}}};
    // 1.0 satisfies both alternatives: oneOf demands exactly one
    CHECK(!schema_violations(json(1.0), both).empty());

    json pat = {{"type", "string"}, {"pattern", "^[0-9]+$"}};
    CHECK(schema_violations(json("123"), pat).empty());
    CHECK(!schema_violations(json("12a"), pat).empty());
}

TEST_CASE("load_model_file round trip and validation") {
    std::string good = write_temp("mf_good.json", R"({"name": "demo", "model": "expsum6"})");
    ModelFile mf = load_model_file(good);
    CHECK(mf.name == "demo");
    CHECK(mf.model_id == "expsum6");
    CHECK(mf.build()->spec().free_count() == 6);

    std::string unnamed = write_temp("mf_unnamed.json", R"({"model": "expsum4"})");
    CHECK(load_model_file(unnamed).name == "expsum4");

    std::string hn = write_temp("mf_hn.json",
                                R"({"model": "headneck", "typical_overrides": {"tau": 0.25}})");
    ModelFile hnf = load_model_file(hn);
    REQUIRE(hnf.typical_overrides.size() == 1);
    auto model = hnf.build();
    bool found = false;
    for (const ParamEntry& e : model->spec().entries())
        if (e.name == "tau") {
            CHECK(e.typical == 0.25);
            found = true;
        }
    CHECK(found);

    CHECK_THROWS_AS(load_model_file(write_temp("mf_nomodel.json", R"({"name": "x"})")),
                    InputError);
    CHECK_THROWS_AS(load_model_file(write_temp("mf_unknown.json",
                                               R"({"model": "expsum6", "mode": "fast"})")),
                    InputError);
    CHECK_THROWS_AS(
        load_model_file(write_temp("mf_badovr.json",
                                   R"({"model": "expsum6", "typical_overrides": {"a1": 2}})")),
        InputError);
    CHECK_THROWS_AS(load_model_file(write_temp("mf_arr.json", R"([1, 2])")), InputError);
    CHECK_THROWS_AS(load_model_file("/nonexistent/spec.json"), InputError);
}

TEST_CASE("load_study_file dense and sparse truth agree") {
    std::string sparse = write_temp("sf_sparse.json", R"({
        "study": "oracle", "model": "expsum6",
        "truth_dev": {"b1": 0.12, "a3": 0.15},
        "sample_sizes": [100, 200], "sigma": 0.01,
        "replications": 7, "seed": 3, "policy": "selection", "n_star": 2
    })");
    StudyFile a = load_study_file(sparse);
    CHECK(a.study == "oracle");
    CHECK(a.name == "oracle-expsum6");
    CHECK(a.config.truth_dev == Vec{0.0, 0.12, 0.0, 0.0, 0.15, 0.0});
    CHECK(a.config.sample_sizes == std::vector<std::size_t>{100, 200});
    CHECK(a.config.replications == 7);
    CHECK(a.config.policy == RadiusPolicy::selection);
    CHECK(a.config.n_star == 2);

    std::string dense = write_temp("sf_dense.json", R"({
        "study": "oracle", "model": "expsum6",
        "truth_dev": [0.0, 0.12, 0.0, 0.0, 0.15, 0.0],
        "sample_sizes": [100, 200], "sigma": 0.01,
        "replications": 7, "seed": 3, "policy": "selection", "n_star": 2
    })");
    StudyFile b = load_study_file(dense);
    CHECK(b.config.truth_dev == a.config.truth_dev);

    CHECK_THROWS_AS(load_study_file(write_temp("sf_kind.json", R"({
        "study": "speed", "model": "expsum6", "truth_dev": [], "sample_sizes": [10]
    })")),
                    InputError);
    CHECK_THROWS_AS(load_study_file(write_temp("sf_len.json", R"({
        "study": "oracle", "model": "expsum6", "truth_dev": [0.1], "sample_sizes": [10]
    })")),
                    InputError);
    CHECK_THROWS_AS(load_study_file(write_temp("sf_name.json", R"({
        "study": "oracle", "model": "expsum6", "truth_dev": {"zz": 0.1}, "sample_sizes": [10]
    })")),
                    InputError);
    CHECK_THROWS_AS(load_study_file(write_temp("sf_size.json", R"({
        "study": "oracle", "model": "expsum6", "truth_dev": {"b1": 0.1}, "sample_sizes": [0]
    })")),
                    InputError);
    CHECK_THROWS_AS(load_study_file(write_temp("sf_pol.json", R"({
        "study": "oracle", "model": "expsum6", "truth_dev": {"b1": 0.1},
        "sample_sizes": [10], "policy": "auto"
    })")),
                    InputError);
    CHECK_THROWS_AS(load_study_file(write_temp("sf_extra.json", R"({
        "study": "oracle", "model": "expsum6", "truth_dev": {"b1": 0.1},
        "sample_sizes": [10], "replicas": 5
    })")),
                    InputError);
}

TEST_CASE("bundled study configs load") {
    std::string root = repo_root();
    for (const char* name : {"bench_tiny", "consistency_expsum6", "recovery_expsum6",
                             "normality_expsum6", "biasvar_expsum6", "timing_headneck",
                             "selection_headneck"}) {
        StudyFile sf = load_study_file(root + "/data/configs/" + name + ".json");
        CHECK(!sf.name.empty());
        CHECK(!sf.config.truth_dev.empty());
    }
    StudyFile sel = load_study_file(root + "/data/configs/selection_headneck.json");
    CHECK(sel.config.policy == RadiusPolicy::selection);
    CHECK(sel.config.n_star == 5);
    CHECK(sel.config.sample_sizes == std::vector<std::size_t>{5400});
}

TEST_CASE("write_study_csv emits the long table and skips non-finite rows") {
    StudyReport rep;
    rep.labels = {"a1", "b1"};
    rep.cells = {{100, "lasso", {0.1, std::numeric_limits<double>::quiet_NaN()}, {0.01, 0.02}, 9, 1}};
    rep.rmse_by_n = {{100, 0.05}};
    rep.consistency_slope = -0.5;
    auto path = std::filesystem::temp_directory_path() / "study_table.csv";
    write_study_csv(path.string(), rep);

    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    std::string text = ss.str();
    CHECK(text.rfind("table,n,method,label,value\n", 0) == 0);
    CHECK(text.find("bias,100,lasso,a1,0.1") != std::string::npos);
    CHECK(text.find("bias,100,lasso,b1") == std::string::npos);  // NaN dropped
    CHECK(text.find("variance,100,lasso,b1,0.02") != std::string::npos);
    CHECK(text.find("replications,100,lasso,effective,9") != std::string::npos);
    CHECK(text.find("rmse,100,,,0.05") != std::string::npos);
    CHECK(text.find("summary,,,consistency_slope,-0.5") != std::string::npos);
    CHECK(text.find('\r') == std::string::npos);
}
