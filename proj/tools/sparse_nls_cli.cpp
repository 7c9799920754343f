#include <cctype>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sparsenls/dataset.hpp"
#include "sparsenls/experiments.hpp"
#include "sparsenls/kernels.hpp"
#include "sparsenls/models.hpp"
#include "sparsenls/report.hpp"
#include "sparsenls/selection.hpp"
#include "sparsenls/solver.hpp"

namespace {

using nlohmann::json;
using namespace sparsenls;

constexpr double kInf = std::numeric_limits<double>::infinity();

int resolve_jobs(int cli_jobs) {
    const char* env = std::getenv("SPARSE_NLS_JOBS");
    if (env && *env) {
        char* end = nullptr;
        long v = std::strtol(env, &end, 10);
        if (end == env || *end != '\0')
            throw InputError("SPARSE_NLS_JOBS must be an integer, got '" + std::string(env) + "'");
        return static_cast<int>(v);
    }
    return cli_jobs;
}

std::string file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open data file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

json base_timing(const std::string& started, double wall_s) {
    return {{"started_at", started}, {"finished_at", iso8601_utc_now()}, {"wall_s", wall_s}};
}

void print_fit_summary(const SolveResult& res, const ParameterSpec& spec) {
    const char* status = res.status == SolveStatus::converged ? "converged"
                         : res.status == SolveStatus::max_outer ? "hit the outer iteration cap"
                                                                : "stalled";
    std::cout << "status: " << status << " after " << res.outer_iters << " iterations\n";
    std::cout << "VAF: " << std::fixed << std::setprecision(2) << res.vaf << "%\n";
    std::vector<std::string> names = spec.free_names();
    std::size_t count = 0;
    for (bool a : res.active_mask)
        if (a) ++count;
    std::cout << "active parameters (" << count << "):";
    if (count == 0) std::cout << " none";
    std::cout.unsetf(std::ios::fixed);
    std::cout << std::setprecision(6);
    for (std::size_t k = 0; k < res.active_mask.size(); ++k)
        if (res.active_mask[k]) std::cout << ' ' << names[k] << '=' << res.params.values[k];
    std::cout << '\n';
}

struct FitOpts {
    std::string data;
    std::string spec;
    std::string out = "report.json";
    double radius = kInf;
    bool unregularized = false;
    std::size_t starts = 1;
    std::uint64_t seed = 0;
    std::size_t max_outer = 200;
    double step_tol = 1e-6;
};

int run_fit(const FitOpts& o, const std::vector<std::string>& cmd) {
    std::string started = iso8601_utc_now();
    auto t0 = std::chrono::steady_clock::now();

    ModelFile mf = load_model_file(o.spec);
    auto model = mf.build();
    std::string data_hash = to_hex(fnv1a64(file_bytes(o.data)));
    Dataset data = read_csv(o.data);

    SolverConfig cfg;
    cfg.radius = o.unregularized ? kInf : o.radius;
    cfg.max_outer = o.max_outer;
    cfg.step_tol = o.step_tol;
    SolveResult res =
        o.starts <= 1
            ? fit(*model, data, DeviationVector{Vec(model->spec().free_count(), 0.0)}, cfg)
            : fit_multistart(*model, data, cfg, o.starts, o.seed);

    json hash_src = {{"subcommand", "fit"}, {"spec", mf.canonical},   {"data", data_hash},
                     {"radius", cfg.radius}, {"starts", o.starts},     {"seed", o.seed},
                     {"max_outer", o.max_outer}, {"step_tol", o.step_tol}};
    std::size_t active_count = 0;
    for (bool a : res.active_mask)
        if (a) ++active_count;

    ReportEnvelope env;
    env.subcommand = "fit";
    env.command = cmd;
    env.config_hash = to_hex(fnv1a64(hash_src.dump()));
    env.spec_name = mf.name;
    env.payload = solve_payload(res, model->spec());
    env.metrics = {{"sse", res.sse},
                   {"vaf", res.vaf},
                   {"active_count", active_count},
                   {"outer_iters", res.outer_iters}};
    env.timing = base_timing(started, seconds_since(t0));
    env.timing["solve_s"] = res.wall_time;
    write_report(o.out, assemble_report(env));

    print_fit_summary(res, model->spec());
    std::cout << "report: " << o.out << '\n';
    return res.status == SolveStatus::converged ? 0 : 2;
}

struct SelectOpts {
    std::string data;
    std::string spec;
    std::string out = "report.json";
    std::size_t nstar = 1;
    double t_init = 1.0;
    double threshold = 0.001;
    std::size_t max_rounds = 100;
};

int run_select(const SelectOpts& o, const std::vector<std::string>& cmd) {
    std::string started = iso8601_utc_now();
    auto t0 = std::chrono::steady_clock::now();

    ModelFile mf = load_model_file(o.spec);
    auto model = mf.build();
    std::size_t p = model->spec().free_count();
    if (o.nstar < 1 || o.nstar > p)
        throw InputError("target count " + std::to_string(o.nstar) +
                         " is infeasible for a model with " + std::to_string(p) +
                         " free parameters");
    std::string data_hash = to_hex(fnv1a64(file_bytes(o.data)));
    Dataset data = read_csv(o.data);

    SelectionConfig sel;
    sel.n_star = o.nstar;
    sel.t_init = o.t_init;
    sel.select_threshold = o.threshold;
    sel.max_rounds = o.max_rounds;
    SolverConfig solver;
    SelectionOutcome out = select(*model, data, sel, solver);

    json hash_src = {{"subcommand", "select"}, {"spec", mf.canonical}, {"data", data_hash},
                     {"nstar", o.nstar},       {"t_init", o.t_init},   {"threshold", o.threshold}};

    ReportEnvelope env;
    env.subcommand = "select";
    env.command = cmd;
    env.config_hash = to_hex(fnv1a64(hash_src.dump()));
    env.spec_name = mf.name;
    env.payload = selection_payload(out, model->spec());
    env.metrics = {{"sse", out.result.sse},
                   {"vaf", out.result.vaf},
                   {"radius", out.radius},
                   {"selected_count", out.selected.size()},
                   {"rounds", out.rounds}};
    env.timing = base_timing(started, seconds_since(t0));
    env.timing["solve_s"] = out.result.wall_time;
    write_report(o.out, assemble_report(env));

    std::cout << "round  radius      active\n";
    for (const SelectionRound& r : out.round_trace)
        std::cout << std::setw(5) << r.round << "  " << std::fixed << std::setprecision(6)
                  << std::setw(10) << r.radius << "  " << std::setw(6) << r.num_params << '\n';
    std::cout.unsetf(std::ios::fixed);
    std::cout << "selected (" << out.selected.size() << "):";
    for (const std::string& name : out.selected) std::cout << ' ' << name;
    std::cout << '\n';
    std::cout << "VAF: " << std::fixed << std::setprecision(2) << out.result.vaf << "%\n";
    std::cout.unsetf(std::ios::fixed);
    std::cout << "report: " << o.out << '\n';
    return out.result.status == SolveStatus::converged ? 0 : 2;
}

struct SimOpts {
    std::string model = "expsum6";
    std::string theta0;
    std::size_t n = 0;
    double sigma = 0.0;
    std::uint64_t seed = 0;
    double rate = 60.0;
    double duration = 3.0;
    std::string out = "data.csv";
};

Vec parse_theta0(const std::string& text, std::size_t p) {
    Vec out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t pos = 0;
            out.push_back(std::stod(item, &pos));
            while (pos < item.size() && std::isspace(static_cast<unsigned char>(item[pos]))) ++pos;
            if (pos != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw InputError("theta0 entry '" + item + "' is not a number");
        }
    }
    if (out.size() != p)
        throw InputError("theta0 has " + std::to_string(out.size()) + " entries, the model has " +
                         std::to_string(p) + " free parameters");
    return out;
}

int run_simulate(const SimOpts& o, const std::vector<std::string>& cmd) {
    std::string started = iso8601_utc_now();
    auto t0 = std::chrono::steady_clock::now();

    StudyConfig cfg;
    cfg.model_id = o.model;
    auto model = make_study_model(cfg);
    const ParameterSpec& spec = model->spec();
    Vec phys = spec.typical_physical();
    if (!o.theta0.empty()) phys = parse_theta0(o.theta0, spec.free_count());
    cfg.truth_dev = deviation(spec, ParamVector{phys, Frame::physical}).values;
    cfg.sigma = o.sigma;
    cfg.seed = o.seed;
    cfg.duration_s = o.duration;
    cfg.sample_rate = o.rate;

    Dataset ds = make_study_dataset(cfg, *model, o.n, 0);
    write_csv(o.out, ds);

    json hash_src = {{"subcommand", "simulate"}, {"model", o.model}, {"theta0", phys},
                     {"n", o.n},                 {"sigma", o.sigma}, {"seed", o.seed},
                     {"rate", o.rate},           {"duration", o.duration}};
    double duration_s = static_cast<double>(ds.size()) / ds.sample_rate;

    ReportEnvelope env;
    env.subcommand = "simulate";
    env.command = cmd;
    env.config_hash = to_hex(fnv1a64(hash_src.dump()));
    env.spec_name = o.model;
    env.payload = {{"kind", "dataset"},
                   {"rows", ds.size()},
                   {"duration_s", duration_s},
                   {"sample_rate", ds.sample_rate},
                   {"sigma", o.sigma},
                   {"seed", o.seed},
                   {"model", o.model},
                   {"theta0", phys},
                   {"csv", std::filesystem::path(o.out).filename().string()}};
    env.metrics = {{"rows", ds.size()},
                   {"duration_s", duration_s},
                   {"sample_rate", ds.sample_rate},
                   {"sigma", o.sigma}};
    env.timing = base_timing(started, seconds_since(t0));
    std::filesystem::path report_path(o.out);
    report_path.replace_extension(".report.json");
    write_report(report_path.string(), assemble_report(env));

    std::cout << "wrote " << ds.size() << " samples (" << duration_s << " s at " << ds.sample_rate
              << " Hz): " << o.out << '\n';
    std::cout << "report: " << report_path.string() << '\n';
    return 0;
}

struct BenchOpts {
    std::string config;
    std::string out = "report.json";
};

int run_bench(const BenchOpts& o, const std::vector<std::string>& cmd) {
    std::string started = iso8601_utc_now();
    auto t0 = std::chrono::steady_clock::now();

    StudyFile sf = load_study_file(o.config);
    StudyReport rep;
    if (sf.study == "bias_variance")
        rep = run_bias_variance_study(sf.config);
    else if (sf.study == "consistency")
        rep = run_consistency_study(sf.config);
    else if (sf.study == "oracle")
        rep = run_oracle_study(sf.config);
    else
        rep = run_timing_benchmark(sf.config);

    json hash_src = {{"subcommand", "bench"}, {"config", sf.canonical}};

    json metrics = {{"study", sf.study}};
    if (std::isfinite(rep.consistency_slope)) metrics["consistency_slope"] = rep.consistency_slope;
    if (std::isfinite(rep.variance_improvement_pct))
        metrics["variance_improvement_pct"] = rep.variance_improvement_pct;
    if (std::isfinite(rep.median_bias_regularized))
        metrics["median_bias_regularized"] = rep.median_bias_regularized;
    if (std::isfinite(rep.median_bias_unregularized))
        metrics["median_bias_unregularized"] = rep.median_bias_unregularized;
    if (!rep.recovery_by_n.empty()) metrics["final_recovery"] = rep.recovery_by_n.back().second;
    if (std::isfinite(rep.lm_sse)) metrics["lm_sse"] = rep.lm_sse;
    if (std::isfinite(rep.baseline_sse)) metrics["baseline_sse"] = rep.baseline_sse;

    ReportEnvelope env;
    env.subcommand = "bench";
    env.command = cmd;
    env.config_hash = to_hex(fnv1a64(hash_src.dump()));
    env.spec_name = sf.name;
    env.payload = study_payload(rep);
    env.metrics = metrics;
    env.timing = base_timing(started, seconds_since(t0));
    for (const auto& [key, value] : study_timing(rep).items()) env.timing[key] = value;
    write_report(o.out, assemble_report(env));

    std::filesystem::path table_path(o.out);
    table_path.replace_extension(".csv");
    write_study_csv(table_path.string(), rep);

    std::cout << "study: " << sf.study << " (" << sf.name << ")\n";
    for (const auto& [key, value] : metrics.items())
        if (key != "study") std::cout << "  " << key << " = " << value.dump() << '\n';
    for (const auto& [key, value] : study_timing(rep).items())
        std::cout << "  " << key << " = " << value.dump() << '\n';
    std::cout << "report: " << o.out << '\n';
    std::cout << "table: " << table_path.string() << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"penalized nonlinear least squares toolkit"};
    app.set_version_flag("--version", kToolVersion);
    app.require_subcommand(1);
    int jobs = 0;
    app.add_option("--jobs", jobs,
                   "worker threads for parallel sections (0 keeps the OpenMP default; "
                   "SPARSE_NLS_JOBS overrides)");

    FitOpts fo;
    CLI::App* fit_cmd = app.add_subcommand("fit", "fit a model to a dataset");
    fit_cmd->add_option("--data", fo.data, "input CSV with header t,x,y")->required();
    fit_cmd->add_option("--spec", fo.spec, "model spec JSON")->required();
    CLI::Option* radius_opt = fit_cmd->add_option("--radius", fo.radius, "L1 ball radius");
    CLI::Option* unreg_opt =
        fit_cmd->add_flag("--unregularized", fo.unregularized, "plain LM, no constraint");
    radius_opt->excludes(unreg_opt);
    unreg_opt->excludes(radius_opt);
    fit_cmd->add_option("--starts", fo.starts, "number of multistart initializations");
    fit_cmd->add_option("--seed", fo.seed, "multistart RNG seed");
    fit_cmd->add_option("--out", fo.out, "report path");
    fit_cmd->add_option("--max-outer", fo.max_outer, "outer iteration cap");
    fit_cmd->add_option("--step-tol", fo.step_tol, "accepted-step convergence tolerance");

    SelectOpts so;
    CLI::App* select_cmd = app.add_subcommand("select", "shrink the ball until n_star survive");
    select_cmd->add_option("--data", so.data, "input CSV with header t,x,y")->required();
    select_cmd->add_option("--spec", so.spec, "model spec JSON")->required();
    select_cmd->add_option("--nstar", so.nstar, "target number of active parameters")->required();
    select_cmd->add_option("--tinit", so.t_init, "initial radius");
    select_cmd->add_option("--threshold", so.threshold, "activity threshold");
    select_cmd->add_option("--max-rounds", so.max_rounds, "radius adjustment cap");
    select_cmd->add_option("--out", so.out, "report path");

    SimOpts mo;
    CLI::App* sim_cmd = app.add_subcommand("simulate", "write a synthetic t,x,y dataset");
    sim_cmd->add_option("--model", mo.model, "model id (expsum<p> or headneck)");
    sim_cmd->add_option("--theta0", mo.theta0, "comma-separated physical parameter values");
    sim_cmd->add_option("--n", mo.n, "sample count")->required()->check(CLI::PositiveNumber);
    sim_cmd->add_option("--sigma", mo.sigma, "noise sd as a fraction of clean signal RMS");
    sim_cmd->add_option("--seed", mo.seed, "RNG seed");
    sim_cmd->add_option("--rate", mo.rate, "sample rate, Hz (headneck)");
    sim_cmd->add_option("--duration", mo.duration, "input span, seconds (expsum)");
    sim_cmd->add_option("--out", mo.out, "output CSV path");

    BenchOpts bo;
    CLI::App* bench_cmd = app.add_subcommand("bench", "run a study config");
    bench_cmd->add_option("config", bo.config, "study config JSON path")->required();
    bench_cmd->add_option("--out", bo.out, "report path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }

    std::vector<std::string> cmd(argv, argv + argc);
    try {
        kernels::set_jobs(resolve_jobs(jobs));
        if (app.got_subcommand(fit_cmd)) return run_fit(fo, cmd);
        if (app.got_subcommand(select_cmd)) return run_select(so, cmd);
        if (app.got_subcommand(sim_cmd)) return run_simulate(mo, cmd);
        return run_bench(bo, cmd);
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
