#include "sparsenls/report.hpp"

#include <algorithm>
#include <cmath>
#include <ctime>
#include <fstream>
#include <regex>
#include <sstream>

namespace sparsenls {

using nlohmann::json;

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string to_hex(std::uint64_t value) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[i] = digits[value & 0xf];
        value >>= 4;
    }
    return out;
}

std::string iso8601_utc_now() {
    std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

namespace {

json fin(double v) {
    if (!std::isfinite(v)) return nullptr;
    return v;
}

const char* status_name(SolveStatus s) {
    switch (s) {
        case SolveStatus::converged: return "converged";
        case SolveStatus::max_outer: return "max_outer";
        case SolveStatus::stalled: return "stalled";
    }
    return "unknown";
}

}  // namespace

json solve_payload(const SolveResult& res, const ParameterSpec& spec) {
    std::vector<std::string> names = spec.free_names();
    json active_names = json::array();
    std::size_t active_count = 0;
    for (std::size_t k = 0; k < res.active_mask.size(); ++k)
        if (res.active_mask[k]) {
            active_names.push_back(names[k]);
            ++active_count;
        }
    json trace = json::array();
    for (const TraceRow& row : res.trace)
        trace.push_back({{"iter", row.iter},
                         {"sse", fin(row.sse)},
                         {"mu", fin(row.mu)},
                         {"step_inf", fin(row.step_inf)},
                         {"l1_norm", fin(row.l1_norm)}});
    return {{"kind", "solve"},
            {"status", status_name(res.status)},
            {"outer_iters", res.outer_iters},
            {"sse", fin(res.sse)},
            {"vaf", fin(res.vaf)},
            {"deviations", res.deviations.values},
            {"params", {{"names", names}, {"values", res.params.values}}},
            {"active", {{"mask", res.active_mask}, {"names", active_names}, {"count", active_count}}},
            {"trace", trace}};
}

json selection_payload(const SelectionOutcome& out, const ParameterSpec& spec) {
    json rounds = json::array();
    for (const SelectionRound& r : out.round_trace)
        rounds.push_back(
            {{"round", r.round}, {"radius", fin(r.radius)}, {"num_params", r.num_params}});
    return {{"kind", "selection"},
            {"radius", fin(out.radius)},
            {"rounds", out.rounds},
            {"selected", out.selected},
            {"round_trace", rounds},
            {"fit", solve_payload(out.result, spec)}};
}

json study_payload(const StudyReport& rep) {
    json cells = json::array();
    for (const StudyCell& c : rep.cells)
        cells.push_back({{"n", c.n},
                         {"method", c.method},
                         {"bias", c.bias},
                         {"variance", c.variance},
                         {"r_effective", c.r_effective},
                         {"r_failed", c.r_failed}});
    json rmse = json::array();
    for (const auto& [n, v] : rep.rmse_by_n) rmse.push_back({{"n", n}, {"rmse", fin(v)}});
    json recovery = json::array();
    for (const auto& [n, v] : rep.recovery_by_n) recovery.push_back({{"n", n}, {"rate", fin(v)}});
    json qq = json::array();
    for (double v : rep.qq_correlation) qq.push_back(fin(v));
    return {{"kind", "study"},
            {"labels", rep.labels},
            {"cells", cells},
            {"rmse_by_n", rmse},
            {"consistency_slope", fin(rep.consistency_slope)},
            {"recovery_by_n", recovery},
            {"qq_correlation", qq},
            {"variance_improvement_pct", fin(rep.variance_improvement_pct)},
            {"median_bias_regularized", fin(rep.median_bias_regularized)},
            {"median_bias_unregularized", fin(rep.median_bias_unregularized)},
            {"lm_sse", fin(rep.lm_sse)},
            {"baseline_sse", fin(rep.baseline_sse)},
            {"baseline_converged", rep.baseline_converged}};
}

json study_timing(const StudyReport& rep) {
    json out = json::object();
    if (std::isfinite(rep.lm_median_s)) out["lm_median_s"] = rep.lm_median_s;
    if (std::isfinite(rep.baseline_median_s)) out["baseline_median_s"] = rep.baseline_median_s;
    if (std::isfinite(rep.speedup)) out["speedup"] = rep.speedup;
    return out;
}

json assemble_report(const ReportEnvelope& env) {
    return {{"report_schema", kReportSchemaVersion},
            {"tool", {{"name", kToolName}, {"version", kToolVersion}}},
            {"subcommand", env.subcommand},
            {"command", env.command},
            {"config_hash", env.config_hash},
            {"spec_name", env.spec_name},
            {"payload", env.payload},
            {"metrics", env.metrics},
            {"timing", env.timing}};
}

void write_report(const std::string& path, const json& report) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write report file: " + path);
    out << report.dump(2) << '\n';
    if (!out) throw InputError("write failed: " + path);
}

namespace {

json parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open config file: " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw InputError(path + ": " + e.what());
    }
}

void reject_unknown_keys(const json& obj, const std::vector<std::string>& known,
                         const std::string& origin) {
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        bool ok = false;
        for (const std::string& k : known)
            if (k == key) ok = true;
        if (!ok) throw InputError(origin + ": unknown key '" + key + "'");
    }
}

std::vector<std::pair<std::string, double>> parse_overrides(const json& obj,
                                                            const std::string& origin) {
    if (!obj.is_object()) throw InputError(origin + ": typical_overrides must be an object");
    std::vector<std::pair<std::string, double>> out;
    for (const auto& [key, value] : obj.items()) {
        if (!value.is_number())
            throw InputError(origin + ": typical override '" + key + "' must be a number");
        out.emplace_back(key, value.get<double>());
    }
    return out;
}

}  // namespace

std::shared_ptr<NonlinearModel> ModelFile::build() const {
    StudyConfig cfg;
    cfg.model_id = model_id;
    cfg.typical_overrides = typical_overrides;
    return make_study_model(cfg);
}

ModelFile load_model_file(const std::string& path) {
    json doc = parse_file(path);
    if (!doc.is_object()) throw InputError(path + ": model spec must be a JSON object");
    reject_unknown_keys(doc, {"name", "model", "typical_overrides"}, path);
    if (!doc.contains("model") || !doc["model"].is_string())
        throw InputError(path + ": model spec needs a string 'model' field");
    ModelFile out;
    out.model_id = doc["model"].get<std::string>();
    out.name = doc.value("name", out.model_id);
    if (doc.contains("typical_overrides"))
        out.typical_overrides = parse_overrides(doc["typical_overrides"], path);
    if (!out.typical_overrides.empty() && out.model_id != "headneck")
        throw InputError(path + ": typical overrides are only supported for the headneck model");
    out.canonical = doc.dump();
    return out;
}

StudyFile load_study_file(const std::string& path) {
    json doc = parse_file(path);
    if (!doc.is_object()) throw InputError(path + ": study config must be a JSON object");
    reject_unknown_keys(doc,
                        {"name", "study", "model", "truth_dev", "sample_sizes", "sigma",
                         "replications", "seed", "policy", "radius", "n_star", "duration_s",
                         "sample_rate", "typical_overrides"},
                        path);
    for (const char* key : {"study", "model", "truth_dev", "sample_sizes"})
        if (!doc.contains(key))
            throw InputError(path + ": study config needs a '" + std::string(key) + "' field");

    StudyFile out;
    out.study = doc["study"].get<std::string>();
    if (out.study != "bias_variance" && out.study != "consistency" && out.study != "oracle" &&
        out.study != "timing")
        throw InputError(path + ": unknown study kind '" + out.study + "'");

    StudyConfig& cfg = out.config;
    cfg.model_id = doc["model"].get<std::string>();
    if (doc.contains("typical_overrides"))
        cfg.typical_overrides = parse_overrides(doc["typical_overrides"], path);
    auto model = make_study_model(cfg);
    std::vector<std::string> names = model->spec().free_names();

    const json& truth = doc["truth_dev"];
    cfg.truth_dev.assign(names.size(), 0.0);
    if (truth.is_array()) {
        if (truth.size() != names.size())
            throw InputError(path + ": truth_dev length " + std::to_string(truth.size()) +
                             " does not match the model's " + std::to_string(names.size()) +
                             " free parameters");
        for (std::size_t k = 0; k < names.size(); ++k) cfg.truth_dev[k] = truth[k].get<double>();
    } else if (truth.is_object()) {
        for (const auto& [key, value] : truth.items()) {
            auto it = std::find(names.begin(), names.end(), key);
            if (it == names.end())
                throw InputError(path + ": truth_dev names unknown parameter '" + key + "'");
            cfg.truth_dev[static_cast<std::size_t>(it - names.begin())] = value.get<double>();
        }
    } else {
        throw InputError(path + ": truth_dev must be an array or a name-to-value object");
    }

    const json& sizes = doc["sample_sizes"];
    if (!sizes.is_array() || sizes.empty())
        throw InputError(path + ": sample_sizes must be a nonempty array");
    cfg.sample_sizes.clear();
    for (const json& s : sizes) {
        if (!s.is_number_integer() || s.get<long long>() <= 0)
            throw InputError(path + ": sample sizes must be positive integers");
        cfg.sample_sizes.push_back(s.get<std::size_t>());
    }

    cfg.sigma = doc.value("sigma", cfg.sigma);
    if (doc.contains("replications")) cfg.replications = doc["replications"].get<std::size_t>();
    if (doc.contains("seed")) cfg.seed = doc["seed"].get<std::uint64_t>();
    if (doc.contains("policy")) {
        std::string p = doc["policy"].get<std::string>();
        if (p == "fixed")
            cfg.policy = RadiusPolicy::fixed;
        else if (p == "oracle")
            cfg.policy = RadiusPolicy::oracle;
        else if (p == "selection")
            cfg.policy = RadiusPolicy::selection;
        else
            throw InputError(path + ": unknown radius policy '" + p + "'");
    }
    cfg.radius = doc.value("radius", cfg.radius);
    if (doc.contains("n_star")) cfg.n_star = doc["n_star"].get<std::size_t>();
    cfg.duration_s = doc.value("duration_s", cfg.duration_s);
    cfg.sample_rate = doc.value("sample_rate", cfg.sample_rate);

    out.name = doc.value("name", out.study + "-" + cfg.model_id);
    out.canonical = doc.dump();
    return out;
}

namespace {

void csv_row(std::ostream& out, const std::string& table, const std::string& n,
             const std::string& method, const std::string& label, double value) {
    if (!std::isfinite(value)) return;
    out << table << ',' << n << ',' << method << ',' << label << ',';
    std::ostringstream v;
    v.precision(17);
    v << value;
    out << v.str() << '\n';
}

}  // namespace

void write_study_csv(const std::string& path, const StudyReport& rep) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write study table: " + path);
    out << "table,n,method,label,value\n";
    for (const StudyCell& c : rep.cells) {
        std::string n = std::to_string(c.n);
        for (std::size_t k = 0; k < c.bias.size(); ++k)
            csv_row(out, "bias", n, c.method, rep.labels[k], c.bias[k]);
        for (std::size_t k = 0; k < c.variance.size(); ++k)
            csv_row(out, "variance", n, c.method, rep.labels[k], c.variance[k]);
        csv_row(out, "replications", n, c.method, "effective", static_cast<double>(c.r_effective));
        csv_row(out, "replications", n, c.method, "failed", static_cast<double>(c.r_failed));
    }
    for (const auto& [n, v] : rep.rmse_by_n) csv_row(out, "rmse", std::to_string(n), "", "", v);
    for (const auto& [n, v] : rep.recovery_by_n)
        csv_row(out, "recovery", std::to_string(n), "", "", v);
    for (std::size_t k = 0; k < rep.qq_correlation.size(); ++k) {
        std::string label = k < rep.labels.size() ? rep.labels[k] : std::to_string(k);
        csv_row(out, "qq_correlation", "", "", label, rep.qq_correlation[k]);
    }
    csv_row(out, "summary", "", "", "consistency_slope", rep.consistency_slope);
    csv_row(out, "summary", "", "", "variance_improvement_pct", rep.variance_improvement_pct);
    csv_row(out, "summary", "", "", "median_bias_regularized", rep.median_bias_regularized);
    csv_row(out, "summary", "", "", "median_bias_unregularized", rep.median_bias_unregularized);
    csv_row(out, "summary", "", "", "lm_sse", rep.lm_sse);
    csv_row(out, "summary", "", "", "baseline_sse", rep.baseline_sse);
    csv_row(out, "summary", "", "", "speedup", rep.speedup);
    if (!out) throw InputError("write failed: " + path);
}

namespace {

bool type_matches(const json& v, const std::string& t) {
    if (t == "object") return v.is_object();
    if (t == "array") return v.is_array();
    if (t == "string") return v.is_string();
    if (t == "number") return v.is_number();
    if (t == "integer") return v.is_number_integer() || v.is_number_unsigned();
    if (t == "boolean") return v.is_boolean();
    if (t == "null") return v.is_null();
    return false;
}

void check_node(const json& doc, const json& schema, const std::string& where,
                std::vector<std::string>& out) {
    if (!schema.is_object()) return;

    if (schema.contains("type")) {
        const json& t = schema["type"];
        bool ok = false;
        if (t.is_string()) {
            ok = type_matches(doc, t.get<std::string>());
        } else if (t.is_array()) {
            for (const json& alt : t)
                if (type_matches(doc, alt.get<std::string>())) ok = true;
        }
        if (!ok) {
            out.push_back(where + ": expected type " + t.dump() + ", got " + doc.type_name());
            return;
        }
    }

    if (schema.contains("const") && doc != schema["const"])
        out.push_back(where + ": must equal " + schema["const"].dump());

    if (schema.contains("enum")) {
        bool ok = false;
        for (const json& alt : schema["enum"])
            if (doc == alt) ok = true;
        if (!ok) out.push_back(where + ": " + doc.dump() + " is not one of " + schema["enum"].dump());
    }

    if (schema.contains("pattern") && doc.is_string()) {
        std::regex re(schema["pattern"].get<std::string>());
        if (!std::regex_search(doc.get<std::string>(), re))
            out.push_back(where + ": '" + doc.get<std::string>() + "' does not match pattern " +
                          schema["pattern"].get<std::string>());
    }

    if (doc.is_number()) {
        double v = doc.get<double>();
        if (schema.contains("minimum") && v < schema["minimum"].get<double>())
            out.push_back(where + ": " + doc.dump() + " is below the minimum");
        if (schema.contains("maximum") && v > schema["maximum"].get<double>())
            out.push_back(where + ": " + doc.dump() + " is above the maximum");
    }

    if (doc.is_array()) {
        if (schema.contains("minItems") && doc.size() < schema["minItems"].get<std::size_t>())
            out.push_back(where + ": fewer than " + schema["minItems"].dump() + " items");
        if (schema.contains("items"))
            for (std::size_t i = 0; i < doc.size(); ++i)
                check_node(doc[i], schema["items"], where + "/" + std::to_string(i), out);
    }

    if (doc.is_object()) {
        if (schema.contains("required"))
            for (const json& key : schema["required"])
                if (!doc.contains(key.get<std::string>()))
                    out.push_back(where + ": missing required key '" + key.get<std::string>() + "'");
        const json* props = schema.contains("properties") ? &schema["properties"] : nullptr;
        if (props)
            for (const auto& [key, sub] : props->items())
                if (doc.contains(key)) check_node(doc[key], sub, where + "/" + key, out);
        if (schema.contains("additionalProperties") &&
            schema["additionalProperties"].is_boolean() &&
            !schema["additionalProperties"].get<bool>()) {
            for (const auto& [key, value] : doc.items()) {
                (void)value;
                if (!props || !props->contains(key))
                    out.push_back(where + ": unexpected key '" + key + "'");
            }
        }
    }

    if (schema.contains("oneOf")) {
        std::size_t matches = 0;
        for (const json& alt : schema["oneOf"]) {
            std::vector<std::string> sub;
            check_node(doc, alt, where, sub);
            if (sub.empty()) ++matches;
        }
        if (matches != 1)
            out.push_back(where + ": matches " + std::to_string(matches) + " of " +
                          std::to_string(schema["oneOf"].size()) + " alternatives, expected 1");
    }
}

}  // namespace

std::vector<std::string> schema_violations(const json& doc, const json& schema) {
    std::vector<std::string> out;
    check_node(doc, schema, "#", out);
    return out;
}

}  // namespace sparsenls
