#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "sparsenls/experiments.hpp"
#include "sparsenls/selection.hpp"
#include "sparsenls/solver.hpp"

namespace sparsenls {

inline constexpr const char* kToolName = "sparse-nls";
inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr int kReportSchemaVersion = 1;

std::uint64_t fnv1a64(std::string_view bytes);
std::string to_hex(std::uint64_t value);

// Current UTC wall clock, second precision, trailing Z.
std::string iso8601_utc_now();

// Payload serializers. Non-finite numbers become JSON null. Wall-clock
// durations stay out of the payloads; the envelope's timing block owns
// them so golden comparisons can drop one key.
nlohmann::json solve_payload(const SolveResult& res, const ParameterSpec& spec);
nlohmann::json selection_payload(const SelectionOutcome& out, const ParameterSpec& spec);
nlohmann::json study_payload(const StudyReport& rep);
nlohmann::json study_timing(const StudyReport& rep);

struct ReportEnvelope {
    std::string subcommand;
    std::vector<std::string> command;
    std::string config_hash;
    std::string spec_name;
    nlohmann::json payload;
    nlohmann::json metrics;
    nlohmann::json timing;
};

nlohmann::json assemble_report(const ReportEnvelope& env);
void write_report(const std::string& path, const nlohmann::json& report);

// Model spec file for fit/select: {"model": id, "name"?, "typical_overrides"?}.
// `canonical` is the parsed content re-serialized, the config-hash input.
struct ModelFile {
    std::string name;
    std::string model_id;
    std::vector<std::pair<std::string, double>> typical_overrides;
    std::string canonical;

    std::shared_ptr<NonlinearModel> build() const;
};
ModelFile load_model_file(const std::string& path);

// Study config file for bench. truth_dev accepts a dense array or a sparse
// name-to-value object over the model's free parameters.
struct StudyFile {
    std::string name;
    std::string study;  // bias_variance | consistency | oracle | timing
    StudyConfig config;
    std::string canonical;
};
StudyFile load_study_file(const std::string& path);

// Flat long-format table (table,n,method,label,value) covering cells,
// per-n series and scalar summaries. LF endings.
void write_study_csv(const std::string& path, const StudyReport& rep);

// Minimal JSON Schema checker covering the subset the report schema uses:
// type (string or list), required, properties, additionalProperties:false,
// items, enum, const, pattern, minimum, maximum, minItems, oneOf.
// One message per violation, empty when the document conforms.
std::vector<std::string> schema_violations(const nlohmann::json& doc,
                                           const nlohmann::json& schema);

}  // namespace sparsenls
