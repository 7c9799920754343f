#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sparsenls/types.hpp"

namespace sparsenls {

struct ParamEntry {
    std::string name;
    double min = 0.0;
    double max = 0.0;
    std::optional<double> fixed;  // engaged => min == max == *fixed
    double typical = 0.0;         // physical units, in [min, max]
};

enum class Frame { physical, normalized };

// Vector over the free entries of a ParameterSpec, in declaration order.
struct ParamVector {
    Vec values;
    Frame frame = Frame::physical;
};

// Normalized-frame deviation from the typical values.
struct DeviationVector {
    Vec values;
};

// Ordered parameter schema: bounds, fixed values and typical values.
// Immutable after construction; free entries define vector indexing.
class ParameterSpec {
public:
    explicit ParameterSpec(std::vector<ParamEntry> entries);

    static ParameterSpec from_json_file(const std::string& path);
    static ParameterSpec from_json_text(const std::string& text, const std::string& origin = "<string>");
    std::string to_json_text() const;

    std::size_t free_count() const { return free_idx_.size(); }
    std::size_t total_count() const { return entries_.size(); }
    const ParamEntry& free_entry(std::size_t k) const { return entries_[free_idx_[k]]; }
    const std::vector<ParamEntry>& entries() const { return entries_; }

    // fixed entry lookup by name; throws InputError if absent or not fixed
    double fixed_value(const std::string& name) const;
    bool has_entry(const std::string& name) const;

    std::vector<std::string> free_names() const;
    Vec typical_physical() const;     // free entries
    ParamVector typical_normalized() const;
    double scale(std::size_t k) const {  // max - min of free entry k
        const ParamEntry& e = free_entry(k);
        return e.max - e.min;
    }

    // Replaces typical values (physical frame) for the named free entries.
    ParameterSpec with_typical(const std::vector<std::pair<std::string, double>>& overrides) const;

private:
    std::vector<ParamEntry> entries_;
    std::vector<std::size_t> free_idx_;
};

// Min-max normalization of the free entries. Out-of-bounds physical values
// are clamped and the entry index recorded in *clamped when given; penalized
// iterates can transiently exit the box, so this never throws.
ParamVector normalize(const ParameterSpec& spec, const ParamVector& v,
                      std::vector<std::size_t>* clamped = nullptr);

// Inverse map; values outside [0,1] extend linearly outside the bounds and
// are recorded in *flagged when given.
ParamVector denormalize(const ParameterSpec& spec, const ParamVector& v,
                        std::vector<std::size_t>* flagged = nullptr);

DeviationVector deviation(const ParameterSpec& spec, const ParamVector& v);
ParamVector recompose(const ParameterSpec& spec, const DeviationVector& d);

}  // namespace sparsenls
