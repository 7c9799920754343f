#include "sparsenls/param_space.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace sparsenls {

using nlohmann::json;

ParameterSpec::ParameterSpec(std::vector<ParamEntry> entries) : entries_(std::move(entries)) {
    std::set<std::string> seen;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        const ParamEntry& e = entries_[i];
        if (e.name.empty()) throw InputError("parameter entry " + std::to_string(i) + " has an empty name");
        if (!seen.insert(e.name).second) throw InputError("duplicate parameter name '" + e.name + "'");
        if (e.fixed) {
            if (e.min != *e.fixed || e.max != *e.fixed)
                throw InputError("fixed parameter '" + e.name + "' must have min = max = fixed value");
        } else {
            if (!(e.min < e.max))
                throw InputError("parameter '" + e.name + "' needs min < max, got [" +
                                 std::to_string(e.min) + ", " + std::to_string(e.max) + "]");
            if (e.typical < e.min || e.typical > e.max)
                throw InputError("typical value of '" + e.name + "' lies outside its bounds");
            free_idx_.push_back(i);
        }
    }
    if (free_idx_.empty()) throw InputError("parameter spec has no free entries");
}

double ParameterSpec::fixed_value(const std::string& name) const {
    for (const ParamEntry& e : entries_)
        if (e.name == name) {
            if (!e.fixed) throw InputError("parameter '" + name + "' is not fixed");
            return *e.fixed;
        }
    throw InputError("no parameter named '" + name + "'");
}

bool ParameterSpec::has_entry(const std::string& name) const {
    return std::any_of(entries_.begin(), entries_.end(),
                       [&](const ParamEntry& e) { return e.name == name; });
}

std::vector<std::string> ParameterSpec::free_names() const {
    std::vector<std::string> out;
    out.reserve(free_count());
    for (std::size_t k = 0; k < free_count(); ++k) out.push_back(free_entry(k).name);
    return out;
}

Vec ParameterSpec::typical_physical() const {
    Vec out(free_count());
    for (std::size_t k = 0; k < free_count(); ++k) out[k] = free_entry(k).typical;
    return out;
}

ParamVector ParameterSpec::typical_normalized() const {
    return normalize(*this, ParamVector{typical_physical(), Frame::physical});
}

ParameterSpec ParameterSpec::with_typical(
    const std::vector<std::pair<std::string, double>>& overrides) const {
    std::vector<ParamEntry> entries = entries_;
    for (const auto& [name, value] : overrides) {
        bool found = false;
        for (ParamEntry& e : entries)
            if (e.name == name) {
                if (e.fixed) throw InputError("cannot override typical value of fixed parameter '" + name + "'");
                e.typical = value;
                found = true;
            }
        if (!found) throw InputError("typical override names unknown parameter '" + name + "'");
    }
    return ParameterSpec(std::move(entries));
}

static ParameterSpec parse_spec(const json& doc, const std::string& origin) {
    if (!doc.is_array()) throw InputError(origin + ": parameter spec must be a JSON array");
    std::vector<ParamEntry> entries;
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const json& item = doc[i];
        if (!item.is_object() || !item.contains("name"))
            throw InputError(origin + ": entry " + std::to_string(i) + " must be an object with a name");
        ParamEntry e;
        e.name = item.at("name").get<std::string>();
        if (item.contains("fixed")) {
            e.fixed = item.at("fixed").get<double>();
            e.min = item.value("min", *e.fixed);
            e.max = item.value("max", *e.fixed);
            e.typical = *e.fixed;
        } else {
            if (!item.contains("min") || !item.contains("max"))
                throw InputError(origin + ": entry '" + e.name + "' is missing min/max bounds");
            e.min = item.at("min").get<double>();
            e.max = item.at("max").get<double>();
            e.typical = item.contains("typical") ? item.at("typical").get<double>()
                                                 : 0.5 * (e.min + e.max);
        }
        entries.push_back(std::move(e));
    }
    return ParameterSpec(std::move(entries));
}

ParameterSpec ParameterSpec::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open parameter spec file: " + path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw InputError(path + ": " + e.what());
    }
    return parse_spec(doc, path);
}

ParameterSpec ParameterSpec::from_json_text(const std::string& text, const std::string& origin) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw InputError(origin + ": " + e.what());
    }
    return parse_spec(doc, origin);
}

std::string ParameterSpec::to_json_text() const {
    json arr = json::array();
    for (const ParamEntry& e : entries_) {
        json item{{"name", e.name}, {"min", e.min}, {"max", e.max}};
        if (e.fixed)
            item["fixed"] = *e.fixed;
        else
            item["typical"] = e.typical;
        arr.push_back(std::move(item));
    }
    return arr.dump(2);
}

ParamVector normalize(const ParameterSpec& spec, const ParamVector& v,
                      std::vector<std::size_t>* clamped) {
    if (v.frame != Frame::physical) throw InputError("normalize expects a physical-frame vector");
    if (v.values.size() != spec.free_count()) throw InputError("vector length does not match spec");
    ParamVector out{Vec(v.values.size()), Frame::normalized};
    for (std::size_t k = 0; k < v.values.size(); ++k) {
        const ParamEntry& e = spec.free_entry(k);
        double x = v.values[k];
        if (x < e.min || x > e.max) {
            x = std::clamp(x, e.min, e.max);
            if (clamped) clamped->push_back(k);
        }
        out.values[k] = (x - e.min) / (e.max - e.min);
    }
    return out;
}

ParamVector denormalize(const ParameterSpec& spec, const ParamVector& v,
                        std::vector<std::size_t>* flagged) {
    if (v.frame != Frame::normalized) throw InputError("denormalize expects a normalized-frame vector");
    if (v.values.size() != spec.free_count()) throw InputError("vector length does not match spec");
    ParamVector out{Vec(v.values.size()), Frame::physical};
    for (std::size_t k = 0; k < v.values.size(); ++k) {
        const ParamEntry& e = spec.free_entry(k);
        if ((v.values[k] < 0.0 || v.values[k] > 1.0) && flagged) flagged->push_back(k);
        out.values[k] = e.min + v.values[k] * (e.max - e.min);
    }
    return out;
}

DeviationVector deviation(const ParameterSpec& spec, const ParamVector& v) {
    ParamVector vn = v.frame == Frame::normalized ? v : normalize(spec, v);
    ParamVector tn = spec.typical_normalized();
    DeviationVector d{Vec(vn.values.size())};
    for (std::size_t k = 0; k < vn.values.size(); ++k) d.values[k] = vn.values[k] - tn.values[k];
    return d;
}

ParamVector recompose(const ParameterSpec& spec, const DeviationVector& d) {
    if (d.values.size() != spec.free_count()) throw InputError("deviation length does not match spec");
    ParamVector tn = spec.typical_normalized();
    ParamVector out{Vec(d.values.size()), Frame::normalized};
    for (std::size_t k = 0; k < d.values.size(); ++k) out.values[k] = tn.values[k] + d.values[k];
    return out;
}

}  // namespace sparsenls
