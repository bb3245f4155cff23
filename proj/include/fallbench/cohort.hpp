#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "fallbench/error.hpp"
#include "fallbench/format.hpp"

namespace fallbench {

enum class Outcome : std::uint8_t { non_faller = 0, faller = 1 };

inline std::string_view outcome_label(Outcome o) {
    return o == Outcome::faller ? "faller" : "non_faller";
}

struct PatientRecord {
    std::string id;
    Outcome outcome = Outcome::non_faller;
    // aligned with Cohort::schema; nullopt = missing measurement
    std::vector<std::optional<double>> features;
};

struct VariableSet {
    std::string name;
    std::vector<std::string> variables;
};

// Variable names follow a group_measure convention; the prefix decides which
// assessment block the variable belongs to (used for block-wise missingness
// and the built-in variable sets).
inline std::string infer_group(std::string_view variable) {
    const auto us = variable.find('_');
    std::string_view prefix = us == std::string_view::npos ? variable : variable.substr(0, us);
    if (prefix == "demo") return "Demographics";
    if (prefix == "history") return "History";
    if (prefix == "trail") return "Trail";
    if (prefix == "stroop") return "Stroop";
    if (prefix == "semantic") return "Semantic";
    if (prefix == "walk12") return "Walk12";
    return std::string(prefix);
}

struct Cohort {
    std::vector<std::string> schema;  // feature column names, in file order
    std::vector<std::string> groups;  // group of each schema entry
    std::vector<PatientRecord> records;

    std::size_t column(std::string_view name) const {
        for (std::size_t i = 0; i < schema.size(); ++i)
            if (schema[i] == name) return i;
        throw std::invalid_argument("unknown variable: " + std::string(name));
    }

    bool has_variable(std::string_view name) const {
        return std::find(schema.begin(), schema.end(), name) != schema.end();
    }

    std::size_t faller_count() const {
        std::size_t n = 0;
        for (const auto& r : records) n += r.outcome == Outcome::faller;
        return n;
    }

    double prevalence() const {
        if (records.empty()) return 0.0;
        return static_cast<double>(faller_count()) / static_cast<double>(records.size());
    }

    // group names in order of first appearance in the schema
    std::vector<std::string> group_order() const {
        std::vector<std::string> out;
        for (const auto& g : groups)
            if (std::find(out.begin(), out.end(), g) == out.end()) out.push_back(g);
        return out;
    }

    std::vector<std::string> variables_in_group(std::string_view group) const {
        std::vector<std::string> out;
        for (std::size_t i = 0; i < schema.size(); ++i)
            if (groups[i] == group) out.push_back(schema[i]);
        return out;
    }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == ',') {
            cells.push_back(line.substr(start, i - start));
            start = i + 1;
        }
    }
    return cells;
}

inline double parse_number(std::string_view cell, std::size_t line_no, const std::string& column) {
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    double value = 0.0;
    auto res = std::from_chars(first, last, value);
    if (res.ec != std::errc{} || res.ptr != last || !std::isfinite(value))
        throw ConfigError("line " + std::to_string(line_no) + ", column " + column +
                          ": malformed number '" + std::string(cell) + "'");
    return value;
}

}  // namespace detail

// Parse the patient CSV format: header `patient_id,outcome,<variables...>`,
// outcome tokens faller/non_faller, empty or NA cells meaning missing.
inline Cohort parse_cohort(std::string_view text) {
    Cohort cohort;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    std::unordered_set<std::string> seen_ids;
    while (pos <= text.size()) {
        const std::size_t nl = text.find('\n', pos);
        std::string_view raw =
            nl == std::string_view::npos ? text.substr(pos) : text.substr(pos, nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        if (detail::trim(raw).empty()) continue;
        auto cells = detail::split_csv_line(raw);
        if (line_no == 1) {
            if (cells.size() < 2 || detail::trim(cells[0]) != "patient_id" ||
                detail::trim(cells[1]) != "outcome")
                throw ConfigError("header must start with patient_id,outcome");
            std::unordered_set<std::string> seen_vars;
            for (std::size_t i = 2; i < cells.size(); ++i) {
                std::string name(detail::trim(cells[i]));
                if (name.empty()) throw ConfigError("empty variable name in header");
                if (!seen_vars.insert(name).second)
                    throw ConfigError("duplicate variable in header: " + name);
                cohort.groups.push_back(infer_group(name));
                cohort.schema.push_back(std::move(name));
            }
            continue;
        }
        if (cells.size() != cohort.schema.size() + 2)
            throw ConfigError("line " + std::to_string(line_no) + ": expected " +
                              std::to_string(cohort.schema.size() + 2) + " cells, got " +
                              std::to_string(cells.size()));
        PatientRecord rec;
        rec.id = std::string(detail::trim(cells[0]));
        if (rec.id.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty patient_id");
        if (!seen_ids.insert(rec.id).second)
            throw ConfigError("line " + std::to_string(line_no) + ": duplicate patient_id '" + rec.id + "'");
        const auto outcome = detail::trim(cells[1]);
        if (outcome == "faller")
            rec.outcome = Outcome::faller;
        else if (outcome == "non_faller")
            rec.outcome = Outcome::non_faller;
        else
            throw ConfigError("line " + std::to_string(line_no) + ": unknown outcome '" +
                              std::string(outcome) + "'");
        rec.features.resize(cohort.schema.size());
        for (std::size_t i = 0; i < cohort.schema.size(); ++i) {
            const auto cell = detail::trim(cells[i + 2]);
            if (cell.empty() || cell == "NA") continue;
            rec.features[i] = detail::parse_number(cell, line_no, cohort.schema[i]);
        }
        cohort.records.push_back(std::move(rec));
    }
    if (line_no == 0 || cohort.schema.empty())
        throw ConfigError("cohort file has no header or no variables");
    return cohort;
}

inline Cohort parse_cohort(std::istream& in) {
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_cohort(std::string_view(ss.str()));
}

// Missing values are written as empty cells (never the NA token).
inline std::string serialize_cohort(const Cohort& cohort) {
    std::string out = "patient_id,outcome";
    for (const auto& v : cohort.schema) {
        out += ',';
        out += v;
    }
    out += '\n';
    for (const auto& rec : cohort.records) {
        out += rec.id;
        out += ',';
        out += outcome_label(rec.outcome);
        for (const auto& f : rec.features) {
            out += ',';
            if (f) out += format_double(*f);
        }
        out += '\n';
    }
    return out;
}

inline void validate_variable_set(const Cohort& cohort, const VariableSet& vs) {
    if (vs.variables.empty()) throw std::invalid_argument("variable set '" + vs.name + "' is empty");
    std::unordered_set<std::string_view> seen;
    for (const auto& v : vs.variables) {
        if (!seen.insert(v).second)
            throw std::invalid_argument("variable set '" + vs.name + "' repeats variable '" + v + "'");
        if (!cohort.has_variable(v))
            throw std::invalid_argument("variable set '" + vs.name + "' references unknown variable '" + v + "'");
    }
}

inline bool record_complete(const Cohort& cohort, const PatientRecord& rec, const VariableSet& vs) {
    for (const auto& v : vs.variables)
        if (!rec.features[cohort.column(v)]) return false;
    return true;
}

// Subset of the cohort with every variable of vs observed; record order kept.
inline Cohort select_complete(const Cohort& cohort, const VariableSet& vs) {
    validate_variable_set(cohort, vs);
    Cohort out;
    out.schema = cohort.schema;
    out.groups = cohort.groups;
    for (const auto& rec : cohort.records)
        if (record_complete(cohort, rec, vs)) out.records.push_back(rec);
    return out;
}

// The standard variable sets: one per assessment group, plus the pairwise
// unions around the Trail block and the set of everything.
inline std::vector<VariableSet> builtin_variable_sets(const Cohort& cohort) {
    std::vector<VariableSet> sets;
    const auto groups = cohort.group_order();
    for (const auto& g : groups) sets.push_back({g, cohort.variables_in_group(g)});
    auto find = [&](std::string_view name) -> const VariableSet* {
        for (const auto& s : sets)
            if (s.name == name) return &s;
        return nullptr;
    };
    const VariableSet* trail = find("Trail");
    if (trail) {
        for (std::string_view other : {"Demographics", "Stroop", "Semantic", "Walk12"}) {
            const VariableSet* o = find(other);
            if (!o) continue;
            VariableSet u{"Trail+" + std::string(other), trail->variables};
            u.variables.insert(u.variables.end(), o->variables.begin(), o->variables.end());
            sets.push_back(std::move(u));
        }
    }
    sets.push_back({"AllVariables", cohort.schema});
    return sets;
}

inline const VariableSet* find_variable_set(const std::vector<VariableSet>& sets, std::string_view name) {
    for (const auto& s : sets)
        if (s.name == name) return &s;
    return nullptr;
}

}  // namespace fallbench
