#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fallbench/error.hpp"
#include "fallbench/eval.hpp"
#include "fallbench/pipeline.hpp"
#include "fallbench/synth.hpp"

namespace fallbench {

using nlohmann::json;

namespace detail {

inline json parse_json(const std::string& text, const std::string& what) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) throw ConfigError(what + ": invalid JSON");
    return j;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline const json& require_key(const json& j, const char* key, const std::string& ctx) {
    auto it = j.find(key);
    if (it == j.end()) throw ConfigError(ctx + ": missing key '" + key + "'");
    return *it;
}

template <class T>
T get_as(const json& j, const char* key, const std::string& ctx) {
    try {
        return require_key(j, key, ctx).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(ctx + ": bad value for '" + key + "': " + e.what());
    }
}

template <class T>
T get_or(const json& j, const char* key, T fallback, const std::string& ctx) {
    auto it = j.find(key);
    if (it == j.end()) return fallback;
    try {
        return it->get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(ctx + ": bad value for '" + key + "': " + e.what());
    }
}

}  // namespace detail

// --- cohort spec <-> JSON ----------------------------------------------

inline json to_json(const SixNumberSummary& s) {
    return json{{"min", s.min}, {"q1", s.q1},    {"median", s.median},
                {"mean", s.mean}, {"q3", s.q3},  {"max", s.max}};
}

inline SixNumberSummary summary_from_json(const json& j, const std::string& ctx) {
    SixNumberSummary s;
    s.min = detail::get_as<double>(j, "min", ctx);
    s.q1 = detail::get_as<double>(j, "q1", ctx);
    s.median = detail::get_as<double>(j, "median", ctx);
    s.mean = detail::get_or<double>(j, "mean", (s.q1 + s.median) / 2.0, ctx);
    s.q3 = detail::get_as<double>(j, "q3", ctx);
    s.max = detail::get_as<double>(j, "max", ctx);
    return s;
}

inline json cohort_spec_to_json(const CohortSpec& spec) {
    json j;
    j["n_total"] = spec.n_total;
    j["n_fallers"] = spec.n_fallers;
    j["seed"] = spec.seed;
    j["variables"] = json::array();
    for (const auto& v : spec.variables) {
        json jv;
        jv["name"] = v.name;
        jv["group"] = v.group;
        jv["kind"] = v.binary ? "binary" : "continuous";
        if (v.binary) {
            jv["p_faller"] = v.p_faller;
            jv["p_non_faller"] = v.p_non_faller;
        } else {
            jv["integer_valued"] = v.integer_valued;
            jv["faller"] = to_json(v.faller);
            jv["non_faller"] = to_json(v.non_faller);
        }
        j["variables"].push_back(std::move(jv));
    }
    j["groups"] = json::object();
    for (const auto& [name, gs] : spec.groups)
        j["groups"][name] = json{{"faller_availability", gs.faller_availability},
                                 {"non_faller_availability", gs.non_faller_availability},
                                 {"rho", gs.rho}};
    return j;
}

inline CohortSpec cohort_spec_from_json(const json& j) {
    const std::string ctx = "cohort spec";
    CohortSpec spec;
    spec.n_total = detail::get_as<std::size_t>(j, "n_total", ctx);
    spec.n_fallers = detail::get_as<std::size_t>(j, "n_fallers", ctx);
    spec.seed = detail::get_or<std::uint64_t>(j, "seed", 0, ctx);
    const json& vars = detail::require_key(j, "variables", ctx);
    if (!vars.is_array()) throw ConfigError(ctx + ": 'variables' must be an array");
    for (const auto& jv : vars) {
        VariableModel v;
        v.name = detail::get_as<std::string>(jv, "name", ctx);
        const std::string vctx = ctx + " variable " + v.name;
        v.group = detail::get_or<std::string>(jv, "group", infer_group(v.name), vctx);
        const std::string kind = detail::get_or<std::string>(jv, "kind", "continuous", vctx);
        if (kind == "binary") {
            v.binary = true;
            v.p_faller = detail::get_as<double>(jv, "p_faller", vctx);
            v.p_non_faller = detail::get_as<double>(jv, "p_non_faller", vctx);
        } else if (kind == "continuous") {
            v.integer_valued = detail::get_or<bool>(jv, "integer_valued", false, vctx);
            v.faller = summary_from_json(detail::require_key(jv, "faller", vctx), vctx);
            v.non_faller = summary_from_json(detail::require_key(jv, "non_faller", vctx), vctx);
        } else {
            throw ConfigError(vctx + ": kind must be continuous or binary");
        }
        spec.variables.push_back(std::move(v));
    }
    if (j.contains("groups")) {
        const json& groups = j["groups"];
        if (!groups.is_object()) throw ConfigError(ctx + ": 'groups' must be an object");
        for (auto it = groups.begin(); it != groups.end(); ++it) {
            const std::string gctx = ctx + " group " + it.key();
            GroupSpec gs;
            gs.faller_availability = detail::get_or<double>(*it, "faller_availability", 1.0, gctx);
            gs.non_faller_availability =
                detail::get_or<double>(*it, "non_faller_availability", 1.0, gctx);
            gs.rho = detail::get_or<double>(*it, "rho", 0.0, gctx);
            spec.groups[it.key()] = gs;
        }
    }
    try {
        validate_cohort_spec(spec);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return spec;
}

inline CohortSpec load_cohort_spec(const std::string& path) {
    return cohort_spec_from_json(detail::parse_json(detail::read_file(path), path));
}

// --- benchmark config ----------------------------------------------------

struct CohortSource {
    bool synthetic = false;
    std::string path;       // CSV path when not synthetic
    std::string spec_path;  // optional spec path when synthetic; empty = built-in
    std::optional<std::uint64_t> seed;
};

struct StrategyConfig {
    std::string label;
    ModelFamily family = ModelFamily::majority;
    std::string variable_set;
    bool tune = false;
    FallbackPolicy fallback = FallbackPolicy::none;
    double threshold = 0.5;
    std::optional<ThresholdObjective> objective;
    ThresholdTuningMode threshold_mode = ThresholdTuningMode::pooled;
    std::map<std::string, double> hyper;
};

struct ComparisonConfig {
    std::string a, b;
    Metric metric = Metric::mmce;
};

struct BenchmarkConfig {
    CohortSource cohort;
    std::optional<std::uint64_t> seed;
    int outer_folds = 10;
    std::string output_dir = ".";
    Aggregation aggregation = Aggregation::fold_mean;
    std::map<std::string, std::vector<std::string>> variable_sets;  // custom sets
    std::vector<StrategyConfig> strategies;
    std::vector<ComparisonConfig> comparisons;
};

inline BenchmarkConfig benchmark_config_from_json(const json& j) {
    const std::string ctx = "benchmark config";
    BenchmarkConfig cfg;
    const json& src = detail::require_key(j, "cohort", ctx);
    cfg.cohort.synthetic = detail::get_or<bool>(src, "synthetic", false, ctx);
    if (cfg.cohort.synthetic) {
        cfg.cohort.spec_path = detail::get_or<std::string>(src, "spec_path", "", ctx);
        if (src.contains("seed")) cfg.cohort.seed = src["seed"].get<std::uint64_t>();
    } else {
        cfg.cohort.path = detail::get_as<std::string>(src, "path", ctx);
    }
    if (j.contains("seed")) cfg.seed = detail::get_as<std::uint64_t>(j, "seed", ctx);
    cfg.outer_folds = detail::get_or<int>(j, "outer_folds", 10, ctx);
    if (cfg.outer_folds < 2) throw ConfigError(ctx + ": outer_folds must be at least 2");
    cfg.output_dir = detail::get_or<std::string>(j, "output_dir", ".", ctx);
    const std::string agg = detail::get_or<std::string>(j, "aggregation", "fold_mean", ctx);
    if (agg == "fold_mean")
        cfg.aggregation = Aggregation::fold_mean;
    else if (agg == "pooled")
        cfg.aggregation = Aggregation::pooled;
    else
        throw ConfigError(ctx + ": aggregation must be fold_mean or pooled");
    if (j.contains("variable_sets")) {
        const json& sets = j["variable_sets"];
        if (!sets.is_object()) throw ConfigError(ctx + ": 'variable_sets' must be an object");
        for (auto it = sets.begin(); it != sets.end(); ++it) {
            if (!it->is_array()) throw ConfigError(ctx + ": variable set " + it.key() + " must be an array");
            std::vector<std::string> vars;
            for (const auto& v : *it) vars.push_back(v.get<std::string>());
            cfg.variable_sets[it.key()] = std::move(vars);
        }
    }
    const json& strategies = detail::require_key(j, "strategies", ctx);
    if (!strategies.is_array() || strategies.empty())
        throw ConfigError(ctx + ": 'strategies' must be a non-empty array");
    for (const auto& js : strategies) {
        StrategyConfig sc;
        sc.label = detail::get_as<std::string>(js, "label", ctx);
        const std::string sctx = "strategy " + sc.label;
        try {
            sc.family = family_from_name(detail::get_as<std::string>(js, "family", sctx));
        } catch (const std::invalid_argument& e) {
            throw ConfigError(sctx + ": " + e.what());
        }
        sc.variable_set = detail::get_as<std::string>(js, "variable_set", sctx);
        sc.tune = detail::get_or<bool>(js, "tune", false, sctx);
        const std::string fb = detail::get_or<std::string>(js, "fallback", "none", sctx);
        if (fb == "none")
            sc.fallback = FallbackPolicy::none;
        else if (fb == "majority_on_missing")
            sc.fallback = FallbackPolicy::majority_on_missing;
        else
            throw ConfigError(sctx + ": fallback must be none or majority_on_missing");
        sc.threshold = detail::get_or<double>(js, "threshold", 0.5, sctx);
        if (!(sc.threshold >= -1.0 && sc.threshold <= 1.0))
            throw ConfigError(sctx + ": threshold outside [-1,1]");
        if (js.contains("threshold_objective")) {
            const json& jo = js["threshold_objective"];
            ThresholdObjective obj;
            const std::string kind = detail::get_as<std::string>(jo, "kind", sctx);
            if (kind == "min_specificity") {
                obj.kind = ThresholdObjective::Kind::min_specificity;
                obj.target = detail::get_as<double>(jo, "target", sctx);
                if (!(obj.target >= 0.0 && obj.target <= 1.0))
                    throw ConfigError(sctx + ": threshold objective target outside [0,1]");
            } else if (kind == "max_accuracy") {
                obj.kind = ThresholdObjective::Kind::max_accuracy;
            } else {
                throw ConfigError(sctx + ": threshold objective kind must be min_specificity or max_accuracy");
            }
            sc.objective = obj;
            const std::string mode = detail::get_or<std::string>(jo, "mode", "pooled", sctx);
            if (mode == "pooled")
                sc.threshold_mode = ThresholdTuningMode::pooled;
            else if (mode == "per_fold_train")
                sc.threshold_mode = ThresholdTuningMode::per_fold_train;
            else
                throw ConfigError(sctx + ": threshold objective mode must be pooled or per_fold_train");
        }
        if (js.contains("hyper")) {
            const json& jh = js["hyper"];
            if (!jh.is_object()) throw ConfigError(sctx + ": 'hyper' must be an object");
            for (auto it = jh.begin(); it != jh.end(); ++it)
                sc.hyper[it.key()] = it->get<double>();
            ModelSpec probe;
            probe.family = sc.family;
            probe.hyper = sc.hyper;
            try {
                validate_spec(probe);
            } catch (const std::invalid_argument& e) {
                throw ConfigError(sctx + ": " + e.what());
            }
        }
        cfg.strategies.push_back(std::move(sc));
    }
    for (std::size_t i = 0; i < cfg.strategies.size(); ++i)
        for (std::size_t k = i + 1; k < cfg.strategies.size(); ++k)
            if (cfg.strategies[i].label == cfg.strategies[k].label)
                throw ConfigError(ctx + ": duplicate strategy label " + cfg.strategies[i].label);
    if (j.contains("comparisons")) {
        const json& comps = j["comparisons"];
        if (!comps.is_array()) throw ConfigError(ctx + ": 'comparisons' must be an array");
        for (const auto& jc : comps) {
            ComparisonConfig cc;
            cc.a = detail::get_as<std::string>(jc, "a", ctx);
            cc.b = detail::get_as<std::string>(jc, "b", ctx);
            if (jc.contains("metric")) {
                try {
                    cc.metric = metric_from_name(jc["metric"].get<std::string>());
                } catch (const std::invalid_argument& e) {
                    throw ConfigError(ctx + ": " + e.what());
                }
            }
            auto known = [&](const std::string& label) {
                for (const auto& s : cfg.strategies)
                    if (s.label == label) return true;
                return false;
            };
            if (!known(cc.a) || !known(cc.b))
                throw ConfigError(ctx + ": comparison references unknown strategy " +
                                  (known(cc.a) ? cc.b : cc.a));
            cfg.comparisons.push_back(std::move(cc));
        }
    }
    return cfg;
}

inline BenchmarkConfig load_benchmark_config(const std::string& path) {
    return benchmark_config_from_json(detail::parse_json(detail::read_file(path), path));
}

}  // namespace fallbench
