#pragma once

#include <atomic>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "fallbench/config.hpp"
#include "fallbench/eval.hpp"
#include "fallbench/pipeline.hpp"
#include "fallbench/synth.hpp"

namespace fallbench {

struct Population {
    std::string key;    // variable set + fallback flag
    std::string label;  // shown in report.tsv
    Cohort cohort;
    FoldPlan plan;
};

struct StrategyOutcome {
    StrategyConfig cfg;
    std::size_t population_index = 0;
    PredictionSet preds;
    std::vector<FoldAudit> audits;
    std::optional<ThresholdChoice> threshold_choice;  // pooled objective only
    MetricReport report;
};

struct ComparisonOutcome {
    ComparisonConfig cfg;
    TestResult result;
};

struct BenchmarkRun {
    Cohort cohort;
    std::uint64_t master_seed = 0;
    Aggregation aggregation = Aggregation::fold_mean;
    std::vector<Population> populations;
    std::vector<StrategyOutcome> outcomes;
    std::vector<ComparisonOutcome> comparisons;
};

struct RunOptions {
    std::uint64_t master_seed = 0;
    int jobs = 0;  // <=0: hardware concurrency
};

namespace detail {

inline std::uint64_t cohort_content_fingerprint(const Cohort& cohort) {
    std::uint64_t h = 0x9e3779b97f4a7c15ULL;
    for (const auto& rec : cohort.records) {
        h = splitmix64(h ^ fnv1a(rec.id));
        h = splitmix64(h ^ static_cast<std::uint64_t>(rec.outcome == Outcome::faller));
    }
    return h;
}

inline std::string sanitize_label(const std::string& label) {
    std::string out;
    for (char c : label)
        out += (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.')
                   ? c
                   : '_';
    return out.empty() ? std::string("strategy") : out;
}

inline std::string hex64(std::uint64_t v) {
    char buf[19];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace detail

inline Cohort load_cohort_for_benchmark(const BenchmarkConfig& cfg) {
    if (cfg.cohort.synthetic) {
        CohortSpec spec =
            cfg.cohort.spec_path.empty() ? default_paper_spec() : load_cohort_spec(cfg.cohort.spec_path);
        if (cfg.cohort.seed) spec.seed = *cfg.cohort.seed;
        return generate_cohort(spec);
    }
    std::ifstream in(cfg.cohort.path, std::ios::binary);
    if (!in) throw ConfigError("cannot open cohort file " + cfg.cohort.path);
    return parse_cohort(in);
}

// Resolve one strategy config against the cohort's variable sets.
inline PredictionStrategy make_strategy(const StrategyConfig& sc, const VariableSet& vs,
                                        std::uint64_t master_seed) {
    PredictionStrategy st;
    st.label = sc.label;
    st.spec.family = sc.family;
    st.spec.hyper = sc.hyper;
    st.spec.seed = derive_seed(master_seed, fnv1a(sc.label));
    st.tune = sc.tune;
    st.variable_set = vs;
    st.fallback = sc.fallback;
    st.threshold = sc.threshold;
    st.threshold_objective = sc.objective;
    st.threshold_mode = sc.threshold_mode;
    return st;
}

inline BenchmarkRun run_benchmark(const BenchmarkConfig& cfg, const RunOptions& options) {
    BenchmarkRun run;
    run.master_seed = options.master_seed;
    run.aggregation = cfg.aggregation;
    run.cohort = load_cohort_for_benchmark(cfg);

    // resolve variable sets: built-ins first, config-defined sets may add more
    std::vector<VariableSet> sets = builtin_variable_sets(run.cohort);
    for (const auto& [name, vars] : cfg.variable_sets) {
        VariableSet vs{name, vars};
        try {
            validate_variable_set(run.cohort, vs);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
        bool replaced = false;
        for (auto& existing : sets)
            if (existing.name == name) {
                existing = vs;
                replaced = true;
            }
        if (!replaced) sets.push_back(std::move(vs));
    }

    // one population (records + shared fold plan) per variable-set/fallback pair
    std::vector<PredictionStrategy> strategies;
    std::vector<std::size_t> population_of;
    for (const auto& sc : cfg.strategies) {
        const VariableSet* vs = find_variable_set(sets, sc.variable_set);
        if (!vs) throw ConfigError("strategy " + sc.label + ": unknown variable set " + sc.variable_set);
        const bool fb = sc.fallback == FallbackPolicy::majority_on_missing;
        const std::string key = sc.variable_set + (fb ? "|all" : "|complete");
        std::size_t pi = run.populations.size();
        for (std::size_t i = 0; i < run.populations.size(); ++i)
            if (run.populations[i].key == key) pi = i;
        if (pi == run.populations.size()) {
            Population pop;
            pop.key = key;
            pop.label = fb ? "All" : sc.variable_set;
            pop.cohort = fb ? run.cohort : select_complete(run.cohort, *vs);
            if (pop.cohort.records.empty())
                throw std::runtime_error("population for " + sc.variable_set + " is empty");
            pop.plan = make_fold_plan(pop.cohort, cfg.outer_folds,
                                      derive_seed(options.master_seed,
                                                  detail::cohort_content_fingerprint(pop.cohort)));
            run.populations.push_back(std::move(pop));
        }
        population_of.push_back(pi);
        strategies.push_back(make_strategy(sc, *vs, options.master_seed));
    }

    // strategy x fold work units, dispatched to a small pool; results land in
    // preassigned slots so the schedule cannot reorder anything
    struct Task {
        std::size_t strategy;
        int fold;
    };
    std::vector<Task> tasks;
    for (std::size_t s = 0; s < strategies.size(); ++s)
        for (int f = 0; f < cfg.outer_folds; ++f) tasks.push_back({s, f});
    std::vector<std::vector<FoldRun>> results(strategies.size());
    for (std::size_t s = 0; s < strategies.size(); ++s)
        results[s].resize(static_cast<std::size_t>(cfg.outer_folds));

    unsigned jobs = options.jobs > 0 ? static_cast<unsigned>(options.jobs)
                                     : std::max(1u, std::thread::hardware_concurrency());
    jobs = std::min<unsigned>(jobs, static_cast<unsigned>(tasks.size()));
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr first_error;
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= tasks.size()) return;
            {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (first_error) return;
            }
            const Task& t = tasks[i];
            try {
                const Population& pop = run.populations[population_of[t.strategy]];
                results[t.strategy][static_cast<std::size_t>(t.fold)] =
                    run_fold(strategies[t.strategy], pop.cohort, pop.plan, t.fold);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };
    if (jobs <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    for (std::size_t s = 0; s < strategies.size(); ++s) {
        StrategyOutcome outcome;
        outcome.cfg = cfg.strategies[s];
        outcome.population_index = population_of[s];
        const Population& pop = run.populations[population_of[s]];
        outcome.preds.n_folds = cfg.outer_folds;
        outcome.preds.plan_fingerprint = pop.plan.fingerprint();
        outcome.preds.threshold = strategies[s].threshold;
        for (auto& fold_run : results[s]) {
            for (auto& row : fold_run.rows) outcome.preds.rows.push_back(std::move(row));
            outcome.audits.push_back(fold_run.audit);
        }
        if (outcome.cfg.objective && outcome.cfg.threshold_mode == ThresholdTuningMode::pooled) {
            ThresholdChoice choice = tune_threshold(outcome.preds, *outcome.cfg.objective);
            outcome.preds = apply_threshold(outcome.preds, choice.threshold);
            outcome.threshold_choice = std::move(choice);
        }
        outcome.report = metrics_with_se(outcome.preds, cfg.aggregation);
        run.outcomes.push_back(std::move(outcome));
    }

    for (const auto& cc : cfg.comparisons) {
        const StrategyOutcome* a = nullptr;
        const StrategyOutcome* b = nullptr;
        for (const auto& o : run.outcomes) {
            if (o.cfg.label == cc.a) a = &o;
            if (o.cfg.label == cc.b) b = &o;
        }
        ComparisonOutcome co;
        co.cfg = cc;
        co.result = compare_strategies(a->preds, b->preds, cc.metric);
        run.comparisons.push_back(co);
    }
    return run;
}

namespace detail {

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

}  // namespace detail

inline void write_benchmark_outputs(const BenchmarkRun& run, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);

    std::vector<ReportRow> rows;
    for (const auto& o : run.outcomes)
        rows.push_back({o.cfg.label, run.populations[o.population_index].label, o.report});
    detail::write_file(fs::path(out_dir) / "report.tsv", emit_report(rows));

    for (const auto& o : run.outcomes)
        detail::write_file(fs::path(out_dir) / (detail::sanitize_label(o.cfg.label) + ".predictions.csv"),
                           predictions_to_csv(o.preds));

    std::string comp = "a\tb\tmetric\tstatistic\tp_value\tn_effective\n";
    for (const auto& c : run.comparisons) {
        comp += c.cfg.a;
        comp += '\t';
        comp += c.cfg.b;
        comp += '\t';
        comp += std::string(metric_name(c.cfg.metric));
        comp += '\t';
        comp += format_double(c.result.statistic);
        comp += '\t';
        comp += format_double(c.result.p_value);
        comp += '\t';
        comp += std::to_string(c.result.n_effective);
        comp += '\n';
    }
    detail::write_file(fs::path(out_dir) / "comparisons.tsv", comp);

    std::string audit;
    audit += "master_seed=" + std::to_string(run.master_seed) + "\n";
    audit += "aggregation=" +
             std::string(run.aggregation == Aggregation::pooled ? "pooled" : "fold_mean") + "\n";
    for (const auto& pop : run.populations) {
        audit += "population key=" + pop.key + " label=" + pop.label +
                 " records=" + std::to_string(pop.cohort.records.size()) +
                 " fallers=" + std::to_string(pop.cohort.faller_count()) +
                 " plan=" + detail::hex64(pop.plan.fingerprint()) + "\n";
    }
    for (const auto& o : run.outcomes) {
        audit += "strategy label=" + o.cfg.label +
                 " family=" + std::string(family_name(o.cfg.family)) +
                 " variable_set=" + o.cfg.variable_set +
                 " population=" + run.populations[o.population_index].key + "\n";
        if (o.threshold_choice) {
            audit += "  tuned_threshold=" + format_double(o.threshold_choice->threshold) +
                     (o.threshold_choice->degenerate ? " (degenerate: objective unmet)" : "") + "\n";
        }
        for (const auto& a : o.audits) {
            audit += "  fold=" + std::to_string(a.fold) + " train=" + std::to_string(a.n_train) +
                     " test=" + std::to_string(a.n_test) +
                     " fallback=" + std::to_string(a.n_fallback) +
                     " threshold=" + format_double(a.fold_threshold);
            if (!a.tuned.empty()) {
                audit += " tuned={";
                bool first = true;
                for (const auto& [k, v] : a.tuned) {
                    if (!first) audit += ',';
                    audit += k + "=" + format_double(v);
                    first = false;
                }
                audit += "}";
            }
            audit += " normalizer=" + detail::hex64(a.normalizer_hash) +
                     " model=" + detail::hex64(a.model_hash) + "\n";
        }
    }
    detail::write_file(fs::path(out_dir) / "audit.log", audit);
}

}  // namespace fallbench
