// fallbench: generate synthetic cohorts, summarize them, and benchmark
// prediction strategies under shared cross-validation.

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "fallbench/config.hpp"
#include "fallbench/describe.hpp"
#include "fallbench/eval.hpp"
#include "fallbench/runner.hpp"
#include "fallbench/synth.hpp"

namespace {

using namespace fallbench;

// seed precedence: --seed flag, then config/spec value, then FALLBENCH_SEED,
// then a fixed default
std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag,
                           const std::optional<std::uint64_t>& config_value) {
    if (flag) return *flag;
    if (config_value) return *config_value;
    if (const char* env = std::getenv("FALLBENCH_SEED")) {
        std::uint64_t v = 0;
        const char* end = env + std::string_view(env).size();
        auto res = std::from_chars(env, end, v);
        if (res.ec != std::errc{} || res.ptr != end)
            throw ConfigError(std::string("FALLBENCH_SEED is not an unsigned integer: ") + env);
        return v;
    }
    return 17;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
}

int cmd_generate(const std::string& spec_path, const std::string& out_path,
                 const std::optional<std::uint64_t>& seed_flag, const std::string& emit_spec) {
    if (!emit_spec.empty()) {
        write_text_file(emit_spec, cohort_spec_to_json(default_paper_spec()).dump(2) + "\n");
        return 0;
    }
    CohortSpec spec;
    std::optional<std::uint64_t> file_seed;
    if (spec_path.empty()) {
        spec = default_paper_spec();
        file_seed = spec.seed;
    } else {
        const json j = detail::parse_json(detail::read_file(spec_path), spec_path);
        spec = cohort_spec_from_json(j);
        if (j.contains("seed")) file_seed = spec.seed;
    }
    spec.seed = resolve_seed(seed_flag, file_seed);
    const Cohort cohort = generate_cohort(spec);
    write_text_file(out_path, serialize_cohort(cohort));
    return 0;
}

int cmd_describe(const std::string& cohort_path) {
    std::ifstream in(cohort_path, std::ios::binary);
    if (!in) throw ConfigError("cannot open cohort file " + cohort_path);
    const Cohort cohort = parse_cohort(in);
    std::cout << describe_cohort(cohort);
    return 0;
}

BenchmarkRun run_from_config(BenchmarkConfig cfg, const std::optional<std::uint64_t>& seed_flag,
                             int jobs, bool pooled_metrics) {
    if (pooled_metrics) cfg.aggregation = Aggregation::pooled;
    RunOptions options;
    options.master_seed = resolve_seed(seed_flag, cfg.seed);
    options.jobs = jobs;
    return run_benchmark(cfg, options);
}

int cmd_benchmark(const std::string& config_path, const std::optional<std::uint64_t>& seed_flag,
                  int jobs, bool pooled_metrics) {
    BenchmarkConfig cfg = load_benchmark_config(config_path);
    const std::string out_dir = cfg.output_dir;
    const BenchmarkRun run = run_from_config(std::move(cfg), seed_flag, jobs, pooled_metrics);
    write_benchmark_outputs(run, out_dir);
    return 0;
}

int cmd_roc(const std::string& config_path, const std::string& label, std::size_t bands,
            double alpha, std::string out_path, const std::optional<std::uint64_t>& seed_flag,
            int jobs) {
    BenchmarkConfig cfg = load_benchmark_config(config_path);
    BenchmarkConfig only = cfg;
    only.strategies.clear();
    only.comparisons.clear();
    for (const auto& s : cfg.strategies)
        if (s.label == label) only.strategies.push_back(s);
    if (only.strategies.empty())
        throw ConfigError("strategy " + label + " not found in " + config_path);
    const std::uint64_t master = resolve_seed(seed_flag, cfg.seed);
    const BenchmarkRun run = run_from_config(std::move(only), master, jobs, false);
    const PredictionSet& preds = run.outcomes.front().preds;
    const RocCurve curve = bands > 0
                               ? roc_bands(preds, bands, alpha, derive_seed(master, 0xb0c5ULL))
                               : roc(preds);
    if (out_path.empty()) {
        std::filesystem::create_directories(cfg.output_dir);
        out_path = (std::filesystem::path(cfg.output_dir) /
                    (detail::sanitize_label(label) + ".roc.csv"))
                       .string();
    }
    write_text_file(out_path, roc_to_csv(curve));
    std::cout << "AUROC " << format_double(curve.auroc) << "\n";
    return 0;
}

int cmd_compare(const std::string& config_path, const std::string& label_a,
                const std::string& label_b, const std::string& metric,
                const std::optional<std::uint64_t>& seed_flag, int jobs) {
    BenchmarkConfig cfg = load_benchmark_config(config_path);
    BenchmarkConfig only = cfg;
    only.strategies.clear();
    only.comparisons.clear();
    for (const auto& s : cfg.strategies)
        if (s.label == label_a || s.label == label_b) only.strategies.push_back(s);
    if (only.strategies.size() != 2 && !(label_a == label_b && only.strategies.size() == 1))
        throw ConfigError("compare: strategies " + label_a + " and " + label_b +
                          " not both found in " + config_path);
    Metric m;
    try {
        m = metric_from_name(metric);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());  // a bad --metric is a usage error
    }
    const BenchmarkRun run = run_from_config(std::move(only), seed_flag, jobs, false);
    const PredictionSet* a = nullptr;
    const PredictionSet* b = nullptr;
    for (const auto& o : run.outcomes) {
        if (o.cfg.label == label_a) a = &o.preds;
        if (o.cfg.label == label_b) b = &o.preds;
    }
    const TestResult r = compare_strategies(*a, *b, m);
    std::cout << "a\tb\tmetric\tstatistic\tp_value\tn_effective\n"
              << label_a << '\t' << label_b << '\t' << metric << '\t' << format_double(r.statistic)
              << '\t' << format_double(r.p_value) << '\t' << r.n_effective << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"falls-prediction benchmarking toolkit"};
    app.require_subcommand(1);

    std::optional<std::uint64_t> seed_flag;
    std::string spec_path, gen_out, roc_out, cohort_path, config_path, label, label_b;
    std::string metric = "mmce";
    std::string emit_spec;
    int jobs = 0;
    bool pooled = false;
    std::size_t bands = 0;
    double alpha = 0.05;

    auto* generate = app.add_subcommand("generate", "write a synthetic cohort CSV");
    generate->add_option("--spec", spec_path, "cohort spec JSON (omit for the built-in spec)");
    generate->add_option("-o,--out", gen_out, "output CSV path")->default_val("cohort.csv");
    generate->add_option("--seed", seed_flag, "seed override");
    generate->add_option("--emit-spec", emit_spec, "write the built-in spec JSON here and exit");

    auto* describe = app.add_subcommand("describe", "summarize a cohort CSV");
    describe->add_option("cohort", cohort_path, "cohort CSV path")->required();

    auto* benchmark = app.add_subcommand("benchmark", "run a benchmark config");
    benchmark->add_option("config", config_path, "benchmark config JSON")->required();
    benchmark->add_option("--seed", seed_flag, "master seed override");
    benchmark->add_option("--jobs", jobs, "worker threads (0 = auto)");
    benchmark->add_flag("--pooled-metrics", pooled, "aggregate metrics from pooled counts");

    auto* roc_cmd = app.add_subcommand("roc", "export a strategy's ROC curve");
    roc_cmd->add_option("config", config_path, "benchmark config JSON")->required();
    roc_cmd->add_option("strategy", label, "strategy label")->required();
    roc_cmd->add_option("--bands", bands, "bootstrap resamples for FPR bands (0 = none)");
    roc_cmd->add_option("--alpha", alpha, "band miss probability")->default_val(0.05);
    roc_cmd->add_option("-o,--out", roc_out, "output CSV path");
    roc_cmd->add_option("--seed", seed_flag, "master seed override");
    roc_cmd->add_option("--jobs", jobs, "worker threads (0 = auto)");

    auto* compare = app.add_subcommand("compare", "paired test between two strategies");
    compare->add_option("config", config_path, "benchmark config JSON")->required();
    compare->add_option("a", label, "first strategy label")->required();
    compare->add_option("b", label_b, "second strategy label")->required();
    compare->add_option("--metric", metric, "mmce|sensitivity|specificity|precision|f1");
    compare->add_option("--seed", seed_flag, "master seed override");
    compare->add_option("--jobs", jobs, "worker threads (0 = auto)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (generate->parsed()) return cmd_generate(spec_path, gen_out, seed_flag, emit_spec);
        if (describe->parsed()) return cmd_describe(cohort_path);
        if (benchmark->parsed()) return cmd_benchmark(config_path, seed_flag, jobs, pooled);
        if (roc_cmd->parsed()) return cmd_roc(config_path, label, bands, alpha, roc_out, seed_flag, jobs);
        if (compare->parsed()) return cmd_compare(config_path, label, label_b, metric, seed_flag, jobs);
    } catch (const fallbench::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
