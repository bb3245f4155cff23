#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "fallbench/cohort.hpp"
#include "fallbench/learners.hpp"
#include "fallbench/matrix.hpp"
#include "fallbench/rng.hpp"

namespace fallbench {

// Stratified assignment of patients to cross-validation folds.  Each class
// is shuffled and dealt round-robin, with the second class starting where
// the first left off so fold sizes stay within one of each other.
struct FoldPlan {
    int k = 0;
    std::uint64_t seed = 0;
    std::unordered_map<std::string, int> assignment;  // patient id -> fold

    int fold_of(const std::string& id) const {
        auto it = assignment.find(id);
        if (it == assignment.end()) throw std::invalid_argument("fold plan does not cover id " + id);
        return it->second;
    }

    // stable digest of (id, fold) pairs; equal plans hash equal
    std::uint64_t fingerprint() const {
        std::vector<std::pair<std::string, int>> items(assignment.begin(), assignment.end());
        std::sort(items.begin(), items.end());
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (const auto& [id, fold] : items) {
            h = splitmix64(h ^ fnv1a(id));
            h = splitmix64(h ^ static_cast<std::uint64_t>(fold));
        }
        return h;
    }
};

inline FoldPlan make_fold_plan(const Cohort& cohort, int k, std::uint64_t seed) {
    if (k < 2) throw std::invalid_argument("make_fold_plan: k must be at least 2");
    if (static_cast<std::size_t>(k) > cohort.records.size())
        throw std::invalid_argument("make_fold_plan: more folds than records");
    std::vector<std::size_t> fallers, non_fallers;
    for (std::size_t i = 0; i < cohort.records.size(); ++i)
        (cohort.records[i].outcome == Outcome::faller ? fallers : non_fallers).push_back(i);
    if (fallers.empty() || non_fallers.empty())
        throw std::invalid_argument("make_fold_plan: cohort must contain both outcomes");
    Rng rng(derive_seed(seed, 0xf01dULL));
    rng.shuffle(fallers);
    rng.shuffle(non_fallers);
    FoldPlan plan;
    plan.k = k;
    plan.seed = seed;
    for (std::size_t i = 0; i < fallers.size(); ++i)
        plan.assignment[cohort.records[fallers[i]].id] = static_cast<int>(i % k);
    for (std::size_t i = 0; i < non_fallers.size(); ++i)
        plan.assignment[cohort.records[non_fallers[i]].id] =
            static_cast<int>((fallers.size() + i) % k);
    return plan;
}

// Per-feature centering and scaling, fit on training rows only.  Scale is
// the population standard deviation; constant features get scale 1 so they
// pass through as zeros.
struct Normalizer {
    std::vector<double> mean, scale;

    void apply_row(std::span<const double> in, std::span<double> out) const {
        for (std::size_t j = 0; j < mean.size(); ++j) out[j] = (in[j] - mean[j]) / scale[j];
    }
};

inline Normalizer fit_normalizer(const Matrix& x) {
    if (x.rows() == 0) throw std::invalid_argument("fit_normalizer: empty matrix");
    Normalizer norm;
    norm.mean.assign(x.cols(), 0.0);
    norm.scale.assign(x.cols(), 1.0);
    const double n = static_cast<double>(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const auto row = x.row(i);
        for (std::size_t j = 0; j < x.cols(); ++j) norm.mean[j] += row[j];
    }
    for (double& m : norm.mean) m /= n;
    for (std::size_t j = 0; j < x.cols(); ++j) {
        double ss = 0.0;
        for (std::size_t i = 0; i < x.rows(); ++i) {
            const double d = x(i, j) - norm.mean[j];
            ss += d * d;
        }
        const double sd = std::sqrt(ss / n);
        norm.scale[j] = sd > 0.0 ? sd : 1.0;
    }
    return norm;
}

inline Matrix apply_normalizer(const Normalizer& norm, const Matrix& x) {
    Matrix out(x.rows(), x.cols());
    for (std::size_t i = 0; i < x.rows(); ++i) norm.apply_row(x.row(i), out.row(i));
    return out;
}

// Hyperparameter grid searched by inner cross-validation.
struct TuningGrid {
    std::vector<std::map<std::string, double>> points;

    bool empty() const { return points.empty(); }

    static TuningGrid for_family(ModelFamily family) {
        TuningGrid grid;
        switch (family) {
            case ModelFamily::svm_linear:
                for (int e = -4; e <= 4; ++e) grid.points.push_back({{"C", std::ldexp(1.0, e)}});
                break;
            case ModelFamily::svm_gauss:
                for (int ec = -2; ec <= 2; ++ec)
                    for (int es = -2; es <= 2; ++es)
                        grid.points.push_back(
                            {{"C", std::ldexp(1.0, ec)}, {"sigma", std::ldexp(1.0, es)}});
                break;
            case ModelFamily::random_forest:
                for (double ntree : {100.0, 250.0, 500.0, 1000.0, 2000.0})
                    grid.points.push_back({{"ntree", ntree}});
                break;
            default:
                break;
        }
        return grid;
    }
};

enum class FallbackPolicy { none, majority_on_missing };

enum class ThresholdTuningMode { pooled, per_fold_train };

struct ThresholdObjective {
    enum class Kind { min_specificity, max_accuracy };
    Kind kind = Kind::min_specificity;
    double target = 0.0;  // specificity floor for min_specificity
};

struct PredictionStrategy {
    std::string label;
    ModelSpec spec;
    bool tune = false;
    VariableSet variable_set;
    FallbackPolicy fallback = FallbackPolicy::none;
    double threshold = 0.5;
    std::optional<ThresholdObjective> threshold_objective;
    ThresholdTuningMode threshold_mode = ThresholdTuningMode::pooled;
};

struct Prediction {
    std::string id;
    int fold = 0;
    bool faller = false;           // ground truth
    double score = 0.0;
    bool predicted_faller = false;
    bool fallback_used = false;
};

struct PredictionSet {
    std::vector<Prediction> rows;  // cohort order within fold groups
    int n_folds = 0;
    std::uint64_t plan_fingerprint = 0;
    double threshold = 0.5;
};

namespace detail {

inline std::uint64_t hash_doubles(std::span<const double> values) {
    std::uint64_t h = 0x9e3779b97f4a7c15ULL;
    for (double v : values) h = splitmix64(h ^ std::bit_cast<std::uint64_t>(v));
    return h;
}

// design matrix over vs columns for the selected records
inline Matrix gather(const Cohort& cohort, const VariableSet& vs,
                     std::span<const std::size_t> rows) {
    std::vector<std::size_t> cols(vs.variables.size());
    for (std::size_t j = 0; j < cols.size(); ++j) cols[j] = cohort.column(vs.variables[j]);
    Matrix x(rows.size(), cols.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& rec = cohort.records[rows[i]];
        for (std::size_t j = 0; j < cols.size(); ++j) {
            const auto& f = rec.features[cols[j]];
            if (!f) throw std::invalid_argument("gather: missing value for " + vs.variables[j] +
                                                " in record " + rec.id);
            x(i, j) = *f;
        }
    }
    return x;
}

}  // namespace detail

struct FoldAudit {
    int fold = 0;
    std::size_t n_train = 0, n_test = 0, n_fallback = 0;
    std::uint64_t fit_seed = 0, tune_seed = 0;
    std::map<std::string, double> tuned;     // hyperparameters chosen by the inner loop
    double fold_threshold = 0.5;
    std::uint64_t normalizer_hash = 0, model_hash = 0;
};

// Inner cross-validated grid search.  Each grid point is scored by pooled
// misclassification over the inner folds at threshold 0.5; the first point
// attaining the minimum wins, so grid order breaks ties.
inline ModelSpec tune_spec(const ModelSpec& base, const TuningGrid& grid, const Matrix& x,
                           std::span<const int> y, int inner_k, std::uint64_t seed) {
    if (grid.empty()) return base;
    if (inner_k < 2) throw std::invalid_argument("tune_spec: inner_k must be at least 2");
    const std::size_t n = x.rows();
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < n; ++i) (y[i] ? pos : neg).push_back(i);
    if (pos.size() < 2 || neg.size() < 2)
        throw std::invalid_argument("tune_spec: need at least 2 of each class");
    const int k = std::min<int>(inner_k, static_cast<int>(std::min(pos.size(), neg.size())));
    Rng rng(derive_seed(seed, 0x1aaeULL));
    rng.shuffle(pos);
    rng.shuffle(neg);
    std::vector<int> fold(n);
    for (std::size_t i = 0; i < pos.size(); ++i) fold[pos[i]] = static_cast<int>(i % k);
    for (std::size_t i = 0; i < neg.size(); ++i)
        fold[neg[i]] = static_cast<int>((pos.size() + i) % k);

    double best_err = std::numeric_limits<double>::infinity();
    std::size_t best_point = 0;
    for (std::size_t g = 0; g < grid.points.size(); ++g) {
        std::size_t errors = 0, total = 0;
        for (int f = 0; f < k; ++f) {
            std::vector<std::size_t> train, test;
            for (std::size_t i = 0; i < n; ++i) (fold[i] == f ? test : train).push_back(i);
            Matrix xt(train.size(), x.cols());
            std::vector<int> yt(train.size());
            for (std::size_t i = 0; i < train.size(); ++i) {
                for (std::size_t j = 0; j < x.cols(); ++j) xt(i, j) = x(train[i], j);
                yt[i] = y[train[i]];
            }
            ModelSpec candidate = base;
            for (const auto& [key, val] : grid.points[g]) candidate.hyper[key] = val;
            candidate.seed = derive_seed(seed, g, static_cast<std::uint64_t>(f));
            const FittedModel model = fit_model(candidate, xt, yt);
            for (std::size_t i : test) {
                const bool hit = model.predict(x.row(i), 0.5);
                errors += hit != static_cast<bool>(y[i]);
                ++total;
            }
        }
        const double err = static_cast<double>(errors) / static_cast<double>(total);
        if (err < best_err) {
            best_err = err;
            best_point = g;
        }
    }
    ModelSpec chosen = base;
    for (const auto& [key, val] : grid.points[best_point]) chosen.hyper[key] = val;
    return chosen;
}

struct FoldRun {
    std::vector<Prediction> rows;
    FoldAudit audit;
};

// Train on the complete records outside the fold, normalize with training
// statistics only, optionally tune, then score the fold's records.  Records
// missing a needed variable either get the majority fallback or are an error.
inline FoldRun run_fold(const PredictionStrategy& strategy, const Cohort& cohort,
                        const FoldPlan& plan, int fold) {
    validate_variable_set(cohort, strategy.variable_set);
    FoldRun out;
    out.audit.fold = fold;
    std::vector<std::size_t> train, test;
    for (std::size_t i = 0; i < cohort.records.size(); ++i) {
        const auto& rec = cohort.records[i];
        const int f = plan.fold_of(rec.id);
        if (f == fold) {
            test.push_back(i);
            continue;
        }
        const bool complete = record_complete(cohort, rec, strategy.variable_set);
        if (!complete && strategy.fallback == FallbackPolicy::none)
            throw std::invalid_argument("record " + rec.id + " is incomplete and no fallback is set");
        if (complete) train.push_back(i);
    }
    if (train.empty()) throw std::invalid_argument("run_fold: no complete training records");
    Matrix x_raw = detail::gather(cohort, strategy.variable_set, train);
    std::vector<int> y(train.size());
    for (std::size_t i = 0; i < train.size(); ++i)
        y[i] = cohort.records[train[i]].outcome == Outcome::faller;

    const Normalizer norm = fit_normalizer(x_raw);
    const Matrix x = apply_normalizer(norm, x_raw);

    ModelSpec spec = strategy.spec;
    out.audit.tune_seed = derive_seed(strategy.spec.seed, 0x7125ULL, static_cast<std::uint64_t>(fold));
    out.audit.fit_seed = derive_seed(strategy.spec.seed, 0xf17ULL, static_cast<std::uint64_t>(fold));
    if (strategy.tune) {
        const TuningGrid grid = TuningGrid::for_family(spec.family);
        if (!grid.empty()) {
            spec = tune_spec(spec, grid, x, y, 3, out.audit.tune_seed);
            out.audit.tuned = spec.hyper;
        }
    }
    spec.seed = out.audit.fit_seed;
    const FittedModel model = fit_model(spec, x, y, strategy.variable_set.variables);

    double threshold = strategy.threshold;
    if (strategy.threshold_objective && strategy.threshold_mode == ThresholdTuningMode::per_fold_train) {
        // pick the fold's threshold from training scores (see eval on the
        // pooled variant); candidates are the observed scores plus a floor
        std::vector<double> train_scores(train.size());
        for (std::size_t i = 0; i < train.size(); ++i) train_scores[i] = model.score(x.row(i));
        std::vector<double> cands(train_scores);
        cands.push_back(-1.0);
        std::sort(cands.begin(), cands.end(), std::greater<>());
        cands.erase(std::unique(cands.begin(), cands.end()), cands.end());
        double best_sens = -1.0, best_spec = -1.0, best_acc = -1.0;
        double chosen = cands.front();
        for (double t : cands) {
            std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
            for (std::size_t i = 0; i < train.size(); ++i) {
                const bool hit = train_scores[i] > t;
                if (y[i])
                    (hit ? tp : fn)++;
                else
                    (hit ? fp : tn)++;
            }
            const double sens = tp + fn ? double(tp) / double(tp + fn) : 0.0;
            const double spcf = fp + tn ? double(tn) / double(fp + tn) : 0.0;
            const double acc = double(tp + tn) / double(train.size());
            if (strategy.threshold_objective->kind == ThresholdObjective::Kind::min_specificity) {
                if (spcf < strategy.threshold_objective->target) continue;
                if (sens > best_sens || (sens == best_sens && spcf > best_spec) ||
                    (sens == best_sens && spcf == best_spec && t < chosen)) {
                    best_sens = sens;
                    best_spec = spcf;
                    chosen = t;
                }
            } else {
                if (acc > best_acc || (acc == best_acc && spcf > best_spec) ||
                    (acc == best_acc && spcf == best_spec && t < chosen)) {
                    best_acc = acc;
                    best_spec = spcf;
                    chosen = t;
                }
            }
        }
        if (best_sens < 0.0 && best_acc < 0.0) chosen = cands.front();  // nothing met the floor
        threshold = chosen;
    }
    out.audit.fold_threshold = threshold;

    std::vector<double> xrow(strategy.variable_set.variables.size());
    std::vector<double> xnorm(xrow.size());
    std::vector<std::size_t> cols(xrow.size());
    for (std::size_t j = 0; j < cols.size(); ++j) cols[j] = cohort.column(strategy.variable_set.variables[j]);
    for (std::size_t i : test) {
        const auto& rec = cohort.records[i];
        Prediction p;
        p.id = rec.id;
        p.fold = fold;
        p.faller = rec.outcome == Outcome::faller;
        if (record_complete(cohort, rec, strategy.variable_set)) {
            for (std::size_t j = 0; j < cols.size(); ++j) xrow[j] = *rec.features[cols[j]];
            norm.apply_row(xrow, xnorm);
            p.score = model.score(xnorm);
            p.predicted_faller = p.score > threshold;
        } else {
            if (strategy.fallback == FallbackPolicy::none)
                throw std::invalid_argument("record " + rec.id + " is incomplete and no fallback is set");
            p.score = 0.0;
            p.predicted_faller = false;
            p.fallback_used = true;
            ++out.audit.n_fallback;
        }
        out.rows.push_back(std::move(p));
    }
    out.audit.n_train = train.size();
    out.audit.n_test = test.size();
    std::vector<double> norm_state(norm.mean);
    norm_state.insert(norm_state.end(), norm.scale.begin(), norm.scale.end());
    out.audit.normalizer_hash = detail::hash_doubles(norm_state);
    out.audit.model_hash = detail::hash_doubles(model.parameters());
    return out;
}

// All folds of one strategy under a shared plan.
inline PredictionSet run_strategy(const PredictionStrategy& strategy, const Cohort& cohort,
                                  const FoldPlan& plan, std::vector<FoldAudit>* audits = nullptr) {
    PredictionSet set;
    set.n_folds = plan.k;
    set.plan_fingerprint = plan.fingerprint();
    set.threshold = strategy.threshold;
    for (int f = 0; f < plan.k; ++f) {
        FoldRun run = run_fold(strategy, cohort, plan, f);
        for (auto& row : run.rows) set.rows.push_back(std::move(row));
        if (audits) audits->push_back(run.audit);
    }
    return set;
}

}  // namespace fallbench
