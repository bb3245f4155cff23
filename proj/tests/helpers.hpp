#pragma once

#include <string>
#include <vector>

#include "fallbench/pipeline.hpp"
#include "fallbench/rng.hpp"

namespace testutil {

// prediction set with one row per (score, truth) pair, single fold unless
// fold ids are given
inline fallbench::PredictionSet make_preds(const std::vector<double>& scores,
                                           const std::vector<bool>& fallers,
                                           const std::vector<int>& folds = {}) {
    fallbench::PredictionSet set;
    int max_fold = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        fallbench::Prediction p;
        p.id = "p" + std::to_string(i + 1);
        p.fold = folds.empty() ? 0 : folds[i];
        max_fold = std::max(max_fold, p.fold);
        p.faller = fallers[i];
        p.score = scores[i];
        p.predicted_faller = scores[i] > 0.5;
        set.rows.push_back(std::move(p));
    }
    set.n_folds = max_fold + 1;
    return set;
}

// random prediction set, scores optionally discretized to force ties
inline fallbench::PredictionSet random_preds(fallbench::Rng& rng, std::size_t n, int levels = 0) {
    std::vector<double> scores(n);
    std::vector<bool> fallers(n);
    bool pos = false, neg = false;
    for (;;) {
        pos = neg = false;
        for (std::size_t i = 0; i < n; ++i) {
            double u = rng.uniform01();
            if (levels > 0) u = std::floor(u * levels) / levels;
            scores[i] = u;
            fallers[i] = rng.uniform01() < 0.4;
            (fallers[i] ? pos : neg) = true;
        }
        if (pos && neg) break;
    }
    return make_preds(scores, fallers);
}

// small two-class cohort with fully observed gaussian features
inline fallbench::Cohort gaussian_cohort(std::uint64_t seed, std::size_t n_fallers,
                                         std::size_t n_non, double shift,
                                         std::size_t n_features = 3) {
    fallbench::Cohort cohort;
    for (std::size_t f = 0; f < n_features; ++f) {
        cohort.schema.push_back("trail_v" + std::to_string(f + 1));
        cohort.groups.push_back("Trail");
    }
    fallbench::Rng rng(seed);
    const std::size_t n = n_fallers + n_non;
    for (std::size_t i = 0; i < n; ++i) {
        fallbench::PatientRecord rec;
        rec.id = "p" + std::to_string(i + 1);
        rec.outcome = i < n_fallers ? fallbench::Outcome::faller : fallbench::Outcome::non_faller;
        for (std::size_t f = 0; f < n_features; ++f)
            rec.features.push_back(rng.normal() + (i < n_fallers ? shift : 0.0));
        cohort.records.push_back(std::move(rec));
    }
    return cohort;
}

}  // namespace testutil
