#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "fallbench/learners/common.hpp"
#include "fallbench/matrix.hpp"

namespace fallbench {

// Naive Bayes with per-feature conditionals: features taking at most two
// distinct training values are modelled as Bernoulli (Laplace-smoothed),
// everything else as Gaussian.
struct NaiveBayesModel {
    struct Feature {
        bool bernoulli = false;
        double lo = 0.0, hi = 1.0;  // the two observed levels
        double log_p_hi[2] = {0.0, 0.0}, log_p_lo[2] = {0.0, 0.0};
        double mean[2] = {0.0, 0.0}, var[2] = {1.0, 1.0};
    };
    std::vector<Feature> features;
    double log_prior[2] = {0.0, 0.0};

    double score(std::span<const double> x) const {
        double log_odds = log_prior[1] - log_prior[0];
        for (std::size_t j = 0; j < features.size(); ++j) {
            const Feature& f = features[j];
            if (f.bernoulli) {
                // snap unseen values to the nearer training level
                const bool hi = std::fabs(x[j] - f.hi) < std::fabs(x[j] - f.lo);
                log_odds += hi ? f.log_p_hi[1] - f.log_p_hi[0] : f.log_p_lo[1] - f.log_p_lo[0];
            } else {
                for (int c : {0, 1}) {
                    const double d = x[j] - f.mean[c];
                    const double ll =
                        -0.5 * std::log(2.0 * std::numbers::pi * f.var[c]) - d * d / (2.0 * f.var[c]);
                    log_odds += c ? ll : -ll;
                }
            }
        }
        return sigmoid(log_odds);
    }
};

inline NaiveBayesModel fit_naive_bayes(const Matrix& x, std::span<const int> y) {
    detail::check_training_data(x, y, true);
    const std::size_t n = x.rows(), p = x.cols();
    std::size_t n1 = 0;
    for (int label : y) n1 += label;
    const std::size_t n0 = n - n1;
    NaiveBayesModel model;
    model.log_prior[0] = std::log(static_cast<double>(n0) / static_cast<double>(n));
    model.log_prior[1] = std::log(static_cast<double>(n1) / static_cast<double>(n));
    model.features.resize(p);
    std::vector<double> col(n);
    constexpr double var_floor = 1e-9;
    for (std::size_t j = 0; j < p; ++j) {
        for (std::size_t i = 0; i < n; ++i) col[i] = x(i, j);
        std::vector<double> levels(col);
        std::sort(levels.begin(), levels.end());
        levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
        NaiveBayesModel::Feature& f = model.features[j];
        if (levels.size() <= 2) {
            f.bernoulli = true;
            f.lo = levels.front();
            f.hi = levels.back();
            std::size_t hi_count[2] = {0, 0}, class_count[2] = {n0, n1};
            for (std::size_t i = 0; i < n; ++i)
                if (col[i] == f.hi && f.hi != f.lo) ++hi_count[y[i]];
            for (int c : {0, 1}) {
                const double p_hi = (static_cast<double>(hi_count[c]) + 1.0) /
                                    (static_cast<double>(class_count[c]) + 2.0);
                f.log_p_hi[c] = std::log(p_hi);
                f.log_p_lo[c] = std::log(1.0 - p_hi);
            }
        } else {
            double sum[2] = {0.0, 0.0};
            std::size_t cnt[2] = {n0, n1};
            for (std::size_t i = 0; i < n; ++i) sum[y[i]] += col[i];
            for (int c : {0, 1}) f.mean[c] = sum[c] / static_cast<double>(cnt[c]);
            double ss[2] = {0.0, 0.0};
            for (std::size_t i = 0; i < n; ++i) {
                const double d = col[i] - f.mean[y[i]];
                ss[y[i]] += d * d;
            }
            for (int c : {0, 1}) {
                f.var[c] = cnt[c] > 1 ? ss[c] / static_cast<double>(cnt[c] - 1) : var_floor;
                f.var[c] = std::max(f.var[c], var_floor);
            }
        }
    }
    return model;
}

}  // namespace fallbench
