#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "fallbench/learners/common.hpp"
#include "fallbench/matrix.hpp"

namespace fallbench {

// Fisher discriminant with a shared covariance; the posterior for the
// positive class is a sigmoid of the linear discriminant.
struct LdaModel {
    std::vector<double> weights;
    double bias = 0.0;

    double score(std::span<const double> x) const { return sigmoid(bias + dot(weights, x)); }
};

inline LdaModel fit_lda(const Matrix& x, std::span<const int> y) {
    detail::check_training_data(x, y, true);
    const std::size_t n = x.rows(), p = x.cols();
    if (n < 3) throw std::invalid_argument("fit_lda: need at least 3 rows");
    std::vector<double> mu0(p, 0.0), mu1(p, 0.0);
    std::size_t n1 = 0;
    for (std::size_t i = 0; i < n; ++i) {
        auto& mu = y[i] ? mu1 : mu0;
        const auto row = x.row(i);
        for (std::size_t j = 0; j < p; ++j) mu[j] += row[j];
        n1 += y[i];
    }
    const std::size_t n0 = n - n1;
    for (std::size_t j = 0; j < p; ++j) {
        mu0[j] /= static_cast<double>(n0);
        mu1[j] /= static_cast<double>(n1);
    }
    Matrix s(p, p);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& mu = y[i] ? mu1 : mu0;
        const auto row = x.row(i);
        for (std::size_t j = 0; j < p; ++j)
            for (std::size_t k = j; k < p; ++k) s(j, k) += (row[j] - mu[j]) * (row[k] - mu[k]);
    }
    const double denom = static_cast<double>(n - 2);
    for (std::size_t j = 0; j < p; ++j)
        for (std::size_t k = j; k < p; ++k) {
            s(j, k) /= denom;
            s(k, j) = s(j, k);
        }
    std::vector<double> diff(p);
    for (std::size_t j = 0; j < p; ++j) diff[j] = mu1[j] - mu0[j];

    // ridge the covariance until it factors (collinear or constant features)
    double trace = 0.0;
    for (std::size_t j = 0; j < p; ++j) trace += s(j, j);
    double delta = 1e-6 * std::max(1.0, trace / static_cast<double>(p));
    auto w = cholesky_solve(s, diff);
    for (int attempt = 0; !w && attempt < 8; ++attempt) {
        for (std::size_t j = 0; j < p; ++j) s(j, j) += delta;
        w = cholesky_solve(s, diff);
        delta *= 10.0;
    }
    if (!w) throw std::runtime_error("fit_lda: covariance could not be regularized");

    LdaModel model;
    model.weights = *w;
    double centre = 0.0;
    for (std::size_t j = 0; j < p; ++j) centre += model.weights[j] * (mu1[j] + mu0[j]);
    model.bias = -0.5 * centre +
                 std::log(static_cast<double>(n1) / static_cast<double>(n0));
    return model;
}

}  // namespace fallbench
