#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "fallbench/learners/common.hpp"
#include "fallbench/matrix.hpp"

namespace fallbench {

struct LogisticModel {
    std::vector<double> coef;
    double intercept = 0.0;
    double ridge = 0.0;
    int iterations = 0;
    bool separation_restart = false;  // refit with a small ridge after divergence

    double score(std::span<const double> x) const {
        return sigmoid(intercept + dot(coef, x));
    }
};

namespace detail {

// penalized negative log-likelihood; the intercept is never penalized
inline double logistic_nll(const Matrix& x, std::span<const int> y, const std::vector<double>& beta,
                           double ridge) {
    const std::size_t p = x.cols();
    double nll = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
        double eta = beta[0];
        const auto row = x.row(i);
        for (std::size_t j = 0; j < p; ++j) eta += beta[j + 1] * row[j];
        nll -= y[i] ? log_sigmoid(eta) : log_sigmoid(-eta);
    }
    for (std::size_t j = 1; j <= p; ++j) nll += 0.5 * ridge * beta[j] * beta[j];
    return nll;
}

struct IrlsOutcome {
    std::vector<double> beta;
    int iterations = 0;
    bool diverged = false;
};

inline IrlsOutcome logistic_irls(const Matrix& x, std::span<const int> y, double ridge) {
    const std::size_t n = x.rows(), p = x.cols();
    IrlsOutcome out;
    out.beta.assign(p + 1, 0.0);
    std::vector<double> mu(n), grad(p + 1);
    for (int iter = 0; iter < 100; ++iter) {
        out.iterations = iter + 1;
        for (std::size_t i = 0; i < n; ++i) {
            double eta = out.beta[0];
            const auto row = x.row(i);
            for (std::size_t j = 0; j < p; ++j) eta += out.beta[j + 1] * row[j];
            mu[i] = sigmoid(eta);
        }
        std::fill(grad.begin(), grad.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double r = static_cast<double>(y[i]) - mu[i];
            grad[0] += r;
            const auto row = x.row(i);
            for (std::size_t j = 0; j < p; ++j) grad[j + 1] += r * row[j];
        }
        for (std::size_t j = 1; j <= p; ++j) grad[j] -= ridge * out.beta[j];
        double gmax = 0.0;
        for (double g : grad) gmax = std::max(gmax, std::fabs(g));
        if (gmax < 1e-8) return out;

        Matrix h(p + 1, p + 1);
        for (std::size_t i = 0; i < n; ++i) {
            const double w = std::max(mu[i] * (1.0 - mu[i]), 1e-10);
            const auto row = x.row(i);
            h(0, 0) += w;
            for (std::size_t j = 0; j < p; ++j) {
                h(0, j + 1) += w * row[j];
                for (std::size_t k = j; k < p; ++k) h(j + 1, k + 1) += w * row[j] * row[k];
            }
        }
        for (std::size_t j = 1; j <= p; ++j) h(j, j) += ridge;
        for (std::size_t j = 0; j <= p; ++j)
            for (std::size_t k = 0; k < j; ++k) h(j, k) = h(k, j);
        auto delta = cholesky_solve(h, grad);
        if (!delta) {
            out.diverged = true;
            return out;
        }
        const double nll0 = logistic_nll(x, y, out.beta, ridge);
        double t = 1.0;
        std::vector<double> trial(p + 1);
        for (int halving = 0; halving < 40; ++halving) {
            for (std::size_t j = 0; j <= p; ++j) trial[j] = out.beta[j] + t * (*delta)[j];
            if (logistic_nll(x, y, trial, ridge) <= nll0 + 1e-12) break;
            t *= 0.5;
        }
        for (std::size_t j = 0; j <= p; ++j) out.beta[j] += t * (*delta)[j];
        double bmax = 0.0;
        for (std::size_t j = 0; j <= p; ++j) bmax = std::max(bmax, std::fabs(out.beta[j]));
        if (bmax > 1e3) {
            out.diverged = true;
            return out;
        }
    }
    out.diverged = true;  // no gradient convergence within the iteration budget
    return out;
}

}  // namespace detail

// Maximum-likelihood logistic regression via iteratively reweighted least
// squares.  Quasi-separated data drives the coefficients off to infinity;
// in that case the fit restarts with a tiny ridge penalty.
inline LogisticModel fit_logistic(const Matrix& x, std::span<const int> y, double ridge = 0.0) {
    detail::check_training_data(x, y, true);
    if (ridge < 0.0) throw std::invalid_argument("fit_logistic: negative ridge");
    auto res = detail::logistic_irls(x, y, ridge);
    LogisticModel model;
    if (res.diverged && ridge == 0.0) {
        model.separation_restart = true;
        model.ridge = 1e-6;
        res = detail::logistic_irls(x, y, model.ridge);
    } else {
        model.ridge = ridge;
    }
    model.iterations = res.iterations;
    model.intercept = res.beta[0];
    model.coef.assign(res.beta.begin() + 1, res.beta.end());
    return model;
}

}  // namespace fallbench
