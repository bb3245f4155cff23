#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "fallbench/learners/common.hpp"
#include "fallbench/matrix.hpp"

namespace fallbench {

enum class SvmKernel { linear, gauss };

// Soft-margin C-SVC trained by sequential minimal optimization with
// maximal-violating-pair working set selection, plus a sigmoid fit on the
// training decision values so scores land on a probability scale.
struct SvmModel {
    SvmKernel kernel = SvmKernel::linear;
    double sigma = 1.0;
    Matrix support;                // rows with nonzero alpha
    std::vector<double> alpha_y;   // alpha_i * y_i per support row
    double rho = 0.0;
    double platt_a = -1.0, platt_b = 0.0;
    int iterations = 0;

    double kernel_value(std::span<const double> a, std::span<const double> b) const {
        if (kernel == SvmKernel::linear) return dot(a, b);
        double d2 = 0.0;
        for (std::size_t j = 0; j < a.size(); ++j) {
            const double d = a[j] - b[j];
            d2 += d * d;
        }
        return std::exp(-d2 / (2.0 * sigma * sigma));
    }

    double decision(std::span<const double> x) const {
        double f = -rho;
        for (std::size_t i = 0; i < alpha_y.size(); ++i)
            f += alpha_y[i] * kernel_value(support.row(i), x);
        return f;
    }

    // P(faller | f) = 1 / (1 + exp(A f + B))
    double score(std::span<const double> x) const { return sigmoid(-(platt_a * decision(x) + platt_b)); }

    // weight vector, only meaningful for the linear kernel
    std::vector<double> linear_weights() const {
        std::vector<double> w(support.cols(), 0.0);
        for (std::size_t i = 0; i < alpha_y.size(); ++i) {
            const auto row = support.row(i);
            for (std::size_t j = 0; j < w.size(); ++j) w[j] += alpha_y[i] * row[j];
        }
        return w;
    }
};

namespace detail {

// Sigmoid calibration of decision values (Newton's method with backtracking).
inline void fit_platt(std::span<const double> decision, std::span<const int> y, double& a_out,
                      double& b_out) {
    const std::size_t n = decision.size();
    double n1 = 0.0;
    for (int label : y) n1 += label;
    const double n0 = static_cast<double>(n) - n1;
    const double hi = (n1 + 1.0) / (n1 + 2.0);
    const double lo = 1.0 / (n0 + 2.0);
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = y[i] ? hi : lo;

    double a = 0.0, b = std::log((n0 + 1.0) / (n1 + 1.0));
    const auto objective = [&](double aa, double bb) {
        double obj = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double f = aa * decision[i] + bb;
            // t*log(p) + (1-t)*log(1-p) with p = 1/(1+exp(f))
            obj -= t[i] * log_sigmoid(-f) + (1.0 - t[i]) * log_sigmoid(f);
        }
        return obj;
    };
    double fval = objective(a, b);
    for (int iter = 0; iter < 100; ++iter) {
        double h11 = 1e-12, h22 = 1e-12, h21 = 0.0, g1 = 0.0, g2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double f = a * decision[i] + b;
            const double p = sigmoid(-f);
            const double q = 1.0 - p;
            const double d1 = t[i] - p;
            const double d2 = p * q;
            g1 += decision[i] * d1;
            g2 += d1;
            h11 += decision[i] * decision[i] * d2;
            h22 += d2;
            h21 += decision[i] * d2;
        }
        if (std::fabs(g1) < 1e-5 && std::fabs(g2) < 1e-5) break;
        const double det = h11 * h22 - h21 * h21;
        const double da = -(h22 * g1 - h21 * g2) / det;
        const double db = -(-h21 * g1 + h11 * g2) / det;
        const double gd = g1 * da + g2 * db;
        double step = 1.0;
        while (step >= 1e-10) {
            const double trial = objective(a + step * da, b + step * db);
            if (trial < fval + 1e-4 * step * gd) {
                a += step * da;
                b += step * db;
                fval = trial;
                break;
            }
            step *= 0.5;
        }
        if (step < 1e-10) break;
    }
    a_out = a;
    b_out = b;
}

}  // namespace detail

inline SvmModel fit_svm(const Matrix& x, std::span<const int> y, SvmKernel kernel, double c,
                        double sigma = 1.0) {
    detail::check_training_data(x, y, true);
    if (!(c > 0.0)) throw std::invalid_argument("fit_svm: C must be positive");
    if (kernel == SvmKernel::gauss && !(sigma > 0.0))
        throw std::invalid_argument("fit_svm: sigma must be positive");
    const std::size_t n = x.rows();
    std::vector<double> ypm(n);
    for (std::size_t i = 0; i < n; ++i) ypm[i] = y[i] ? 1.0 : -1.0;

    SvmModel model;
    model.kernel = kernel;
    model.sigma = sigma;

    Matrix k(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
            const double v = model.kernel_value(x.row(i), x.row(j));
            k(i, j) = v;
            k(j, i) = v;
        }

    std::vector<double> alpha(n, 0.0), grad(n, -1.0);
    const double tol = 1e-3;
    const int max_iter = 200000;
    int iter = 0;
    for (; iter < max_iter; ++iter) {
        // maximal violating pair over -y*grad
        int i_up = -1, j_low = -1;
        double m_up = -std::numeric_limits<double>::infinity();
        double m_low = std::numeric_limits<double>::infinity();
        for (std::size_t t = 0; t < n; ++t) {
            const double v = -ypm[t] * grad[t];
            const bool in_up = (ypm[t] > 0 && alpha[t] < c) || (ypm[t] < 0 && alpha[t] > 0);
            const bool in_low = (ypm[t] > 0 && alpha[t] > 0) || (ypm[t] < 0 && alpha[t] < c);
            if (in_up && v > m_up) {
                m_up = v;
                i_up = static_cast<int>(t);
            }
            if (in_low && v < m_low) {
                m_low = v;
                j_low = static_cast<int>(t);
            }
        }
        if (i_up < 0 || j_low < 0 || m_up - m_low < tol) break;
        const std::size_t i = static_cast<std::size_t>(i_up), j = static_cast<std::size_t>(j_low);

        double quad = k(i, i) + k(j, j) - 2.0 * k(i, j);
        if (quad <= 0.0) quad = 1e-12;
        const double delta = (-ypm[i] * grad[i] + ypm[j] * grad[j]) / quad;
        const double old_ai = alpha[i], old_aj = alpha[j];
        const double sum = ypm[i] * old_ai + ypm[j] * old_aj;
        alpha[i] += ypm[i] * delta;
        alpha[j] -= ypm[j] * delta;
        alpha[i] = std::min(std::max(alpha[i], 0.0), c);
        alpha[j] = ypm[j] * (sum - ypm[i] * alpha[i]);
        alpha[j] = std::min(std::max(alpha[j], 0.0), c);
        alpha[i] = ypm[i] * (sum - ypm[j] * alpha[j]);
        const double dai = alpha[i] - old_ai, daj = alpha[j] - old_aj;
        for (std::size_t t = 0; t < n; ++t)
            grad[t] += ypm[t] * (ypm[i] * k(t, i) * dai + ypm[j] * k(t, j) * daj);
    }
    model.iterations = iter;

    // offset: average -y*grad over free vectors, else midpoint of the bounds
    double sum_free = 0.0, ub = std::numeric_limits<double>::infinity(),
           lb = -std::numeric_limits<double>::infinity();
    std::size_t n_free = 0;
    for (std::size_t t = 0; t < n; ++t) {
        const double yg = ypm[t] * grad[t];
        if (alpha[t] >= c) {
            if (ypm[t] < 0)
                ub = std::min(ub, yg);
            else
                lb = std::max(lb, yg);
        } else if (alpha[t] <= 0.0) {
            if (ypm[t] > 0)
                ub = std::min(ub, yg);
            else
                lb = std::max(lb, yg);
        } else {
            ++n_free;
            sum_free += yg;
        }
    }
    model.rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : (ub + lb) / 2.0;

    std::size_t n_sv = 0;
    for (double a : alpha) n_sv += a > 0.0;
    model.support = Matrix(n_sv, x.cols());
    model.alpha_y.resize(n_sv);
    for (std::size_t t = 0, s = 0; t < n; ++t) {
        if (alpha[t] <= 0.0) continue;
        const auto row = x.row(t);
        for (std::size_t jj = 0; jj < x.cols(); ++jj) model.support(s, jj) = row[jj];
        model.alpha_y[s] = alpha[t] * ypm[t];
        ++s;
    }

    std::vector<double> dec(n);
    for (std::size_t t = 0; t < n; ++t) dec[t] = model.decision(x.row(t));
    detail::fit_platt(dec, y, model.platt_a, model.platt_b);
    return model;
}

}  // namespace fallbench
