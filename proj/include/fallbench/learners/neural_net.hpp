#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "fallbench/learners/common.hpp"
#include "fallbench/matrix.hpp"
#include "fallbench/rng.hpp"

namespace fallbench {

// Single hidden layer of logistic units trained by full-batch gradient
// descent on cross-entropy with an L2 weight penalty.
struct NeuralNetModel {
    std::size_t inputs = 0, hidden = 0;
    std::vector<double> w1;  // hidden x inputs, row-major
    std::vector<double> b1;
    std::vector<double> w2;
    double b2 = 0.0;
    std::vector<double> epoch_loss;  // penalized loss after each update

    double score(std::span<const double> x) const {
        double out = b2;
        for (std::size_t h = 0; h < hidden; ++h) {
            double z = b1[h];
            const double* wrow = w1.data() + h * inputs;
            for (std::size_t j = 0; j < inputs; ++j) z += wrow[j] * x[j];
            out += w2[h] * sigmoid(z);
        }
        return sigmoid(out);
    }
};

inline NeuralNetModel fit_neural_net(const Matrix& x, std::span<const int> y, std::size_t hidden,
                                     double decay, std::size_t epochs, double learning_rate,
                                     std::uint64_t seed) {
    detail::check_training_data(x, y, true);
    if (hidden == 0) throw std::invalid_argument("fit_neural_net: hidden must be positive");
    const std::size_t n = x.rows(), p = x.cols();
    NeuralNetModel m;
    m.inputs = p;
    m.hidden = hidden;
    Rng rng(seed);
    m.w1.resize(hidden * p);
    m.b1.resize(hidden);
    m.w2.resize(hidden);
    for (auto& w : m.w1) w = rng.uniform(-0.5, 0.5);
    for (auto& w : m.b1) w = rng.uniform(-0.5, 0.5);
    for (auto& w : m.w2) w = rng.uniform(-0.5, 0.5);
    m.b2 = rng.uniform(-0.5, 0.5);

    std::vector<double> act(hidden), gw1(hidden * p), gb1(hidden), gw2(hidden);
    m.epoch_loss.reserve(epochs);
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
        std::fill(gw1.begin(), gw1.end(), 0.0);
        std::fill(gb1.begin(), gb1.end(), 0.0);
        std::fill(gw2.begin(), gw2.end(), 0.0);
        double gb2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto row = x.row(i);
            double out_z = m.b2;
            for (std::size_t h = 0; h < hidden; ++h) {
                double z = m.b1[h];
                const double* wrow = m.w1.data() + h * p;
                for (std::size_t j = 0; j < p; ++j) z += wrow[j] * row[j];
                act[h] = sigmoid(z);
                out_z += m.w2[h] * act[h];
            }
            const double mu = sigmoid(out_z);
            const double delta = mu - static_cast<double>(y[i]);  // dCE/dz for sigmoid+CE
            gb2 += delta;
            for (std::size_t h = 0; h < hidden; ++h) {
                gw2[h] += delta * act[h];
                const double dh = delta * m.w2[h] * act[h] * (1.0 - act[h]);
                gb1[h] += dh;
                double* grow = gw1.data() + h * p;
                for (std::size_t j = 0; j < p; ++j) grow[j] += dh * row[j];
            }
        }
        for (std::size_t k = 0; k < m.w1.size(); ++k)
            m.w1[k] -= learning_rate * (gw1[k] * inv_n + decay * m.w1[k]);
        for (std::size_t h = 0; h < hidden; ++h) {
            m.b1[h] -= learning_rate * (gb1[h] * inv_n + decay * m.b1[h]);
            m.w2[h] -= learning_rate * (gw2[h] * inv_n + decay * m.w2[h]);
        }
        m.b2 -= learning_rate * (gb2 * inv_n + decay * m.b2);

        double loss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double mu = m.score(x.row(i));
            const double safe = std::min(std::max(y[i] ? mu : 1.0 - mu, 1e-12), 1.0);
            loss -= std::log(safe);
        }
        loss *= inv_n;
        double penalty = 0.0;
        for (double w : m.w1) penalty += w * w;
        for (double w : m.b1) penalty += w * w;
        for (double w : m.w2) penalty += w * w;
        penalty += m.b2 * m.b2;
        m.epoch_loss.push_back(loss + 0.5 * decay * penalty);
    }
    return m;
}

// Average of independently initialized networks; the score is the exact
// arithmetic mean of the member scores.
struct AvNNetModel {
    std::vector<NeuralNetModel> members;

    double score(std::span<const double> x) const {
        double s = 0.0;
        for (const auto& m : members) s += m.score(x);
        return s / static_cast<double>(members.size());
    }
};

inline AvNNetModel fit_avnnet(const Matrix& x, std::span<const int> y, std::size_t members,
                              std::size_t hidden, double decay, std::size_t epochs,
                              double learning_rate, std::uint64_t seed) {
    if (members == 0) throw std::invalid_argument("fit_avnnet: members must be positive");
    AvNNetModel model;
    model.members.reserve(members);
    for (std::size_t i = 0; i < members; ++i)
        model.members.push_back(
            fit_neural_net(x, y, hidden, decay, epochs, learning_rate, derive_seed(seed, i)));
    return model;
}

// Constant non-faller prediction: the no-information floor every other
// strategy is judged against.
struct MajorityModel {
    double score(std::span<const double>) const { return 0.0; }
};

}  // namespace fallbench
