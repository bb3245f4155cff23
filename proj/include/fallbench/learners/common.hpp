#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

#include "fallbench/matrix.hpp"

namespace fallbench {

enum class ModelFamily {
    logistic_regression,
    lda,
    naive_bayes,
    svm_linear,
    svm_gauss,
    random_forest,
    neural_net,
    avnnet,
    majority,
};

inline std::string_view family_name(ModelFamily f) {
    switch (f) {
        case ModelFamily::logistic_regression: return "logistic_regression";
        case ModelFamily::lda: return "lda";
        case ModelFamily::naive_bayes: return "naive_bayes";
        case ModelFamily::svm_linear: return "svm_linear";
        case ModelFamily::svm_gauss: return "svm_gauss";
        case ModelFamily::random_forest: return "random_forest";
        case ModelFamily::neural_net: return "neural_net";
        case ModelFamily::avnnet: return "avnnet";
        case ModelFamily::majority: return "majority";
    }
    return "?";
}

inline ModelFamily family_from_name(std::string_view name) {
    for (ModelFamily f :
         {ModelFamily::logistic_regression, ModelFamily::lda, ModelFamily::naive_bayes,
          ModelFamily::svm_linear, ModelFamily::svm_gauss, ModelFamily::random_forest,
          ModelFamily::neural_net, ModelFamily::avnnet, ModelFamily::majority})
        if (family_name(f) == name) return f;
    throw std::invalid_argument("unknown model family: " + std::string(name));
}

struct ModelSpec {
    ModelFamily family = ModelFamily::majority;
    std::map<std::string, double> hyper;  // family-specific; see validate_spec
    std::uint64_t seed = 0;
};

inline double hyper_or(const ModelSpec& spec, const std::string& key, double fallback) {
    auto it = spec.hyper.find(key);
    return it == spec.hyper.end() ? fallback : it->second;
}

inline void validate_spec(const ModelSpec& spec) {
    auto allow = [&](std::initializer_list<std::string_view> keys) {
        for (const auto& [k, v] : spec.hyper) {
            bool ok = false;
            for (auto a : keys) ok = ok || (k == a);
            if (!ok)
                throw std::invalid_argument("hyperparameter '" + k + "' not valid for " +
                                            std::string(family_name(spec.family)));
            if (!std::isfinite(v)) throw std::invalid_argument("hyperparameter '" + k + "' is not finite");
        }
    };
    switch (spec.family) {
        case ModelFamily::logistic_regression: allow({"ridge"}); break;
        case ModelFamily::lda: allow({}); break;
        case ModelFamily::naive_bayes: allow({}); break;
        case ModelFamily::svm_linear: allow({"C"}); break;
        case ModelFamily::svm_gauss: allow({"C", "sigma"}); break;
        case ModelFamily::random_forest: allow({"ntree"}); break;
        case ModelFamily::neural_net: allow({"hidden", "decay", "epochs", "learning_rate"}); break;
        case ModelFamily::avnnet: allow({"hidden", "decay", "epochs", "learning_rate", "members"}); break;
        case ModelFamily::majority: allow({}); break;
    }
}

inline double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// log(sigmoid(z)) without overflow
inline double log_sigmoid(double z) {
    if (z >= 0.0) return -std::log1p(std::exp(-z));
    return z - std::log1p(std::exp(z));
}

namespace detail {

inline void check_training_data(const Matrix& x, std::span<const int> y, bool need_both_classes) {
    if (x.rows() != y.size()) throw std::invalid_argument("fit: X rows and y length differ");
    if (x.rows() == 0) throw std::invalid_argument("fit: empty training set");
    if (x.cols() == 0) throw std::invalid_argument("fit: no features");
    for (double v : x.data())
        if (!std::isfinite(v)) throw std::invalid_argument("fit: non-finite feature value");
    std::size_t pos = 0;
    for (int label : y) {
        if (label != 0 && label != 1) throw std::invalid_argument("fit: labels must be 0 or 1");
        pos += label;
    }
    if (need_both_classes && (pos == 0 || pos == y.size()))
        throw std::invalid_argument("fit: training set has a single class");
}

}  // namespace detail

}  // namespace fallbench
