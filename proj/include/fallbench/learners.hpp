#pragma once

#include <span>
#include <string>
#include <variant>
#include <vector>

#include "fallbench/learners/common.hpp"
#include "fallbench/learners/lda.hpp"
#include "fallbench/learners/logistic.hpp"
#include "fallbench/learners/naive_bayes.hpp"
#include "fallbench/learners/neural_net.hpp"
#include "fallbench/learners/random_forest.hpp"
#include "fallbench/learners/svm.hpp"

namespace fallbench {

// Any fitted classifier.  score() maps a feature row to [0,1]; the hard
// label is score > threshold.
class FittedModel {
  public:
    using Variant = std::variant<LogisticModel, LdaModel, NaiveBayesModel, SvmModel, ForestModel,
                                 NeuralNetModel, AvNNetModel, MajorityModel>;

    FittedModel(ModelFamily family, Variant model, std::size_t n_features,
                std::vector<std::string> feature_names)
        : family_(family),
          n_features_(n_features),
          model_(std::move(model)),
          feature_names_(std::move(feature_names)) {}

    ModelFamily family() const { return family_; }
    std::size_t n_features() const { return n_features_; }
    const std::vector<std::string>& feature_names() const { return feature_names_; }

    double score(std::span<const double> x) const {
        if (x.size() != n_features_) throw std::invalid_argument("score: feature count mismatch");
        return std::visit([&](const auto& m) { return m.score(x); }, model_);
    }

    bool predict(std::span<const double> x, double threshold) const {
        return score(x) > threshold;
    }

    template <class M>
    const M& as() const {
        return std::get<M>(model_);
    }

    // flattened numeric state, used for run auditing
    std::vector<double> parameters() const;

  private:
    ModelFamily family_;
    std::size_t n_features_;
    Variant model_;
    std::vector<std::string> feature_names_;
};

namespace detail {

inline void flatten(const LogisticModel& m, std::vector<double>& out) {
    out.push_back(m.intercept);
    out.insert(out.end(), m.coef.begin(), m.coef.end());
    out.push_back(m.ridge);
}

inline void flatten(const LdaModel& m, std::vector<double>& out) {
    out.push_back(m.bias);
    out.insert(out.end(), m.weights.begin(), m.weights.end());
}

inline void flatten(const NaiveBayesModel& m, std::vector<double>& out) {
    out.push_back(m.log_prior[0]);
    out.push_back(m.log_prior[1]);
    for (const auto& f : m.features) {
        out.push_back(f.bernoulli ? 1.0 : 0.0);
        if (f.bernoulli) {
            out.insert(out.end(), {f.lo, f.hi, f.log_p_hi[0], f.log_p_hi[1], f.log_p_lo[0], f.log_p_lo[1]});
        } else {
            out.insert(out.end(), {f.mean[0], f.mean[1], f.var[0], f.var[1]});
        }
    }
}

inline void flatten(const SvmModel& m, std::vector<double>& out) {
    out.push_back(m.rho);
    out.push_back(m.platt_a);
    out.push_back(m.platt_b);
    out.push_back(m.sigma);
    out.insert(out.end(), m.alpha_y.begin(), m.alpha_y.end());
    out.insert(out.end(), m.support.data().begin(), m.support.data().end());
}

inline void flatten(const ForestModel& m, std::vector<double>& out) {
    for (const auto& tree : m.trees)
        for (const auto& n : tree.nodes) {
            out.push_back(static_cast<double>(n.feature));
            out.push_back(n.threshold);
            out.push_back(static_cast<double>(n.left));
            out.push_back(static_cast<double>(n.right));
            out.push_back(static_cast<double>(n.label));
        }
}

inline void flatten(const NeuralNetModel& m, std::vector<double>& out) {
    out.insert(out.end(), m.w1.begin(), m.w1.end());
    out.insert(out.end(), m.b1.begin(), m.b1.end());
    out.insert(out.end(), m.w2.begin(), m.w2.end());
    out.push_back(m.b2);
}

inline void flatten(const AvNNetModel& m, std::vector<double>& out) {
    for (const auto& member : m.members) flatten(member, out);
}

inline void flatten(const MajorityModel&, std::vector<double>&) {}

}  // namespace detail

inline std::vector<double> FittedModel::parameters() const {
    std::vector<double> out;
    std::visit([&](const auto& m) { detail::flatten(m, out); }, model_);
    return out;
}

inline FittedModel fit_model(const ModelSpec& spec, const Matrix& x, std::span<const int> y,
                             std::vector<std::string> feature_names = {}) {
    validate_spec(spec);
    const std::size_t p = x.cols();
    auto wrap = [&](FittedModel::Variant v) {
        return FittedModel(spec.family, std::move(v), p, std::move(feature_names));
    };
    switch (spec.family) {
        case ModelFamily::logistic_regression:
            return wrap(fit_logistic(x, y, hyper_or(spec, "ridge", 0.0)));
        case ModelFamily::lda:
            return wrap(fit_lda(x, y));
        case ModelFamily::naive_bayes:
            return wrap(fit_naive_bayes(x, y));
        case ModelFamily::svm_linear:
            return wrap(fit_svm(x, y, SvmKernel::linear, hyper_or(spec, "C", 1.0)));
        case ModelFamily::svm_gauss:
            return wrap(fit_svm(x, y, SvmKernel::gauss, hyper_or(spec, "C", 1.0),
                                hyper_or(spec, "sigma", 1.0)));
        case ModelFamily::random_forest:
            return wrap(fit_forest(x, y, static_cast<std::size_t>(hyper_or(spec, "ntree", 500.0)),
                                   spec.seed));
        case ModelFamily::neural_net:
            return wrap(fit_neural_net(x, y, static_cast<std::size_t>(hyper_or(spec, "hidden", 5.0)),
                                       hyper_or(spec, "decay", 0.01),
                                       static_cast<std::size_t>(hyper_or(spec, "epochs", 500.0)),
                                       hyper_or(spec, "learning_rate", 0.1), spec.seed));
        case ModelFamily::avnnet:
            return wrap(fit_avnnet(x, y, static_cast<std::size_t>(hyper_or(spec, "members", 5.0)),
                                   static_cast<std::size_t>(hyper_or(spec, "hidden", 5.0)),
                                   hyper_or(spec, "decay", 0.01),
                                   static_cast<std::size_t>(hyper_or(spec, "epochs", 500.0)),
                                   hyper_or(spec, "learning_rate", 0.1), spec.seed));
        case ModelFamily::majority:
            if (x.rows() != y.size()) throw std::invalid_argument("fit: X rows and y length differ");
            if (y.empty()) throw std::invalid_argument("fit: empty training set");
            return wrap(MajorityModel{});
    }
    throw std::invalid_argument("fit_model: unknown family");
}

}  // namespace fallbench
