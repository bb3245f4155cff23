#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "fallbench/learners/common.hpp"
#include "fallbench/matrix.hpp"
#include "fallbench/rng.hpp"

namespace fallbench {

struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1, right = -1;
    int label = -1;  // set on leaves
};

struct Tree {
    std::vector<TreeNode> nodes;

    int predict(std::span<const double> x) const {
        int at = 0;
        while (nodes[at].label < 0)
            at = x[nodes[at].feature] <= nodes[at].threshold ? nodes[at].left : nodes[at].right;
        return nodes[at].label;
    }
};

// Bagged CART trees on Gini impurity, grown until nodes are pure (or no
// split separates anything).  The score is the fraction of trees voting
// for the positive class.
struct ForestModel {
    std::vector<Tree> trees;
    std::size_t mtry = 1;

    double score(std::span<const double> x) const {
        std::size_t votes = 0;
        for (const auto& t : trees) votes += t.predict(x);
        return static_cast<double>(votes) / static_cast<double>(trees.size());
    }
};

namespace detail {

struct TreeBuilder {
    const Matrix& x;
    std::span<const int> y;
    std::size_t mtry;
    Rng& rng;
    Tree tree;
    std::vector<std::size_t> feature_pool;

    TreeBuilder(const Matrix& x_, std::span<const int> y_, std::size_t mtry_, Rng& rng_)
        : x(x_), y(y_), mtry(mtry_), rng(rng_), feature_pool(x_.cols()) {
        for (std::size_t j = 0; j < feature_pool.size(); ++j) feature_pool[j] = j;
    }

    static double gini(double n1, double n) {
        if (n <= 0.0) return 0.0;
        const double p = n1 / n;
        return 2.0 * p * (1.0 - p);
    }

    int build(std::vector<std::size_t>& rows) {
        const int node_id = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        std::size_t pos = 0;
        for (std::size_t r : rows) pos += y[r];
        if (pos == 0 || pos == rows.size()) {
            tree.nodes[node_id].label = pos ? 1 : 0;
            return node_id;
        }
        // draw mtry distinct candidate features
        for (std::size_t d = 0; d < mtry; ++d) {
            const std::size_t pick = d + rng.below(feature_pool.size() - d);
            std::swap(feature_pool[d], feature_pool[pick]);
        }
        const double n = static_cast<double>(rows.size());
        const double parent = gini(static_cast<double>(pos), n);
        double best_gain = 1e-12;
        int best_feature = -1;
        double best_threshold = 0.0;
        std::vector<std::pair<double, int>> vals(rows.size());
        for (std::size_t d = 0; d < mtry; ++d) {
            const std::size_t f = feature_pool[d];
            for (std::size_t i = 0; i < rows.size(); ++i) vals[i] = {x(rows[i], f), y[rows[i]]};
            std::sort(vals.begin(), vals.end());
            double left_n = 0.0, left_pos = 0.0;
            for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
                left_n += 1.0;
                left_pos += vals[i].second;
                if (vals[i].first == vals[i + 1].first) continue;
                const double right_n = n - left_n;
                const double gain = parent - (left_n * gini(left_pos, left_n) +
                                              right_n * gini(static_cast<double>(pos) - left_pos, right_n)) /
                                                 n;
                if (gain > best_gain) {
                    best_gain = gain;
                    best_feature = static_cast<int>(f);
                    best_threshold = vals[i].first + 0.5 * (vals[i + 1].first - vals[i].first);
                }
            }
        }
        if (best_feature < 0) {
            // contradictory rows (identical inputs, mixed labels): majority leaf
            tree.nodes[node_id].label = (2 * pos > rows.size()) ? 1 : 0;
            return node_id;
        }
        std::vector<std::size_t> left, right;
        for (std::size_t r : rows)
            (x(r, static_cast<std::size_t>(best_feature)) <= best_threshold ? left : right).push_back(r);
        tree.nodes[node_id].feature = best_feature;
        tree.nodes[node_id].threshold = best_threshold;
        rows.clear();
        rows.shrink_to_fit();
        const int l = build(left);
        const int r = build(right);
        tree.nodes[node_id].left = l;
        tree.nodes[node_id].right = r;
        return node_id;
    }
};

}  // namespace detail

inline ForestModel fit_forest(const Matrix& x, std::span<const int> y, std::size_t ntree,
                              std::uint64_t seed) {
    detail::check_training_data(x, y, true);
    if (ntree == 0) throw std::invalid_argument("fit_forest: ntree must be positive");
    const std::size_t n = x.rows();
    ForestModel model;
    model.mtry = std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(x.cols()))));
    model.trees.reserve(ntree);
    for (std::size_t t = 0; t < ntree; ++t) {
        Rng rng(derive_seed(seed, t));
        std::vector<std::size_t> rows(n);
        for (std::size_t i = 0; i < n; ++i) rows[i] = static_cast<std::size_t>(rng.below(n));
        detail::TreeBuilder builder(x, y, model.mtry, rng);
        builder.build(rows);
        model.trees.push_back(std::move(builder.tree));
    }
    return model;
}

}  // namespace fallbench
