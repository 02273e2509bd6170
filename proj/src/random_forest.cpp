#include <algorithm>
#include <cmath>
#include <numeric>

#include "myomap/classifiers.hpp"
#include "myomap/error.hpp"
#include "myomap/random.hpp"

namespace myomap::classifiers {

namespace {

double gini(std::size_t neg, std::size_t pos) {
    const auto n = static_cast<double>(neg + pos);
    if (n == 0) {
        return 0.0;
    }
    const double p = static_cast<double>(pos) / n;
    return 2.0 * p * (1.0 - p);
}

struct Split {
    int feature = -1;
    double threshold = 0.0;
    double impurity = 0.0;  ///< weighted child impurity
};

// Best split of rows idx on feature f; thresholds are midpoints of consecutive
// distinct values. Returns feature -1 if no split respects min_leaf.
Split best_split_on(const std::vector<std::vector<double>>& x, const std::vector<bool>& y,
                    const std::vector<std::size_t>& idx, std::size_t f, std::size_t min_leaf) {
    std::vector<std::size_t> order = idx;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a][f] < x[b][f]; });
    std::size_t total_pos = 0;
    for (auto i : order) {
        total_pos += y[i] ? 1 : 0;
    }
    const std::size_t n = order.size();
    Split best;
    std::size_t left_pos = 0;
    for (std::size_t k = 0; k + 1 < n; ++k) {
        left_pos += y[order[k]] ? 1 : 0;
        const double lo = x[order[k]][f];
        const double hi = x[order[k + 1]][f];
        if (lo == hi) {
            continue;
        }
        const std::size_t n_left = k + 1;
        const std::size_t n_right = n - n_left;
        if (n_left < min_leaf || n_right < min_leaf) {
            continue;
        }
        const double imp = static_cast<double>(n_left) * gini(n_left - left_pos, left_pos) +
                           static_cast<double>(n_right) * gini(n_right - (total_pos - left_pos), total_pos - left_pos);
        if (best.feature < 0 || imp < best.impurity) {
            double t = lo + (hi - lo) / 2.0;
            if (t >= hi) {
                t = lo;
            }
            best = {static_cast<int>(f), t, imp};
        }
    }
    return best;
}

}  // namespace

bool DecisionTree::predict(const std::vector<double>& row) const {
    std::size_t i = 0;
    while (nodes[i].feature >= 0) {
        const auto& node = nodes[i];
        i = static_cast<std::size_t>(row[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left
                                                                                                   : node.right);
    }
    return nodes[i].votes_positive >= nodes[i].votes_negative;
}

std::size_t DecisionTree::depth() const {
    std::size_t deepest = 0;
    std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
    while (!stack.empty()) {
        const auto [i, d] = stack.back();
        stack.pop_back();
        deepest = std::max(deepest, d);
        if (nodes[i].feature >= 0) {
            stack.emplace_back(static_cast<std::size_t>(nodes[i].left), d + 1);
            stack.emplace_back(static_cast<std::size_t>(nodes[i].right), d + 1);
        }
    }
    return deepest;
}

std::vector<std::size_t> bootstrap_indices(std::uint64_t seed, std::size_t tree_index, std::size_t n) {
    Rng rng(splitmix64(seed ^ static_cast<std::uint64_t>(tree_index)));
    std::vector<std::size_t> idx(n);
    for (auto& i : idx) {
        i = static_cast<std::size_t>(rng.below(n));
    }
    return idx;
}

DecisionTree grow_tree(const std::vector<std::vector<double>>& x, const std::vector<bool>& y,
                       const std::vector<std::size_t>& idx, const TreeSettings& settings, std::uint64_t tree_seed) {
    if (idx.empty()) {
        throw Error(ErrorCode::EmptyTrain, "cannot grow a tree on zero rows");
    }
    const std::size_t d = x.front().size();
    const std::size_t mtry = std::clamp<std::size_t>(settings.candidate_features, 1, d);
    Rng rng(tree_seed);
    DecisionTree tree;

    struct Pending {
        std::size_t node;
        std::vector<std::size_t> rows;
        std::size_t depth;
    };
    tree.nodes.emplace_back();
    std::vector<Pending> stack;
    stack.push_back({0, idx, 0});
    std::vector<std::size_t> features(d);
    while (!stack.empty()) {
        Pending p = std::move(stack.back());
        stack.pop_back();
        TreeNode node;
        for (auto i : p.rows) {
            (y[i] ? node.votes_positive : node.votes_negative) += 1;
        }
        const bool pure = node.votes_positive == 0 || node.votes_negative == 0;
        const bool depth_reached = settings.max_depth > 0 && p.depth >= settings.max_depth;
        if (pure || depth_reached || p.rows.size() < 2 * settings.min_leaf) {
            tree.nodes[p.node] = node;
            continue;
        }
        // Random candidate subset first; if none of them can split the node,
        // the remaining features are tried in the same shuffled order.
        std::iota(features.begin(), features.end(), 0);
        rng.shuffle(features.begin(), features.end());
        Split best;
        for (std::size_t k = 0; k < d; ++k) {
            if (k >= mtry && best.feature >= 0) {
                break;
            }
            const auto s = best_split_on(x, y, p.rows, features[k], settings.min_leaf);
            if (s.feature >= 0 && (best.feature < 0 || s.impurity < best.impurity)) {
                best = s;
            }
        }
        if (best.feature < 0) {
            tree.nodes[p.node] = node;
            continue;
        }
        std::vector<std::size_t> left;
        std::vector<std::size_t> right;
        const auto f = static_cast<std::size_t>(best.feature);
        for (auto i : p.rows) {
            (x[i][f] <= best.threshold ? left : right).push_back(i);
        }
        node.feature = best.feature;
        node.threshold = best.threshold;
        node.left = static_cast<int>(tree.nodes.size());
        node.right = node.left + 1;
        tree.nodes.emplace_back();
        tree.nodes.emplace_back();
        tree.nodes[p.node] = node;
        // Right pushed first so the left subtree is grown first.
        stack.push_back({static_cast<std::size_t>(node.right), std::move(right), p.depth + 1});
        stack.push_back({static_cast<std::size_t>(node.left), std::move(left), p.depth + 1});
    }
    return tree;
}

std::vector<DecisionTree> train_forest(const std::vector<std::vector<double>>& x, const std::vector<bool>& y,
                                       std::size_t n_trees, std::size_t max_depth, std::size_t min_leaf,
                                       std::uint64_t seed) {
    if (x.empty()) {
        throw Error(ErrorCode::EmptyTrain, "cannot train a forest on zero rows");
    }
    TreeSettings settings;
    settings.max_depth = max_depth;
    settings.min_leaf = min_leaf;
    settings.candidate_features =
        static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(x.front().size()))));
    std::vector<DecisionTree> forest;
    forest.reserve(n_trees);
    for (std::size_t t = 0; t < n_trees; ++t) {
        const auto idx = bootstrap_indices(seed, t, x.size());
        // Feature sampling continues on its own stream derived from the tree seed.
        forest.push_back(grow_tree(x, y, idx, settings, mix_seed(splitmix64(seed ^ t), 1)));
    }
    return forest;
}

bool forest_predict(const std::vector<DecisionTree>& forest, const std::vector<double>& row) {
    std::size_t pos = 0;
    for (const auto& t : forest) {
        pos += t.predict(row) ? 1 : 0;
    }
    return 2 * pos >= forest.size();
}

}  // namespace myomap::classifiers
