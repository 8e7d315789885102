#include "wam/baselines/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "wam/core/error.hpp"

namespace wam::baselines {

Features summarize(const geo::FusedSample& sample) {
    const Shape& s = sample.tensor.shape;
    if (s.rank() != 3 || s[2] != geo::kNumChannels)
        throw Error("summarize: need a (window, window, channels) sample, got " + s.str());
    const int h = s[0], w = s[1], c = s[2];
    Features out{};
    const double count = static_cast<double>(h) * w;
    for (int ch = 0; ch < c; ++ch) {
        double sum = 0.0;
        for (int i = 0; i < h; ++i)
            for (int j = 0; j < w; ++j)
                sum += sample.tensor.data[(static_cast<std::size_t>(i) * w + j) * c + ch];
        const double mean = sum / count;
        double var = 0.0;
        for (int i = 0; i < h; ++i)
            for (int j = 0; j < w; ++j) {
                const double d =
                    sample.tensor.data[(static_cast<std::size_t>(i) * w + j) * c + ch] - mean;
                var += d * d;
            }
        out[ch * 3 + 0] = mean;
        out[ch * 3 + 1] = std::sqrt(var / count);
        out[ch * 3 + 2] =
            sample.tensor.data[(static_cast<std::size_t>(h / 2) * w + w / 2) * c + ch];
    }
    return out;
}

namespace {

double mean_of(const std::vector<double>& y, const std::vector<int>& idx, int lo, int hi) {
    double s = 0.0;
    for (int i = lo; i < hi; ++i) s += y[idx[i]];
    return s / static_cast<double>(hi - lo);
}

}  // namespace

int DecisionTree::build(const std::vector<Features>& x, const std::vector<double>& y,
                        std::vector<int>& idx, int lo, int hi, int depth,
                        const TreeParams& params, Rng* feature_rng, int features_per_split) {
    const int n = hi - lo;
    Node node;
    node.value = mean_of(y, idx, lo, hi);
    const int node_id = static_cast<int>(nodes_.size());
    nodes_.push_back(node);

    if (n < 2 * params.min_leaf) return node_id;
    if (params.max_depth > 0 && depth >= params.max_depth) return node_id;

    // candidate features: all, or a random subset for forest members
    std::array<int, kNumFeatures> features;
    std::iota(features.begin(), features.end(), 0);
    int n_features = kNumFeatures;
    if (feature_rng && features_per_split > 0 && features_per_split < kNumFeatures) {
        for (int i = 0; i < features_per_split; ++i) {
            const int j = i + static_cast<int>(feature_rng->below(
                                  static_cast<std::uint64_t>(kNumFeatures - i)));
            std::swap(features[i], features[j]);
        }
        std::sort(features.begin(), features.begin() + features_per_split);
        n_features = features_per_split;
    }

    // best split by summed squared error of the two children
    double parent_sse = 0.0;
    {
        const double m = nodes_[node_id].value;
        for (int i = lo; i < hi; ++i) parent_sse += (y[idx[i]] - m) * (y[idx[i]] - m);
    }
    if (parent_sse <= 0.0) return node_id;  // degenerate single-value target

    double best_sse = std::numeric_limits<double>::infinity();
    int best_feature = -1;
    double best_threshold = 0.0;
    std::vector<int> order(idx.begin() + lo, idx.begin() + hi);
    for (int fi = 0; fi < n_features; ++fi) {
        const int f = features[fi];
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            return x[a][f] < x[b][f] || (x[a][f] == x[b][f] && a < b);
        });
        // prefix sums over the sorted order
        double left_sum = 0.0, left_sq = 0.0;
        double total_sum = 0.0, total_sq = 0.0;
        for (int i = 0; i < n; ++i) {
            total_sum += y[order[i]];
            total_sq += y[order[i]] * y[order[i]];
        }
        for (int i = 0; i < n - 1; ++i) {
            left_sum += y[order[i]];
            left_sq += y[order[i]] * y[order[i]];
            const int nl = i + 1, nr = n - nl;
            if (nl < params.min_leaf || nr < params.min_leaf) continue;
            if (x[order[i]][f] == x[order[i + 1]][f]) continue;  // no boundary here
            const double right_sum = total_sum - left_sum;
            const double right_sq = total_sq - left_sq;
            const double sse = (left_sq - left_sum * left_sum / nl) +
                               (right_sq - right_sum * right_sum / nr);
            if (sse < best_sse - 1e-12) {
                best_sse = sse;
                best_feature = f;
                best_threshold = 0.5 * (x[order[i]][f] + x[order[i + 1]][f]);
            }
        }
    }
    if (best_feature < 0 || best_sse >= parent_sse) return node_id;

    const auto mid_it = std::partition(idx.begin() + lo, idx.begin() + hi, [&](int i) {
        return x[i][best_feature] <= best_threshold;
    });
    const int mid = static_cast<int>(mid_it - idx.begin());
    if (mid == lo || mid == hi) return node_id;

    nodes_[node_id].feature = best_feature;
    nodes_[node_id].threshold = best_threshold;
    const int left =
        build(x, y, idx, lo, mid, depth + 1, params, feature_rng, features_per_split);
    const int right =
        build(x, y, idx, mid, hi, depth + 1, params, feature_rng, features_per_split);
    nodes_[node_id].left = left;
    nodes_[node_id].right = right;
    return node_id;
}

void DecisionTree::fit(const std::vector<Features>& x, const std::vector<double>& y,
                       const TreeParams& params, Rng* feature_rng, int features_per_split) {
    if (x.size() != y.size() || x.size() < 2)
        throw Error("tree: need at least 2 training samples");
    nodes_.clear();
    std::vector<int> idx(x.size());
    std::iota(idx.begin(), idx.end(), 0);
    build(x, y, idx, 0, static_cast<int>(x.size()), 0, params, feature_rng, features_per_split);
}

double DecisionTree::predict(const Features& f) const {
    if (nodes_.empty()) throw Error("tree: predict before fit");
    int i = 0;
    while (nodes_[i].feature >= 0)
        i = f[nodes_[i].feature] <= nodes_[i].threshold ? nodes_[i].left : nodes_[i].right;
    return nodes_[i].value;
}

void RandomForest::fit(const std::vector<Features>& x, const std::vector<double>& y,
                       const ForestParams& params, std::uint64_t seed) {
    if (x.size() != y.size() || x.size() < 2)
        throw Error("forest: need at least 2 training samples");
    trees_.clear();
    trees_.resize(params.n_trees);
    Rng root(seed);
    for (int t = 0; t < params.n_trees; ++t) {
        Rng rng = root.fork(static_cast<std::uint64_t>(t));
        std::vector<Features> bx;
        std::vector<double> by;
        bx.reserve(x.size());
        by.reserve(y.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            const std::size_t j = static_cast<std::size_t>(rng.below(x.size()));
            bx.push_back(x[j]);
            by.push_back(y[j]);
        }
        trees_[t].fit(bx, by, params.tree, &rng, params.features_per_split);
    }
}

double RandomForest::predict(const Features& f) const {
    if (trees_.empty()) throw Error("forest: predict before fit");
    double s = 0.0;
    for (const DecisionTree& t : trees_) s += t.predict(f);
    return s / static_cast<double>(trees_.size());
}

void GradientBoost::fit(const std::vector<Features>& x, const std::vector<double>& y,
                        const BoostParams& params) {
    if (x.size() != y.size() || x.size() < 2)
        throw Error("gboost: need at least 2 training samples");
    trees_.clear();
    round_mse_.clear();
    shrinkage_ = params.shrinkage;
    base_ = average_baseline(y);

    std::vector<double> residual(y.size());
    std::vector<double> current(y.size(), base_);
    TreeParams tp;
    tp.max_depth = params.depth;
    tp.min_leaf = 1;
    for (int round = 0; round < params.rounds; ++round) {
        for (std::size_t i = 0; i < y.size(); ++i) residual[i] = y[i] - current[i];
        DecisionTree tree;
        tree.fit(x, residual, tp);
        for (std::size_t i = 0; i < y.size(); ++i)
            current[i] += shrinkage_ * tree.predict(x[i]);
        trees_.push_back(std::move(tree));
        double mse = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i)
            mse += (y[i] - current[i]) * (y[i] - current[i]);
        round_mse_.push_back(mse / static_cast<double>(y.size()));
    }
}

double GradientBoost::predict(const Features& f) const {
    double s = base_;
    for (const DecisionTree& t : trees_) s += shrinkage_ * t.predict(f);
    return s;
}

double average_baseline(const std::vector<double>& y) {
    if (y.empty()) throw Error("average_baseline: empty training set");
    return std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
}

}  // namespace wam::baselines
