#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "wam/core/rng.hpp"
#include "wam/geo/fuse.hpp"

namespace wam::baselines {

inline constexpr int kNumFeatures = 3 * geo::kNumChannels;  // 27

// Per channel: mean, standard deviation, center-point value of the z-scored
// sample tensor, in channel-major triples.
using Features = std::array<double, kNumFeatures>;

Features summarize(const geo::FusedSample& sample);

struct TreeParams {
    int max_depth = 12;  // <= 0 means unlimited
    int min_leaf = 2;
};

// CART regression tree with variance-reduction splits. Optional per-split
// feature subsampling turns it into a forest member.
class DecisionTree {
public:
    void fit(const std::vector<Features>& x, const std::vector<double>& y,
             const TreeParams& params, Rng* feature_rng = nullptr, int features_per_split = -1);
    double predict(const Features& f) const;
    std::size_t node_count() const { return nodes_.size(); }

private:
    struct Node {
        int feature = -1;  // -1 marks a leaf
        double threshold = 0.0;
        double value = 0.0;
        int left = -1;
        int right = -1;
    };
    int build(const std::vector<Features>& x, const std::vector<double>& y,
              std::vector<int>& idx, int lo, int hi, int depth, const TreeParams& params,
              Rng* feature_rng, int features_per_split);
    std::vector<Node> nodes_;
};

struct ForestParams {
    int n_trees = 100;
    TreeParams tree;       // default depth cap, min_leaf 2
    int features_per_split = 5;  // ~ sqrt(27)
};

// Bootstrap-bagged trees; prediction is the member mean.
class RandomForest {
public:
    void fit(const std::vector<Features>& x, const std::vector<double>& y,
             const ForestParams& params, std::uint64_t seed);
    double predict(const Features& f) const;
    const std::vector<DecisionTree>& trees() const { return trees_; }

private:
    std::vector<DecisionTree> trees_;
};

struct BoostParams {
    int rounds = 200;
    double shrinkage = 0.1;
    int depth = 3;
};

// Stagewise additive fit of shallow trees to residuals.
class GradientBoost {
public:
    void fit(const std::vector<Features>& x, const std::vector<double>& y,
             const BoostParams& params);
    double predict(const Features& f) const;
    const std::vector<double>& training_mse_per_round() const { return round_mse_; }

private:
    double base_ = 0.0;
    double shrinkage_ = 0.1;
    std::vector<DecisionTree> trees_;
    std::vector<double> round_mse_;
};

// Constant predictor at the training mean.
double average_baseline(const std::vector<double>& y);

}  // namespace wam::baselines
