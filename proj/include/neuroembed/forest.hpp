#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "json.hpp"
#include "neuroembed/common.hpp"

namespace neuroembed {

struct ForestConfig {
    std::size_t n_trees = 500;
    std::optional<std::size_t> max_features;  // default ceil(sqrt(d))
    std::size_t min_leaf = 1;
    std::uint64_t seed = 0;
    unsigned threads = 1;

    std::size_t features_for(std::size_t d) const;
    void validate(std::size_t d) const;
};

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0;
    int left = -1, right = -1;
    int label = 0;     // class index
};

struct DecisionTree {
    std::vector<TreeNode> nodes;
    int predict(const double* row) const;
};

// Grows a CART tree with Gini impurity on the given sample indices (duplicates
// allowed), choosing among a random feature subset at each split.
DecisionTree grow_tree(const MatD& x, const std::vector<int>& y, int classes,
                       const std::vector<std::size_t>& samples, std::size_t max_features,
                       std::size_t min_leaf, Rng& rng);

struct OobResult {
    double accuracy = 0;
    std::size_t scored = 0;     // samples with at least one OOB vote
    std::size_t never_oob = 0;  // excluded from the denominator
};

OobResult forest_oob_accuracy(const MatD& x, const std::vector<int>& y, const ForestConfig& cfg);

struct CvResult {
    double mean = 0;
    double stddev = 0;
    std::vector<double> per_repeat;
};

// Stratified k-fold accuracy, averaged over folds and repeated with fresh folds.
CvResult forest_cv_accuracy(const MatD& x, const std::vector<int>& y, const ForestConfig& cfg,
                            int folds = 10, int repeats = 100);

nlohmann::json to_json(const ForestConfig& cfg, std::size_t d);

} // namespace neuroembed
