#pragma once

#include <vector>

#include "neuroembed/spectral.hpp"

namespace neuroembed {

// Node feature row: [x, y, z] * coord_scale, radius * radius_scale, one-hot
// compartment (soma, axon, basal, apical).
constexpr int node_feature_dim = 3 + 1 + compartment_count;

struct FeatureConfig {
    double coord_scale = 0.01;
    double radius_scale = 1.0;
};

// Tensorized view of one graph; rows follow sorted node ids.
template <typename T>
struct GraphInput {
    Mat<T> features;   // n x 8
    Mat<T> adjacency;  // n x n
    Mat<T> pe;         // n x k

    std::size_t nodes() const { return static_cast<std::size_t>(features.rows()); }

    template <typename U>
    GraphInput<U> cast() const {
        return {features.template cast<U>(), adjacency.template cast<U>(), pe.template cast<U>()};
    }
};

// A batch shares one node count across graphs.
template <typename T>
struct GraphBatch {
    std::vector<GraphInput<T>> graphs;

    std::size_t size() const { return graphs.size(); }
    std::size_t nodes() const { return graphs.empty() ? 0 : graphs.front().nodes(); }
    // Throws ArgumentError on inconsistent shapes.
    void validate(std::size_t pe_dim) const;
};

MatD node_features(const NeuronGraph& g, const FeatureConfig& cfg);

GraphInput<double> make_graph_input(const NeuronGraph& g, const FeatureConfig& features,
                                    std::size_t pe_dim, const PeOptions& pe, Rng* rng = nullptr);

} // namespace neuroembed
