#include "neuroembed/features.hpp"

namespace neuroembed {

template <typename T>
void GraphBatch<T>::validate(std::size_t pe_dim) const {
    const std::size_t n = nodes();
    for (std::size_t i = 0; i < graphs.size(); ++i) {
        const auto& g = graphs[i];
        const auto rows = static_cast<Eigen::Index>(n);
        if (g.features.rows() != rows || g.features.cols() != node_feature_dim ||
            g.adjacency.rows() != rows || g.adjacency.cols() != rows || g.pe.rows() != rows ||
            g.pe.cols() != static_cast<Eigen::Index>(pe_dim)) {
            throw ArgumentError("graph batch: graph " + std::to_string(i) +
                                " does not match the batch shape");
        }
    }
}

template struct GraphBatch<float>;
template struct GraphBatch<double>;

MatD node_features(const NeuronGraph& g, const FeatureConfig& cfg) {
    MatD f = MatD::Zero(static_cast<Eigen::Index>(g.size()), node_feature_dim);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const auto& node = g.nodes[i];
        const auto r = static_cast<Eigen::Index>(i);
        f(r, 0) = node.position.x * cfg.coord_scale;
        f(r, 1) = node.position.y * cfg.coord_scale;
        f(r, 2) = node.position.z * cfg.coord_scale;
        f(r, 3) = node.radius * cfg.radius_scale;
        f(r, 4 + static_cast<int>(node.compartment)) = 1.0;
    }
    return f;
}

GraphInput<double> make_graph_input(const NeuronGraph& g, const FeatureConfig& features,
                                    std::size_t pe_dim, const PeOptions& pe, Rng* rng) {
    GraphInput<double> in;
    in.features = node_features(g, features);
    in.adjacency = adjacency(g).data;
    in.pe = positional_encoding(g, pe_dim, pe, rng).data;
    return in;
}

} // namespace neuroembed
