#pragma once

#include <optional>
#include <utility>

#include "neuroembed/skeleton.hpp"

namespace neuroembed {

struct AugmentConfig {
    std::size_t n_keep = 200;          // view node count
    double sigma_jitter = 1.0;         // per-node Gaussian jitter, micrometers
    std::size_t n_drop_branches = 10;  // subtree deletions per view
    std::size_t n_cum_branches = 5;    // paths receiving cumulative jitter
    double sigma_cum = 0.5;
    double sigma_soma = 10.0;          // rigid shift along the depth (y) axis
    // Floor for branch deletion; defaults to n_keep so views stay subsampable.
    std::optional<std::size_t> min_nodes;
    // When set, every view is rotated by exactly this angle instead of a random one.
    std::optional<double> fixed_rotation;

    std::size_t effective_min_nodes() const { return min_nodes.value_or(n_keep); }
    void validate() const;

    static AugmentConfig aba();
    static AugmentConfig bbp();
};

// (x, y, z) -> (x cos t + z sin t, y, -x sin t + z cos t)
NeuronGraph rotate_y(NeuronGraph g, double theta);

NeuronGraph jitter_nodes(NeuronGraph g, double sigma, Rng& rng);

// Deletes up to n random soma-distal subtrees, each at most a quarter of the
// current graph. Draws that would leave fewer than min_nodes nodes are skipped.
NeuronGraph delete_branches(const NeuronGraph& g, std::size_t n, std::size_t min_nodes, Rng& rng);

// For n random branch points, walks to a random descendant tip and displaces the
// t-th node of the walk by the running sum of t Gaussian steps.
NeuronGraph cumulative_jitter(NeuronGraph g, std::size_t n, double sigma, Rng& rng);

NeuronGraph translate_soma_depth(NeuronGraph g, double sigma, Rng& rng);

// One stochastic view: delete_branches -> subsample(n_keep) -> rotate_y ->
// jitter_nodes -> cumulative_jitter -> translate_soma_depth.
NeuronGraph make_view(const NeuronGraph& g, const AugmentConfig& cfg, Rng& rng);

// Two independent views drawn from the same distribution.
std::pair<NeuronGraph, NeuronGraph> make_two_views(const NeuronGraph& g, const AugmentConfig& cfg,
                                                   Rng& rng);

} // namespace neuroembed
