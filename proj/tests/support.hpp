#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "neuroembed/skeleton.hpp"

namespace neuroembed::testing {

// Random tree with node 1 as soma; node i attaches to a uniformly chosen earlier node.
NeuronGraph random_tree(std::size_t n, Rng& rng, double spread = 50.0);

// Path soma(1) - 2 - ... - n along +y with unit spacing.
NeuronGraph path_graph(std::size_t n);

// Soma with `leaves` children.
NeuronGraph star_graph(std::size_t leaves);

// Graph relabeled by `perm`: node with dense index i receives id perm[i] + 1.
NeuronGraph relabel(const NeuronGraph& g, const std::vector<std::size_t>& perm);

// Minimum gap between consecutive eigenvalues of the normalized Laplacian.
double spectral_gap(const NeuronGraph& g);

// Fresh empty directory under the system temp dir.
std::filesystem::path scratch_dir(const std::string& name);

} // namespace neuroembed::testing
