#include "support.hpp"

#include <algorithm>
#include <limits>
#include <unistd.h>

#include "neuroembed/spectral.hpp"

namespace neuroembed::testing {

NeuronGraph random_tree(std::size_t n, Rng& rng, double spread) {
    std::vector<SkeletonNode> nodes;
    std::vector<std::pair<int, int>> edges;
    for (std::size_t i = 0; i < n; ++i) {
        SkeletonNode s;
        s.id = static_cast<int>(i) + 1;
        s.position = {normal(rng, spread), normal(rng, spread), normal(rng, spread)};
        s.radius = 0.5 + uniform01(rng);
        s.compartment = i == 0 ? Compartment::soma : static_cast<Compartment>(1 + uniform_index(rng, 3));
        nodes.push_back(s);
        if (i > 0) edges.emplace_back(static_cast<int>(uniform_index(rng, i)) + 1, static_cast<int>(i) + 1);
    }
    return make_graph(std::move(nodes), std::move(edges), 1);
}

NeuronGraph path_graph(std::size_t n) {
    std::vector<SkeletonNode> nodes;
    std::vector<std::pair<int, int>> edges;
    for (std::size_t i = 0; i < n; ++i) {
        SkeletonNode s;
        s.id = static_cast<int>(i) + 1;
        s.position = {0, static_cast<double>(i), 0};
        s.radius = 1;
        s.compartment = i == 0 ? Compartment::soma : Compartment::basal_dendrite;
        nodes.push_back(s);
        if (i > 0) edges.emplace_back(static_cast<int>(i), static_cast<int>(i) + 1);
    }
    return make_graph(std::move(nodes), std::move(edges), 1);
}

NeuronGraph star_graph(std::size_t leaves) {
    std::vector<SkeletonNode> nodes;
    std::vector<std::pair<int, int>> edges;
    SkeletonNode soma;
    soma.id = 1;
    soma.radius = 5;
    soma.compartment = Compartment::soma;
    nodes.push_back(soma);
    for (std::size_t i = 0; i < leaves; ++i) {
        SkeletonNode s;
        s.id = static_cast<int>(i) + 2;
        s.position = {static_cast<double>(i) + 1, 0, 0};
        s.radius = 1;
        nodes.push_back(s);
        edges.emplace_back(1, s.id);
    }
    return make_graph(std::move(nodes), std::move(edges), 1);
}

NeuronGraph relabel(const NeuronGraph& g, const std::vector<std::size_t>& perm) {
    std::vector<SkeletonNode> nodes;
    std::vector<int> new_id(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) new_id[i] = static_cast<int>(perm[i]) + 1;
    for (std::size_t i = 0; i < g.size(); ++i) {
        SkeletonNode s = g.nodes[i];
        s.id = new_id[i];
        s.parent.reset();
        nodes.push_back(s);
    }
    std::sort(nodes.begin(), nodes.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    std::vector<std::pair<int, int>> edges;
    for (auto [a, b]: g.edges) edges.emplace_back(new_id[g.index_of(a)], new_id[g.index_of(b)]);
    NeuronGraph out = make_graph(std::move(nodes), std::move(edges), new_id[g.index_of(g.soma_id)]);
    out.meta = g.meta;
    return out;
}

double spectral_gap(const NeuronGraph& g) {
    const auto eig = eig_sym(normalized_laplacian(adjacency(g)));
    double gap = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 1; i < eig.values.size(); ++i) gap = std::min(gap, eig.values[i] - eig.values[i - 1]);
    return gap;
}

std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() /
                     ("neuroembed_" + name + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace neuroembed::testing
