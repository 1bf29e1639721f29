#include "neuroembed/augment.hpp"

#include <cmath>
#include <numbers>
#include <queue>

namespace neuroembed {

void AugmentConfig::validate() const {
    if (n_keep < 2) throw ArgumentError("augment.n_keep must be at least 2");
    if (!(sigma_jitter >= 0)) throw ArgumentError("augment.sigma_jitter must be non-negative");
    if (!(sigma_cum >= 0)) throw ArgumentError("augment.sigma_cum must be non-negative");
    if (!(sigma_soma >= 0)) throw ArgumentError("augment.sigma_soma must be non-negative");
    if (min_nodes && *min_nodes < 1) throw ArgumentError("augment.min_nodes must be positive");
}

AugmentConfig AugmentConfig::aba() {
    return AugmentConfig{};
}

AugmentConfig AugmentConfig::bbp() {
    AugmentConfig cfg;
    cfg.n_keep = 100;
    cfg.sigma_jitter = 0.1;
    cfg.n_drop_branches = 5;
    cfg.n_cum_branches = 0;
    cfg.sigma_cum = 0.0;
    cfg.sigma_soma = 1.0;
    return cfg;
}

NeuronGraph rotate_y(NeuronGraph g, double theta) {
    if (theta == 0.0) return g;
    const double c = std::cos(theta), s = std::sin(theta);
    for (auto& node: g.nodes) {
        const Point3 p = node.position;
        node.position = {p.x * c + p.z * s, p.y, -p.x * s + p.z * c};
    }
    return g;
}

NeuronGraph jitter_nodes(NeuronGraph g, double sigma, Rng& rng) {
    if (sigma == 0.0) return g;
    for (auto& node: g.nodes) {
        node.position.x += normal(rng, sigma);
        node.position.y += normal(rng, sigma);
        node.position.z += normal(rng, sigma);
    }
    return g;
}

namespace {

// Rooted view of a graph via its soma-oriented parent links.
struct RootedTree {
    std::vector<std::vector<std::size_t>> children;
    std::vector<std::size_t> order;  // breadth-first from the soma
    std::vector<std::size_t> subtree_size;
};

RootedTree rooted_tree(const NeuronGraph& g) {
    const std::size_t n = g.size();
    RootedTree t;
    t.children.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (g.nodes[i].parent) t.children[g.index_of(*g.nodes[i].parent)].push_back(i);
    }
    std::vector<std::size_t> roots{g.index_of(g.soma_id)};
    for (std::size_t i = 0; i < n; ++i) {
        if (!g.nodes[i].parent && g.nodes[i].id != g.soma_id) roots.push_back(i);
    }
    for (std::size_t r: roots) {
        std::size_t head = t.order.size();
        t.order.push_back(r);
        while (head < t.order.size()) {
            const std::size_t u = t.order[head++];
            for (std::size_t c: t.children[u]) t.order.push_back(c);
        }
    }
    t.subtree_size.assign(n, 1);
    for (auto it = t.order.rbegin(); it != t.order.rend(); ++it) {
        for (std::size_t c: t.children[*it]) t.subtree_size[*it] += t.subtree_size[c];
    }
    return t;
}

} // namespace

NeuronGraph delete_branches(const NeuronGraph& g, std::size_t n, std::size_t min_nodes, Rng& rng) {
    NeuronGraph out = g;
    for (std::size_t draw = 0; draw < n; ++draw) {
        const auto tree = rooted_tree(out);
        const std::size_t size = out.size();
        const std::size_t soma = out.index_of(out.soma_id);
        std::vector<std::size_t> eligible;
        for (std::size_t i = 0; i < size; ++i) {
            if (i != soma && 4 * tree.subtree_size[i] <= size) eligible.push_back(i);
        }
        if (eligible.empty()) continue;
        const std::size_t root = eligible[uniform_index(rng, eligible.size())];
        if (size - tree.subtree_size[root] < min_nodes) continue;

        std::vector<bool> doomed(size, false);
        std::vector<std::size_t> stack{root};
        while (!stack.empty()) {
            const std::size_t u = stack.back();
            stack.pop_back();
            doomed[u] = true;
            for (std::size_t c: tree.children[u]) stack.push_back(c);
        }
        std::vector<SkeletonNode> nodes;
        nodes.reserve(size - tree.subtree_size[root]);
        for (std::size_t i = 0; i < size; ++i) {
            if (!doomed[i]) nodes.push_back(out.nodes[i]);
        }
        std::vector<std::pair<int, int>> edges;
        for (auto [a, b]: out.edges) {
            if (!doomed[out.index_of(a)] && !doomed[out.index_of(b)]) edges.emplace_back(a, b);
        }
        out = make_graph(std::move(nodes), std::move(edges), out.soma_id, std::move(out.meta));
    }
    return out;
}

NeuronGraph cumulative_jitter(NeuronGraph g, std::size_t n, double sigma, Rng& rng) {
    if (n == 0 || sigma == 0.0 || g.size() < 2) return g;
    const auto tree = rooted_tree(g);
    std::vector<std::size_t> branch_points;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (tree.children[i].size() >= 2) branch_points.push_back(i);
    }
    if (branch_points.empty()) {
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (!tree.children[i].empty()) branch_points.push_back(i);
        }
    }
    if (branch_points.empty()) return g;

    for (std::size_t draw = 0; draw < n; ++draw) {
        const std::size_t start = branch_points[uniform_index(rng, branch_points.size())];
        std::vector<std::size_t> tips;
        std::vector<std::size_t> stack{start};
        while (!stack.empty()) {
            const std::size_t u = stack.back();
            stack.pop_back();
            if (tree.children[u].empty()) tips.push_back(u);
            for (std::size_t c: tree.children[u]) stack.push_back(c);
        }
        std::size_t tip = tips[uniform_index(rng, tips.size())];
        std::vector<std::size_t> path;
        for (std::size_t u = tip; u != start; u = g.index_of(*g.nodes[u].parent)) path.push_back(u);

        Point3 offset;
        for (auto it = path.rbegin(); it != path.rend(); ++it) {
            offset = offset + Point3{normal(rng, sigma), normal(rng, sigma), normal(rng, sigma)};
            g.nodes[*it].position = g.nodes[*it].position + offset;
        }
    }
    return g;
}

NeuronGraph translate_soma_depth(NeuronGraph g, double sigma, Rng& rng) {
    if (sigma == 0.0) return g;
    const double shift = normal(rng, sigma);
    for (auto& node: g.nodes) node.position.y += shift;
    return g;
}

NeuronGraph make_view(const NeuronGraph& g, const AugmentConfig& cfg, Rng& rng) {
    if (g.size() < cfg.n_keep) {
        throw StructuralError("graph '" + g.meta.source + "' has " + std::to_string(g.size()) +
                              " nodes, fewer than the view size " + std::to_string(cfg.n_keep));
    }
    NeuronGraph v = delete_branches(g, cfg.n_drop_branches, cfg.effective_min_nodes(), rng);
    v = subsample(v, cfg.n_keep, rng);
    const double theta = cfg.fixed_rotation ? *cfg.fixed_rotation
                                            : 2 * std::numbers::pi * uniform01(rng);
    v = rotate_y(std::move(v), theta);
    v = jitter_nodes(std::move(v), cfg.sigma_jitter, rng);
    v = cumulative_jitter(std::move(v), cfg.n_cum_branches, cfg.sigma_cum, rng);
    return translate_soma_depth(std::move(v), cfg.sigma_soma, rng);
}

std::pair<NeuronGraph, NeuronGraph> make_two_views(const NeuronGraph& g, const AugmentConfig& cfg,
                                                   Rng& rng) {
    NeuronGraph first = make_view(g, cfg, rng);
    NeuronGraph second = make_view(g, cfg, rng);
    return {std::move(first), std::move(second)};
}

} // namespace neuroembed
