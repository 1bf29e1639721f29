#include "neuroembed/skeleton.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <queue>
#include <unordered_map>

namespace neuroembed {

double distance(Point3 a, Point3 b) {
    const Point3 d = a - b;
    return std::sqrt(d.x * d.x + d.y * d.y + d.z * d.z);
}

bool NeuronGraph::contains(int id) const {
    auto it = std::lower_bound(nodes.begin(), nodes.end(), id,
                               [](const SkeletonNode& n, int v) { return n.id < v; });
    return it != nodes.end() && it->id == id;
}

std::size_t NeuronGraph::index_of(int id) const {
    auto it = std::lower_bound(nodes.begin(), nodes.end(), id,
                               [](const SkeletonNode& n, int v) { return n.id < v; });
    if (it == nodes.end() || it->id != id) {
        throw StructuralError("node id " + std::to_string(id) + " not present");
    }
    return static_cast<std::size_t>(it - nodes.begin());
}

std::vector<std::vector<std::size_t>> NeuronGraph::neighbors() const {
    std::vector<std::vector<std::size_t>> adj(nodes.size());
    for (auto [a, b]: edges) {
        const std::size_t ia = index_of(a), ib = index_of(b);
        adj[ia].push_back(ib);
        adj[ib].push_back(ia);
    }
    return adj;
}

bool same_structure(const NeuronGraph& a, const NeuronGraph& b) {
    if (a.size() != b.size() || a.edges != b.edges || a.soma_id != b.soma_id) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const auto& u = a.nodes[i];
        const auto& v = b.nodes[i];
        if (u.id != v.id || u.position != v.position || u.radius != v.radius ||
            u.compartment != v.compartment) {
            return false;
        }
    }
    return true;
}

namespace {

struct DisjointSets {
    std::vector<std::size_t> parent;
    explicit DisjointSets(std::size_t n): parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    std::size_t find(std::size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }
    bool unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        if (b < a) std::swap(a, b);
        parent[b] = a;
        return true;
    }
};

// Component label (0-based, in order of first index) for every node.
std::vector<std::size_t> component_labels(const NeuronGraph& g, std::size_t& count) {
    DisjointSets sets(g.size());
    for (auto [a, b]: g.edges) sets.unite(g.index_of(a), g.index_of(b));
    std::vector<std::size_t> label(g.size());
    std::unordered_map<std::size_t, std::size_t> root_label;
    count = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        auto [it, inserted] = root_label.try_emplace(sets.find(i), count);
        if (inserted) ++count;
        label[i] = it->second;
    }
    return label;
}

} // namespace

NeuronGraph make_graph(std::vector<SkeletonNode> nodes,
                       std::vector<std::pair<int, int>> edges,
                       int soma_id,
                       GraphMeta meta) {
    NeuronGraph g;
    std::sort(nodes.begin(), nodes.end(),
              [](const SkeletonNode& a, const SkeletonNode& b) { return a.id < b.id; });
    for (std::size_t i = 1; i < nodes.size(); ++i) {
        if (nodes[i].id == nodes[i - 1].id) {
            throw StructuralError("duplicate node id " + std::to_string(nodes[i].id));
        }
    }
    g.nodes = std::move(nodes);
    g.soma_id = soma_id;
    g.meta = std::move(meta);
    for (auto& [a, b]: edges) {
        if (a == b) throw StructuralError("self-loop on node " + std::to_string(a));
        if (b < a) std::swap(a, b);
        if (!g.contains(a) || !g.contains(b)) {
            throw StructuralError("edge {" + std::to_string(a) + "," + std::to_string(b) +
                                  "} references a missing node");
        }
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    g.edges = std::move(edges);
    orient_from_soma(g);
    return g;
}

void orient_from_soma(NeuronGraph& g) {
    const auto adj = g.neighbors();
    const std::size_t n = g.size();
    std::vector<bool> seen(n, false);
    for (auto& node: g.nodes) node.parent.reset();

    auto bfs = [&](std::size_t root) {
        std::queue<std::size_t> queue;
        queue.push(root);
        seen[root] = true;
        while (!queue.empty()) {
            const std::size_t u = queue.front();
            queue.pop();
            for (std::size_t v: adj[u]) {
                if (seen[v]) continue;
                seen[v] = true;
                g.nodes[v].parent = g.nodes[u].id;
                queue.push(v);
            }
        }
    };
    if (g.contains(g.soma_id)) bfs(g.index_of(g.soma_id));
    for (std::size_t i = 0; i < n; ++i) {
        if (!seen[i]) bfs(i);
    }
}

void validate(const NeuronGraph& g) {
    for (std::size_t i = 0; i < g.size(); ++i) {
        const auto& node = g.nodes[i];
        if (i > 0 && g.nodes[i - 1].id >= node.id) {
            throw StructuralError("nodes not sorted by unique id at id " + std::to_string(node.id));
        }
        if (!(node.radius >= 0)) {
            throw StructuralError("negative radius at node " + std::to_string(node.id));
        }
        if (node.parent && !g.contains(*node.parent)) {
            throw StructuralError("parent of node " + std::to_string(node.id) + " does not exist");
        }
    }
    for (std::size_t i = 0; i < g.edges.size(); ++i) {
        auto [a, b] = g.edges[i];
        if (a >= b) throw StructuralError("edge not normalized or self-loop");
        if (!g.contains(a) || !g.contains(b)) throw StructuralError("edge references missing node");
        if (i > 0 && g.edges[i - 1] >= g.edges[i]) throw StructuralError("duplicate or unsorted edge");
    }
    int soma_count = 0;
    for (const auto& node: g.nodes) soma_count += node.compartment == Compartment::soma;
    if (soma_count != 1 || !g.contains(g.soma_id) ||
        g.soma().compartment != Compartment::soma) {
        throw StructuralError("graph must contain exactly one soma node designated as soma_id");
    }
}

std::size_t count_components(const NeuronGraph& g) {
    std::size_t count = 0;
    component_labels(g, count);
    return count;
}

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

double parse_number(std::string_view tok, std::size_t line) {
    double value = 0;
    if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (ec != std::errc() || ptr != tok.data() + tok.size() || !std::isfinite(value)) {
        throw ParseError("non-numeric field '" + std::string(tok) + "'", line);
    }
    return value;
}

int parse_integer(std::string_view tok, std::size_t line) {
    const double v = parse_number(tok, line);
    if (v != std::floor(v) || std::abs(v) > std::numeric_limits<int>::max()) {
        throw ParseError("expected an integer, found '" + std::string(tok) + "'", line);
    }
    return static_cast<int>(v);
}

Compartment compartment_from_code(int code, bool& unknown) {
    switch (code) {
    case 1: return Compartment::soma;
    case 2: return Compartment::axon;
    case 3: return Compartment::basal_dendrite;
    case 4: return Compartment::apical_dendrite;
    default: unknown = true; return Compartment::basal_dendrite;
    }
}

int compartment_code(Compartment c) {
    return static_cast<int>(c) + 1;
}

} // namespace

NeuronGraph parse_swc(std::string_view text, const std::string& dataset_tag) {
    struct Record {
        int id, type;
        Point3 p;
        double r;
        int parent;
        std::size_t line;
    };
    std::vector<Record> records;
    std::unordered_map<int, std::size_t> by_id;

    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto eol = text.find('\n');
        std::string_view line = text.substr(0, eol);
        text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
        ++line_no;
        line = trim(line);
        if (line.empty() || line.front() == '#') continue;

        std::vector<std::string_view> fields;
        std::size_t pos = 0;
        while (pos < line.size()) {
            const auto start = line.find_first_not_of(" \t", pos);
            if (start == std::string_view::npos) break;
            const auto end = line.find_first_of(" \t", start);
            fields.push_back(line.substr(start, end - start));
            pos = end == std::string_view::npos ? line.size() : end;
        }
        if (fields.size() != 7) {
            throw ParseError("expected 7 fields, found " + std::to_string(fields.size()), line_no);
        }
        Record rec{parse_integer(fields[0], line_no),
                   parse_integer(fields[1], line_no),
                   {parse_number(fields[2], line_no), parse_number(fields[3], line_no),
                    parse_number(fields[4], line_no)},
                   parse_number(fields[5], line_no),
                   parse_integer(fields[6], line_no),
                   line_no};
        if (rec.r < 0) throw ParseError("negative radius", line_no);
        if (rec.parent == rec.id) throw ParseError("node is its own parent", line_no);
        if (!by_id.emplace(rec.id, records.size()).second) {
            throw ParseError("duplicate id " + std::to_string(rec.id), line_no);
        }
        records.push_back(rec);
    }
    if (records.empty()) throw EmptyInputError("SWC input contains no nodes");

    for (const auto& rec: records) {
        if (rec.parent >= 0 && !by_id.count(rec.parent)) {
            throw ParseError("dangling parent reference " + std::to_string(rec.parent), rec.line);
        }
    }

    GraphMeta meta;
    meta.dataset_tag = dataset_tag;

    // Merge all soma samples into one node (lowest id) at their centroid.
    std::vector<const Record*> somas;
    for (const auto& rec: records) {
        if (rec.type == 1) somas.push_back(&rec);
    }
    if (somas.empty()) throw StructuralError("SWC input has no soma sample (type 1)");
    SkeletonNode soma;
    soma.id = std::numeric_limits<int>::max();
    soma.compartment = Compartment::soma;
    for (const Record* s: somas) {
        soma.id = std::min(soma.id, s->id);
        soma.position = soma.position + s->p;
        soma.radius = std::max(soma.radius, s->r);
    }
    soma.position = (1.0 / static_cast<double>(somas.size())) * soma.position;
    meta.merged_soma_samples = static_cast<int>(somas.size());

    auto mapped = [&](int id) { return records[by_id.at(id)].type == 1 ? soma.id : id; };

    std::vector<SkeletonNode> nodes;
    nodes.reserve(records.size() - somas.size() + 1);
    nodes.push_back(soma);
    std::vector<std::pair<int, int>> edges;
    for (const auto& rec: records) {
        if (rec.type != 1) {
            SkeletonNode node;
            node.id = rec.id;
            node.position = rec.p;
            node.radius = rec.r;
            node.compartment = compartment_from_code(rec.type, meta.unknown_compartment);
            nodes.push_back(node);
        }
        if (rec.parent >= 0) {
            const int a = mapped(rec.id), b = mapped(rec.parent);
            if (a != b) edges.emplace_back(a, b);
        }
    }
    return make_graph(std::move(nodes), std::move(edges), soma.id, std::move(meta));
}

std::string to_swc(const NeuronGraph& g) {
    if (g.edges.size() + count_components(g) != g.size()) {
        throw StructuralError("graph contains a cycle and cannot be written as SWC");
    }
    NeuronGraph oriented = g;
    orient_from_soma(oriented);
    std::string out = "# id type x y z radius parent\n";
    char buf[256];
    for (const auto& node: oriented.nodes) {
        std::snprintf(buf, sizeof buf, "%d %d %.17g %.17g %.17g %.17g %d\n", node.id,
                      compartment_code(node.compartment), node.position.x, node.position.y,
                      node.position.z, node.radius, node.parent ? *node.parent : -1);
        out += buf;
    }
    return out;
}

NeuronGraph connect_components(NeuronGraph g) {
    std::size_t count = 0;
    const auto label = component_labels(g, count);
    if (count <= 1) return g;

    // Dense Prim over the complete graph with zero-weight intra-component edges:
    // the cross-component edges it selects are exactly those chosen by repeatedly
    // joining the globally closest pair of different components.
    const std::size_t n = g.size();
    std::vector<std::vector<std::size_t>> members(count);
    for (std::size_t i = 0; i < n; ++i) members[label[i]].push_back(i);

    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> key(n, inf);
    std::vector<std::size_t> link(n, 0);
    std::vector<bool> in_tree(n, false);

    auto absorb = [&](std::size_t comp) {
        for (std::size_t u: members[comp]) in_tree[u] = true;
        for (std::size_t u: members[comp]) {
            for (std::size_t v = 0; v < n; ++v) {
                if (in_tree[v]) continue;
                const double d = distance(g.nodes[u].position, g.nodes[v].position);
                if (d < key[v]) {
                    key[v] = d;
                    link[v] = u;
                }
            }
        }
    };

    absorb(label[g.contains(g.soma_id) ? g.index_of(g.soma_id) : 0]);
    for (std::size_t added = 1; added < count; ++added) {
        std::size_t best = n;
        for (std::size_t v = 0; v < n; ++v) {
            if (!in_tree[v] && (best == n || key[v] < key[best])) best = v;
        }
        g.edges.emplace_back(g.nodes[link[best]].id, g.nodes[best].id);
        absorb(label[best]);
    }
    return make_graph(std::move(g.nodes), std::move(g.edges), g.soma_id, std::move(g.meta));
}

namespace {

// Set of indices supporting O(1) insert, erase and uniform draws.
class IndexPool {
public:
    explicit IndexPool(std::size_t capacity): slot_(capacity, npos) {}

    void insert(std::size_t v) {
        if (slot_[v] != npos) return;
        slot_[v] = items_.size();
        items_.push_back(v);
    }
    void erase(std::size_t v) {
        if (slot_[v] == npos) return;
        const std::size_t last = items_.back();
        items_[slot_[v]] = last;
        slot_[last] = slot_[v];
        items_.pop_back();
        slot_[v] = npos;
    }
    bool empty() const { return items_.empty(); }
    std::size_t draw(Rng& rng) const { return items_[uniform_index(rng, items_.size())]; }

private:
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
    std::vector<std::size_t> slot_;
    std::vector<std::size_t> items_;
};

void erase_value(std::vector<std::size_t>& v, std::size_t x) {
    v.erase(std::find(v.begin(), v.end(), x));
}

} // namespace

NeuronGraph subsample(const NeuronGraph& g, std::size_t n, Rng& rng) {
    if (n < 2) throw ArgumentError("subsample: target node count must be at least 2");
    if (g.size() <= n) return g;

    auto adj = g.neighbors();
    const std::size_t total = g.size();
    const std::size_t soma = g.index_of(g.soma_id);
    std::vector<bool> alive(total, true);
    IndexPool chain(total), leaves(total);

    auto classify = [&](std::size_t v) {
        chain.erase(v);
        leaves.erase(v);
        if (!alive[v] || v == soma) return;
        if (adj[v].size() == 2) chain.insert(v);
        else if (adj[v].size() == 1) leaves.insert(v);
    };
    for (std::size_t v = 0; v < total; ++v) classify(v);

    for (std::size_t remaining = total; remaining > n; --remaining) {
        if (!chain.empty()) {
            const std::size_t v = chain.draw(rng);
            const std::size_t a = adj[v][0], b = adj[v][1];
            erase_value(adj[a], v);
            erase_value(adj[b], v);
            if (std::find(adj[a].begin(), adj[a].end(), b) == adj[a].end()) {
                adj[a].push_back(b);
                adj[b].push_back(a);
            }
            adj[v].clear();
            alive[v] = false;
            classify(v);
            classify(a);
            classify(b);
        }
        else if (!leaves.empty()) {
            const std::size_t v = leaves.draw(rng);
            const std::size_t a = adj[v][0];
            erase_value(adj[a], v);
            adj[v].clear();
            alive[v] = false;
            classify(v);
            classify(a);
        }
        else {
            throw StructuralError("subsample: no removable degree-2 node or leaf remains");
        }
    }

    std::vector<SkeletonNode> nodes;
    std::vector<std::pair<int, int>> edges;
    nodes.reserve(n);
    for (std::size_t v = 0; v < total; ++v) {
        if (!alive[v]) continue;
        nodes.push_back(g.nodes[v]);
        for (std::size_t u: adj[v]) {
            if (v < u) edges.emplace_back(g.nodes[v].id, g.nodes[u].id);
        }
    }
    return make_graph(std::move(nodes), std::move(edges), g.soma_id, g.meta);
}

NeuronGraph normalize_soma(NeuronGraph g, SomaMode mode) {
    if (!g.contains(g.soma_id) || g.soma().compartment != Compartment::soma) {
        throw StructuralError("normalize_soma: graph has no soma node");
    }
    Point3 shift = g.soma().position;
    if (mode == SomaMode::relative_depth) shift.y = 0;
    for (auto& node: g.nodes) node.position = node.position - shift;
    return g;
}

NeuronGraph remove_axon(const NeuronGraph& g) {
    std::vector<SkeletonNode> nodes;
    for (const auto& node: g.nodes) {
        if (node.compartment != Compartment::axon) nodes.push_back(node);
    }
    if (nodes.size() == g.size()) return g;
    std::vector<std::pair<int, int>> edges;
    for (auto [a, b]: g.edges) {
        if (g.node(a).compartment != Compartment::axon && g.node(b).compartment != Compartment::axon) {
            edges.emplace_back(a, b);
        }
    }
    NeuronGraph out = make_graph(std::move(nodes), std::move(edges), g.soma_id, g.meta);
    if (out.size() > 0 && count_components(out) > 1) out = connect_components(std::move(out));
    return out;
}

std::string to_string(Compartment c) {
    switch (c) {
    case Compartment::soma: return "soma";
    case Compartment::axon: return "axon";
    case Compartment::basal_dendrite: return "basal_dendrite";
    case Compartment::apical_dendrite: return "apical_dendrite";
    }
    return "unknown";
}

std::string to_string(SomaMode m) {
    return m == SomaMode::relative_depth ? "relative_depth" : "soma_origin";
}

SomaMode soma_mode_from_string(const std::string& s) {
    if (s == "relative_depth") return SomaMode::relative_depth;
    if (s == "soma_origin") return SomaMode::soma_origin;
    throw ArgumentError("unknown soma mode '" + s + "' (expected relative_depth or soma_origin)");
}

} // namespace neuroembed
