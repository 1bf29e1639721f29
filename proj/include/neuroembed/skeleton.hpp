#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "neuroembed/common.hpp"

namespace neuroembed {

enum class Compartment : std::uint8_t {
    soma = 0,
    axon = 1,
    basal_dendrite = 2,
    apical_dendrite = 3,
};

constexpr int compartment_count = 4;

struct Point3 {
    double x = 0, y = 0, z = 0;

    friend Point3 operator+(Point3 a, Point3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
    friend Point3 operator-(Point3 a, Point3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
    friend Point3 operator*(double s, Point3 a) { return {s * a.x, s * a.y, s * a.z}; }
    friend bool operator==(const Point3&, const Point3&) = default;
};

double distance(Point3 a, Point3 b);

struct SkeletonNode {
    int id = 0;
    Point3 position;
    double radius = 0;
    Compartment compartment = Compartment::basal_dendrite;
    // Neighbor on the path towards the soma; empty for component roots.
    std::optional<int> parent;
};

struct GraphMeta {
    std::string source;
    std::string dataset_tag;
    bool unknown_compartment = false;
    int merged_soma_samples = 0;
};

// Spatially embedded undirected graph. Nodes are kept sorted by id; edges are
// normalized to (lo, hi) and sorted. Parents are re-derived from the soma after
// every topology change.
struct NeuronGraph {
    std::vector<SkeletonNode> nodes;
    std::vector<std::pair<int, int>> edges;
    int soma_id = 0;
    GraphMeta meta;

    std::size_t size() const { return nodes.size(); }
    bool contains(int id) const;
    // Dense index of an id (position in `nodes`); throws StructuralError if absent.
    std::size_t index_of(int id) const;
    const SkeletonNode& node(int id) const { return nodes[index_of(id)]; }
    const SkeletonNode& soma() const { return node(soma_id); }
    // Adjacency lists over dense indices.
    std::vector<std::vector<std::size_t>> neighbors() const;
};

// Structural equality: ids, positions, radii, compartments, edges, soma.
bool same_structure(const NeuronGraph& a, const NeuronGraph& b);

// Assembles a graph from loose parts: sorts nodes, normalizes and dedups edges,
// orients parents from the soma. Rejects self-loops and dangling edge ends.
NeuronGraph make_graph(std::vector<SkeletonNode> nodes,
                       std::vector<std::pair<int, int>> edges,
                       int soma_id,
                       GraphMeta meta = {});

void orient_from_soma(NeuronGraph& g);

// Throws StructuralError describing the first violated invariant.
void validate(const NeuronGraph& g);

std::size_t count_components(const NeuronGraph& g);

// SWC text: `id type x y z radius parent`, '#' comments. Multiple soma samples
// are merged into one node at their centroid.
NeuronGraph parse_swc(std::string_view text, const std::string& dataset_tag);

// Writes SWC with parents oriented from the soma; coordinates use 17 significant
// digits so parse(to_swc(g)) reproduces g exactly. Requires a forest.
std::string to_swc(const NeuronGraph& g);

// Joins components by repeatedly adding the edge between the globally closest
// pair of nodes lying in different components.
NeuronGraph connect_components(NeuronGraph g);

// Reduces to n nodes by contracting random degree-2 non-soma nodes, falling back
// to deleting random non-soma leaves.
NeuronGraph subsample(const NeuronGraph& g, std::size_t n, Rng& rng);

enum class SomaMode { relative_depth, soma_origin };

// relative_depth: soma moved to (0, y_soma, 0); soma_origin: soma at the origin.
NeuronGraph normalize_soma(NeuronGraph g, SomaMode mode);

NeuronGraph remove_axon(const NeuronGraph& g);

std::string to_string(Compartment c);
std::string to_string(SomaMode m);
SomaMode soma_mode_from_string(const std::string& s);

} // namespace neuroembed
