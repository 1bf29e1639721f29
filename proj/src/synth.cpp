#include "neuroembed/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "neuroembed/parallel.hpp"

namespace neuroembed {

namespace {

constexpr int max_path_segments = 150;
constexpr int max_attempts = 50;

Point3 normalized(Point3 p) {
    const double n = std::sqrt(p.x * p.x + p.y * p.y + p.z * p.z);
    if (n < 1e-12) return {0, 1, 0};
    return (1.0 / n) * p;
}

Point3 gaussian3(Rng& rng, double s) { return {normal(rng, s), normal(rng, s), normal(rng, s)}; }

struct Tip {
    int node;
    Point3 dir;
    Compartment compartment;
    double radius;
    int depth;
};

void require(bool ok, const std::string& field, const std::string& rule) {
    if (!ok) throw ArgumentError("synth class spec: field '" + field + "' " + rule);
}

NeuronGraph grow(const SynthClassSpec& spec, Rng& rng, std::size_t target) {
    std::vector<SkeletonNode> nodes;
    std::vector<std::pair<int, int>> edges;
    SkeletonNode soma;
    soma.id = 1;
    soma.position = {0, spec.depth_mean + normal(rng, spec.depth_std), 0};
    soma.radius = spec.soma_radius;
    soma.compartment = Compartment::soma;
    nodes.push_back(soma);
    const double soma_y = soma.position.y;

    std::vector<Tip> tips;
    if (spec.apical_reach > 0) tips.push_back({1, normalized({normal(rng, 0.1), 1, normal(rng, 0.1)}),
                                               Compartment::apical_dendrite, 2.0, 0});
    for (std::size_t s = 0; s < spec.basal_stems; ++s) {
        const double phi = 2 * std::numbers::pi * (static_cast<double>(s) + uniform01(rng)) /
                           static_cast<double>(spec.basal_stems);
        const double down = (1.0 - spec.lateral_bias) * (0.2 + 0.8 * uniform01(rng));
        const Compartment c = uniform01(rng) < spec.axon_prob ? Compartment::axon : Compartment::basal_dendrite;
        tips.push_back({1, normalized({std::cos(phi), -down, std::sin(phi)}), c, 1.0, 0});
    }

    while (nodes.size() < target && !tips.empty()) {
        std::vector<double> weight(tips.size());
        double total = 0;
        for (std::size_t i = 0; i < tips.size(); ++i) {
            const bool apical = tips[i].compartment == Compartment::apical_dendrite;
            const bool in_tuft = apical && nodes[static_cast<std::size_t>(tips[i].node - 1)].position.y - soma_y >
                                               spec.apical_reach;
            weight[i] = apical && !in_tuft ? 3.0 : 1.0;
            total += weight[i];
        }
        double r = uniform01(rng) * total;
        std::size_t pick = tips.size() - 1;
        for (std::size_t i = 0; i < tips.size(); ++i) {
            r -= weight[i];
            if (r < 0) {
                pick = i;
                break;
            }
        }
        Tip tip = tips[pick];
        const Point3 from = nodes[static_cast<std::size_t>(tip.node - 1)].position;
        const bool apical = tip.compartment == Compartment::apical_dendrite;
        const double height = from.y - soma_y;
        const bool in_tuft = apical && height > spec.apical_reach;

        if (apical && in_tuft && !spec.tuft) {
            tips.erase(tips.begin() + static_cast<std::ptrdiff_t>(pick));
            continue;
        }

        Point3 bias{0, 0, 0};
        if (apical) bias = in_tuft ? Point3{0, 0.15, 0} : Point3{0, 0.6, 0};
        Point3 dir = normalized(tip.dir + gaussian3(rng, spec.direction_jitter) + bias);
        if (!apical) dir.y *= (1.0 - 0.7 * spec.lateral_bias);
        if (in_tuft) dir.y *= 0.5;
        dir = normalized(dir);
        const double len = spec.segment_length * std::max(0.2, 1.0 + spec.length_jitter * normal(rng, 1.0));

        SkeletonNode n;
        n.id = static_cast<int>(nodes.size()) + 1;
        n.position = from + len * dir;
        n.radius = std::max(0.2, tip.radius * 0.97);
        n.compartment = tip.compartment;
        n.parent = tip.node;
        nodes.push_back(n);
        edges.emplace_back(tip.node, n.id);

        tip.node = n.id;
        tip.dir = dir;
        tip.radius = n.radius;
        tip.depth += 1;
        const double fork = in_tuft ? std::min(1.0, 4.0 * spec.branch_prob) : spec.branch_prob;
        const bool forked = uniform01(rng) < fork;
        if (tip.depth >= max_path_segments) tips.erase(tips.begin() + static_cast<std::ptrdiff_t>(pick));
        else tips[pick] = tip;
        if (forked && tip.depth < max_path_segments) {
            Point3 d2 = normalized(dir + gaussian3(rng, 0.8));
            if (in_tuft) d2.y = std::abs(d2.y) * 0.3;
            tips.push_back({n.id, normalized(d2), tip.compartment, tip.radius * 0.8, tip.depth});
        }
    }
    return make_graph(std::move(nodes), std::move(edges), 1);
}

} // namespace

void SynthClassSpec::validate() const {
    require(branch_prob >= 0 && branch_prob <= 1, "branch_prob", "must lie in [0, 1]");
    require(axon_prob >= 0 && axon_prob <= 1, "axon_prob", "must lie in [0, 1]");
    require(lateral_bias >= 0 && lateral_bias <= 1, "lateral_bias", "must lie in [0, 1]");
    require(segment_length > 0, "segment_length", "must be > 0");
    require(length_jitter >= 0, "length_jitter", "must be >= 0");
    require(direction_jitter >= 0, "direction_jitter", "must be >= 0");
    require(depth_std >= 0, "depth_std", "must be >= 0");
    require(apical_reach >= 0, "apical_reach", "must be >= 0");
    require(soma_radius > 0, "soma_radius", "must be > 0");
    require(min_nodes >= 20, "min_nodes", "must be >= 20");
    require(max_nodes >= min_nodes, "max_nodes", "must be >= min_nodes");
    require(basal_stems >= 1 || apical_reach > 0, "basal_stems", "must be >= 1 when there is no apical dendrite");
    require(std::isfinite(depth_mean), "depth_mean", "must be finite");
}

nlohmann::json to_json(const SynthClassSpec& s) {
    return {{"id", s.id},
            {"name", s.name},
            {"branch_prob", s.branch_prob},
            {"segment_length", s.segment_length},
            {"length_jitter", s.length_jitter},
            {"direction_jitter", s.direction_jitter},
            {"depth_mean", s.depth_mean},
            {"depth_std", s.depth_std},
            {"tuft", s.tuft},
            {"apical_reach", s.apical_reach},
            {"lateral_bias", s.lateral_bias},
            {"basal_stems", s.basal_stems},
            {"axon_prob", s.axon_prob},
            {"min_nodes", s.min_nodes},
            {"max_nodes", s.max_nodes},
            {"soma_radius", s.soma_radius}};
}

SynthClassSpec synth_class_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ArgumentError("synth class spec: expected a JSON object");
    SynthClassSpec s;
    auto field = [&](const char* name, auto& out) {
        if (!j.contains(name)) return;
        try {
            j.at(name).get_to(out);
        }
        catch (const nlohmann::json::exception&) {
            throw ArgumentError(std::string("synth class spec: field '") + name + "' has the wrong type");
        }
    };
    field("id", s.id);
    field("name", s.name);
    field("branch_prob", s.branch_prob);
    field("segment_length", s.segment_length);
    field("length_jitter", s.length_jitter);
    field("direction_jitter", s.direction_jitter);
    field("depth_mean", s.depth_mean);
    field("depth_std", s.depth_std);
    field("tuft", s.tuft);
    field("apical_reach", s.apical_reach);
    field("lateral_bias", s.lateral_bias);
    field("basal_stems", s.basal_stems);
    field("axon_prob", s.axon_prob);
    field("min_nodes", s.min_nodes);
    field("max_nodes", s.max_nodes);
    field("soma_radius", s.soma_radius);
    for (const auto& [key, value]: j.items()) {
        if (!to_json(SynthClassSpec{}).contains(key)) {
            throw ArgumentError("synth class spec: unknown field '" + key + "'");
        }
    }
    s.validate();
    return s;
}

std::vector<SynthClassSpec> synth_specs_from_json(const nlohmann::json& j) {
    const nlohmann::json* list = &j;
    if (j.is_object()) {
        if (!j.contains("classes")) throw ArgumentError("synth spec file: missing 'classes' array");
        list = &j.at("classes");
    }
    if (!list->is_array() || list->empty()) throw ArgumentError("synth spec file: 'classes' must be a non-empty array");
    std::vector<SynthClassSpec> out;
    for (const auto& c: *list) out.push_back(synth_class_from_json(c));
    return out;
}

std::vector<SynthClassSpec> default_synth_classes() {
    SynthClassSpec deep;
    deep.id = 0;
    deep.name = "tufted-deep";
    deep.depth_mean = -750;
    deep.apical_reach = 450;
    deep.tuft = true;
    deep.basal_stems = 4;
    deep.branch_prob = 0.06;
    deep.min_nodes = 160;
    deep.max_nodes = 260;

    SynthClassSpec shallow;
    shallow.id = 1;
    shallow.name = "atufted-shallow";
    shallow.depth_mean = -250;
    shallow.apical_reach = 150;
    shallow.tuft = false;
    shallow.basal_stems = 5;
    shallow.branch_prob = 0.08;
    shallow.min_nodes = 120;
    shallow.max_nodes = 200;

    SynthClassSpec wide;
    wide.id = 2;
    wide.name = "wide-short";
    wide.depth_mean = -500;
    wide.apical_reach = 0;
    wide.lateral_bias = 0.9;
    wide.basal_stems = 7;
    wide.branch_prob = 0.1;
    wide.segment_length = 14;
    wide.min_nodes = 130;
    wide.max_nodes = 230;
    return {deep, shallow, wide};
}

NeuronGraph synth_graph(const SynthClassSpec& spec, std::uint64_t seed, const std::string& source) {
    spec.validate();
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(attempt)));
        const std::size_t target = spec.min_nodes + uniform_index(rng, spec.max_nodes - spec.min_nodes + 1);
        NeuronGraph g = grow(spec, rng, target);
        if (g.size() >= spec.min_nodes) {
            g.meta.source = source;
            g.meta.dataset_tag = "synthetic";
            return g;
        }
    }
    throw ArgumentError("synth: class '" + spec.name + "' cannot reach min_nodes=" +
                        std::to_string(spec.min_nodes) + "; raise branch_prob or lower min_nodes");
}

SynthDataset generate(const std::vector<SynthClassSpec>& specs, std::size_t per_class, std::uint64_t seed,
                      unsigned threads) {
    if (per_class < 1) throw ArgumentError("synth: per_class must be >= 1");
    if (specs.empty()) throw ArgumentError("synth: no class specs");
    for (const auto& s: specs) s.validate();
    SynthDataset out;
    const std::size_t total = specs.size() * per_class;
    out.graphs.resize(total);
    out.labels.resize(total);
    parallel_for(total, std::max(1u, threads), [&](std::size_t i) {
        const std::size_t c = i / per_class;
        const std::size_t j = i % per_class;
        const auto& spec = specs[c];
        char name[64];
        std::snprintf(name, sizeof name, "class%d_%04zu", spec.id, j);
        out.graphs[i] = synth_graph(spec, derive_seed(seed, c, j), name);
        out.labels[i] = spec.id;
    });
    return out;
}

} // namespace neuroembed
