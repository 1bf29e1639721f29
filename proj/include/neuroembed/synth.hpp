#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "neuroembed/skeleton.hpp"

namespace neuroembed {

struct SynthClassSpec {
    int id = 0;
    std::string name;
    double branch_prob = 0.08;       // chance a growing tip forks per segment
    double segment_length = 12.0;    // mean segment length, micrometers
    double length_jitter = 0.25;     // relative spread of segment lengths
    double direction_jitter = 0.35;  // per-segment direction noise
    double depth_mean = -500.0;      // soma y
    double depth_std = 30.0;
    bool tuft = false;               // apical widening near the top of its reach
    double apical_reach = 0.0;       // apical height above the soma where the tuft starts; 0 = no apical
    double lateral_bias = 0.0;       // 0 = isotropic basal growth, 1 = strongly horizontal
    std::size_t basal_stems = 4;
    double axon_prob = 0.0;          // chance that a basal stem is an axon instead
    std::size_t min_nodes = 120;
    std::size_t max_nodes = 220;
    double soma_radius = 8.0;

    void validate() const;
};

nlohmann::json to_json(const SynthClassSpec& s);
// Missing fields keep their defaults; invalid values raise ArgumentError naming the field.
SynthClassSpec synth_class_from_json(const nlohmann::json& j);
std::vector<SynthClassSpec> synth_specs_from_json(const nlohmann::json& j);

// tufted-deep, atufted-shallow, wide-short
std::vector<SynthClassSpec> default_synth_classes();

struct SynthDataset {
    std::vector<NeuronGraph> graphs;
    std::vector<int> labels;  // class id per graph
};

// Grows one tree; retries with derived seeds while below min_nodes.
NeuronGraph synth_graph(const SynthClassSpec& spec, std::uint64_t seed, const std::string& source);

SynthDataset generate(const std::vector<SynthClassSpec>& specs, std::size_t per_class, std::uint64_t seed,
                      unsigned threads = 1);

} // namespace neuroembed
