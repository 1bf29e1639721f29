#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "neuroembed/forest.hpp"
#include "neuroembed/trainer.hpp"

namespace neuroembed {

struct PreprocessConfig {
    SomaMode soma_mode = SomaMode::relative_depth;
    bool remove_axon = false;
    std::size_t subsample = 1000;
};

struct EmbedSettings {
    std::size_t views = 8;
    std::optional<std::size_t> n_keep;  // defaults to the augmentation n_keep
};

struct ClusterSettings {
    int k_min = 2;
    int k_max = 30;
    int folds = 5;
    int repeats = 100;
    int runs = 100;
    std::optional<int> k;  // forces k instead of reading select_k.json
};

struct EvaluateSettings {
    ForestConfig forest;
    int cv_folds = 10;
    int cv_repeats = 100;
    std::string reference;  // optional reference-label CSV (id,label)
};

// Everything a command needs. Defaults depend on the dataset tag; a JSON file
// and command-line flags are merged on top, in that order.
struct RunConfig {
    std::string tag = "synthetic";
    std::vector<std::string> inputs;
    double split_fraction = 0.9;
    PreprocessConfig preprocess;
    TrainConfig train;
    EmbedSettings embed;
    ClusterSettings cluster;
    EvaluateSettings evaluate;
    std::filesystem::path output_dir = "neuroembed_out";
    std::uint64_t seed = 0;
    unsigned threads = 1;
    bool deterministic = false;

    static RunConfig for_tag(const std::string& tag);
    // Pushes the top-level seed/threads/deterministic/output_dir into nested configs.
    void propagate();
    void validate() const;
};

nlohmann::json to_json(const RunConfig& c);
// `j` may be partial; missing keys keep the tag defaults.
RunConfig run_config_from_json(const nlohmann::json& j);

// defaults(tag) <- file <- patch. output_dir comes from the patch, else $NEUROEMBED_OUT,
// else the file.
RunConfig resolve_config(const std::optional<std::filesystem::path>& file, const nlohmann::json& patch);

constexpr const char* output_dir_env = "NEUROEMBED_OUT";

} // namespace neuroembed
