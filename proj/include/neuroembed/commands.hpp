#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "neuroembed/config.hpp"

namespace neuroembed {

// Artifact file names inside the output directory.
namespace artifact {
inline constexpr const char* dataset = "dataset.mgrf";
inline constexpr const char* manifest = "manifest.json";
inline constexpr const char* checkpoint = "checkpoint.gdck";
inline constexpr const char* train_log = "train.log";
inline constexpr const char* embeddings = "embeddings.csv";
inline constexpr const char* pca = "pca.csv";
inline constexpr const char* select_k_csv = "select_k.csv";
inline constexpr const char* select_k_json = "select_k.json";
inline constexpr const char* clusters = "clusters.csv";
inline constexpr const char* gmm = "gmm.json";
inline constexpr const char* metrics = "metrics.json";
inline constexpr const char* labels = "labels.csv";
inline constexpr const char* swc_dir = "swc";
} // namespace artifact

void cmd_ingest(const RunConfig& cfg);
void cmd_train(const RunConfig& cfg, bool resume = false);
void cmd_embed(const RunConfig& cfg);
void cmd_select_k(const RunConfig& cfg);
void cmd_cluster(const RunConfig& cfg);
void cmd_evaluate(const RunConfig& cfg);

struct SynthOptions {
    std::optional<std::filesystem::path> spec_file;  // default classes when unset
    std::size_t per_class = 100;
    std::uint64_t seed = 0;
    std::filesystem::path output_dir;
    unsigned threads = 1;
};

// Writes <out>/swc/<id>.swc and <out>/labels.csv (id,label).
void cmd_synth(const SynthOptions& opts);

// `id,label` CSV. Integer labels are kept; otherwise distinct names are numbered
// in sorted order and returned in `names`.
struct LabelTable {
    std::vector<std::string> ids;
    std::vector<int> labels;
    std::vector<std::string> names;
};

LabelTable read_labels_csv(const std::string& path);

struct ClusterTable {
    std::vector<std::string> ids;
    std::vector<int> labels;
    std::vector<double> confidence;
};

ClusterTable read_clusters_csv(const std::string& path);

} // namespace neuroembed
