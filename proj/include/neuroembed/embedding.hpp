#pragma once

#include <optional>
#include <string>
#include <vector>

#include "neuroembed/common.hpp"

namespace neuroembed {

// One latent row per graph, keyed by source id.
struct EmbeddingTable {
    std::vector<std::string> ids;
    MatD z;

    std::size_t size() const { return ids.size(); }
};

// CSV `id,z0..z{d-1}[,label]` with 17 significant digits.
void write_embeddings_csv(const std::string& path, const EmbeddingTable& table,
                          const std::optional<std::vector<int>>& labels = std::nullopt);

struct LabeledEmbeddings {
    EmbeddingTable table;
    std::optional<std::vector<int>> labels;
};

LabeledEmbeddings read_embeddings_csv(const std::string& path);

// Mean-centered projection onto the top two principal axes, each axis signed so
// its largest-magnitude loading is positive.
MatD pca_2d(const MatD& x);

} // namespace neuroembed
