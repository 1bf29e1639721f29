#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "neuroembed/dino.hpp"

namespace neuroembed {

struct TrainState {
    EncoderParams<float> student, teacher;
    Mat<float> center;  // 1 x proj_dim
    AdamState<float> adam;
    std::uint64_t step = 0;
    std::uint64_t seed = 0;
    std::vector<std::pair<std::uint64_t, double>> loss_history;

    static TrainState fresh(const EncoderConfig& cfg, std::uint64_t seed);
};

constexpr std::uint16_t checkpoint_version = 1;

struct Checkpoint {
    TrainState state;
    nlohmann::json meta;  // caller-supplied echo (train config, dataset info)
};

// "GDCK" | u16 version | config echo | u32 meta length + meta JSON |
// u32 tensor count | per tensor: name, rank, dims, row-major f32 payload.
std::string encode_checkpoint(const TrainState& state, const nlohmann::json& meta);

// Throws VersionError on a foreign version or when `expected` differs from the
// stored config echo; IoError on a malformed file.
Checkpoint decode_checkpoint(std::string_view bytes,
                             const std::optional<EncoderConfig>& expected = std::nullopt);

void save_checkpoint(const std::filesystem::path& path, const TrainState& state,
                     const nlohmann::json& meta);
Checkpoint load_checkpoint(const std::filesystem::path& path,
                           const std::optional<EncoderConfig>& expected = std::nullopt);

nlohmann::json to_json(const EncoderConfig& cfg);
EncoderConfig encoder_config_from_json(const nlohmann::json& j, EncoderConfig base = {});

} // namespace neuroembed
