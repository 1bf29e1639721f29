#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "neuroembed/augment.hpp"
#include "neuroembed/checkpoint.hpp"
#include "neuroembed/embedding.hpp"
#include "neuroembed/features.hpp"

namespace neuroembed {

struct TrainConfig {
    std::size_t batch_size = 64;
    std::uint64_t total_steps = 100000;
    std::uint64_t warmup_steps = 2000;
    std::uint64_t stop_at = 0;              // nonzero: halt at this step; the schedule still spans total_steps
    double peak_lr = 1e-4;
    double teacher_temp = 0.06;
    double student_temp = 0.1;
    double ema_momentum = 0.996;
    double center_momentum = 0.9;
    std::uint64_t seed = 0;
    AugmentConfig augment = AugmentConfig::aba();
    EncoderConfig encoder;
    FeatureConfig features;
    PeOrder pe_order = PeOrder::largest;

    std::uint64_t log_every = 50;
    std::uint64_t checkpoint_every = 5000;  // 0 disables periodic checkpoints
    std::uint64_t validate_every = 500;     // 0 disables validation
    unsigned threads = 1;
    // Parallel work is still reduced in canonical order; this additionally pins
    // execution to one thread.
    bool deterministic = false;
    std::filesystem::path output_dir;       // empty: no files written

    void validate() const;
};

double lr_at(std::uint64_t step, const TrainConfig& cfg);

template <typename T>
struct ObjectiveResult {
    double loss = 0;
    EncoderParams<T> grads;           // student gradients (empty unless requested)
    Mat<T> teacher1, teacher2;        // teacher logits, b x P
};

// Student/teacher forward on both views, dino_loss, and (optionally) reverse-mode
// gradients of the loss w.r.t. every student tensor. Per-graph work may run on
// `threads` workers; gradients are reduced in fixed chunks of graphs in order.
template <typename T>
ObjectiveResult<T> dino_objective(const EncoderParams<T>& student, const EncoderParams<T>& teacher,
                                  const Mat<T>& center, const GraphBatch<T>& view1,
                                  const GraphBatch<T>& view2, double student_temp,
                                  double teacher_temp, bool with_grad, unsigned threads = 1);

struct TrainResult {
    TrainState state;
    std::vector<double> step_losses;                           // one per executed step
    std::vector<std::pair<std::uint64_t, double>> val_losses;
};

// Runs steps [state.step, total_steps). Writes train.log and checkpoint.gdck to
// output_dir when set. On a numeric failure an emergency checkpoint is written
// and the error rethrown with the step index.
TrainResult train(const std::vector<NeuronGraph>& train_set, const std::vector<NeuronGraph>& val_set,
                  const TrainConfig& cfg, std::optional<TrainState> resume = std::nullopt,
                  const nlohmann::json& meta = nlohmann::json::object());

// The two tensorized, augmented views of dataset[index] used at `step`.
std::pair<GraphInput<float>, GraphInput<float>> training_views(const NeuronGraph& g,
                                                               std::uint64_t index,
                                                               std::uint64_t step,
                                                               const TrainConfig& cfg);

// Dataset indices drawn for one step from seeded, shuffled epochs.
std::vector<std::size_t> batch_indices(std::size_t dataset_size, std::uint64_t step,
                                       std::size_t batch_size, std::uint64_t seed);

struct EmbedConfig {
    std::size_t views = 8;
    std::size_t n_keep = 200;
    FeatureConfig features;
    PeOrder pe_order = PeOrder::largest;
    unsigned threads = 1;
    // Test hook: every view uses the seed of view 0.
    bool same_view_seeds = false;
};

// Deterministic teacher embeddings: each view is a seeded subsample (no
// geometric noise, fixed-sign PE); z is averaged over views.
EmbeddingTable embed(const std::vector<NeuronGraph>& dataset, const EncoderParams<float>& teacher,
                     const EmbedConfig& cfg);

std::uint64_t fnv1a(const std::string& s);

} // namespace neuroembed
