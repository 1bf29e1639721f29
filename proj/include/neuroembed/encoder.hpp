#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "neuroembed/features.hpp"

namespace neuroembed {

struct EncoderConfig {
    int dim = 64;          // token width D
    int heads = 8;
    int blocks = 7;
    int pe_dim = 32;       // Laplacian eigenvectors per node
    int latent = 32;       // graph embedding z
    int ff_mult = 2;       // feedforward expansion
    int head_hidden = 256;
    int proj_dim = 1000;   // projection p fed to the softmax
    bool tied_bias = true; // one coefficient per node used as both lambda and gamma
    // Disables the projection head's hidden activation (makes it affine).
    bool head_activation = true;

    int head_dim() const { return dim / heads; }
    void validate() const;
    friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

template <typename T>
struct BlockParams {
    Mat<T> ln1_gain, ln1_bias;  // 1 x D
    Mat<T> wq, wk, wv, wo;      // D x D
    Mat<T> wbias;               // D x 1 (tied) or D x 2 (lambda, gamma)
    Mat<T> ln2_gain, ln2_bias;  // 1 x D
    Mat<T> ff1, ff1_bias;       // D x mD, 1 x mD
    Mat<T> ff2, ff2_bias;       // mD x D, 1 x D
};

// Every learnable tensor of the encoder and projection head, addressable by name.
template <typename T>
struct EncoderParams {
    EncoderConfig config;
    Mat<T> token_proj;              // 8 x D
    Mat<T> pe_proj;                 // k x D
    std::vector<BlockParams<T>> blocks;
    Mat<T> readout, readout_bias;   // D x latent, 1 x latent
    Mat<T> head1, head1_bias;       // latent x hidden, 1 x hidden
    Mat<T> head2, head2_bias;       // hidden x proj, 1 x proj

    static EncoderParams zeros(const EncoderConfig& cfg);
    static EncoderParams init(const EncoderConfig& cfg, std::uint64_t seed);

    // (name, tensor) pairs in a fixed canonical order.
    std::vector<std::pair<std::string, Mat<T>*>> tensors();
    std::vector<std::pair<std::string, const Mat<T>*>> tensors() const;
    std::size_t parameter_count() const;
    void set_zero();
    bool all_finite() const;

    template <typename U>
    EncoderParams<U> cast() const;
};

// Test hooks for the forward pass.
template <typename T>
struct ForwardOptions {
    std::optional<T> fixed_lambda;
    std::optional<T> fixed_gamma;
    bool zero_adjacency = false;
    // Plain softmax(QK^T / sqrt(d_k)) V attention with no coefficient or adjacency terms.
    bool vanilla_attention = false;
};

template <typename T>
struct BiasCoefficients {
    Vec<T> lambda;
    Vec<T> gamma;
};

template <typename T>
struct LayerNormCache {
    Mat<T> xhat;
    Vec<T> rstd;
};

template <typename T>
struct BlockCache {
    LayerNormCache<T> ln1;
    Mat<T> x;      // normalized block input
    BiasCoefficients<T> coef;
    Mat<T> q, k, v;
    std::vector<Mat<T>> probs;  // per head, n x n
    Mat<T> ctx;    // concatenated head outputs before W_O
    LayerNormCache<T> ln2;
    Mat<T> x2;
    Mat<T> u;      // feedforward pre-activation
    Mat<T> act;
};

template <typename T>
struct GraphCache {
    std::vector<BlockCache<T>> blocks;
    Mat<T> pooled;  // 1 x D
};

template <typename T>
struct HeadCache {
    Mat<T> z, u, a;
};

// token_i = features_i * token_proj + pe_i * pe_proj
template <typename T>
Mat<T> tokenize(const GraphInput<T>& g, const EncoderParams<T>& params);

// Batched form: one n x D token matrix per graph.
template <typename T>
std::vector<Mat<T>> tokenize(const GraphBatch<T>& batch, const EncoderParams<T>& params);

// (lambda_i, gamma_i) = W x_i; tied mode uses a single coefficient for both.
template <typename T>
BiasCoefficients<T> bias_coefficients(const Mat<T>& tokens, const Mat<T>& wbias, bool tied);

// Multi-head attention with logits_ij = lambda_i q_i.k_j / sqrt(d_k) + gamma_i A_ij,
// followed by W_O. Optionally returns the per-head attention matrices. Throws
// NumericError naming `block_index` when a logit is not finite.
template <typename T>
Mat<T> graph_attention(const Mat<T>& x, const Mat<T>& adjacency, const BiasCoefficients<T>& coef,
                       const BlockParams<T>& block, int heads,
                       std::vector<Mat<T>>* probs = nullptr, int block_index = 0);

// Reference bias-free scaled dot-product attention followed by W_O.
template <typename T>
Mat<T> scaled_dot_product_attention(const Mat<T>& x, const BlockParams<T>& block, int heads);

// One graph through tokenizer, blocks, mean pooling and readout: 1 x latent.
template <typename T>
Mat<T> encode_graph(const GraphInput<T>& g, const EncoderParams<T>& params,
                    GraphCache<T>* cache = nullptr, const ForwardOptions<T>& opts = {});

// Accumulates parameter gradients for one graph given dL/dz (1 x latent).
template <typename T>
void encode_graph_backward(const GraphInput<T>& g, const EncoderParams<T>& params,
                           const GraphCache<T>& cache, const Mat<T>& dz, EncoderParams<T>& grads,
                           const ForwardOptions<T>& opts = {});

// b x latent
template <typename T>
Mat<T> encode(const GraphBatch<T>& batch, const EncoderParams<T>& params,
              const ForwardOptions<T>& opts = {});

// Projection head latent -> hidden -> proj_dim, plain linear output.
template <typename T>
Mat<T> project(const Mat<T>& z, const EncoderParams<T>& params, HeadCache<T>* cache = nullptr);

// Accumulates head gradients and returns dL/dz.
template <typename T>
Mat<T> project_backward(const HeadCache<T>& cache, const Mat<T>& dp, const EncoderParams<T>& params,
                        EncoderParams<T>& grads);

#define NEUROEMBED_ENCODER_EXTERN(T)                                                              \
    extern template struct EncoderParams<T>;                                                      \
    extern template Mat<T> tokenize(const GraphInput<T>&, const EncoderParams<T>&);               \
    extern template std::vector<Mat<T>> tokenize(const GraphBatch<T>&, const EncoderParams<T>&);  \
    extern template BiasCoefficients<T> bias_coefficients(const Mat<T>&, const Mat<T>&, bool);    \
    extern template Mat<T> graph_attention(const Mat<T>&, const Mat<T>&,                          \
                                           const BiasCoefficients<T>&, const BlockParams<T>&, int,\
                                           std::vector<Mat<T>>*, int);                            \
    extern template Mat<T> scaled_dot_product_attention(const Mat<T>&, const BlockParams<T>&, int);\
    extern template Mat<T> encode_graph(const GraphInput<T>&, const EncoderParams<T>&,            \
                                        GraphCache<T>*, const ForwardOptions<T>&);                \
    extern template void encode_graph_backward(const GraphInput<T>&, const EncoderParams<T>&,     \
                                               const GraphCache<T>&, const Mat<T>&,               \
                                               EncoderParams<T>&, const ForwardOptions<T>&);      \
    extern template Mat<T> encode(const GraphBatch<T>&, const EncoderParams<T>&,                  \
                                  const ForwardOptions<T>&);                                      \
    extern template Mat<T> project(const Mat<T>&, const EncoderParams<T>&, HeadCache<T>*);       \
    extern template Mat<T> project_backward(const HeadCache<T>&, const Mat<T>&,                   \
                                            const EncoderParams<T>&, EncoderParams<T>&);

NEUROEMBED_ENCODER_EXTERN(float)
NEUROEMBED_ENCODER_EXTERN(double)
#undef NEUROEMBED_ENCODER_EXTERN

template <typename T>
template <typename U>
EncoderParams<U> EncoderParams<T>::cast() const {
    EncoderParams<U> out = EncoderParams<U>::zeros(config);
    auto src = tensors();
    auto dst = out.tensors();
    for (std::size_t i = 0; i < src.size(); ++i) *dst[i].second = src[i].second->template cast<U>();
    return out;
}

} // namespace neuroembed
