#include "doctest.h"

#include <cmath>
#include <numeric>

#include "neuroembed/encoder.hpp"
#include "support.hpp"

using namespace neuroembed;

namespace {

EncoderConfig small_config() {
    EncoderConfig c;
    c.dim = 16;
    c.heads = 8;
    c.blocks = 2;
    c.pe_dim = 4;
    c.latent = 6;
    c.head_hidden = 12;
    c.proj_dim = 20;
    return c;
}

GraphInput<double> input(std::size_t n, Rng& rng, int pe_dim = 4) {
    return make_graph_input(testing::random_tree(n, rng), {}, static_cast<std::size_t>(pe_dim), {});
}

// Independent per-head loop: softmax(lambda_i q_i.k_j / sqrt(dk) + gamma_i A_ij) V, then W_O.
MatD attention_oracle(const MatD& x, const MatD& a, const VecD& lambda, const VecD& gamma,
                      const BlockParams<double>& b, int heads) {
    const Eigen::Index n = x.rows(), d = x.cols(), dk = d / heads;
    const MatD q = x * b.wq, k = x * b.wk, v = x * b.wv;
    MatD ctx(n, d);
    for (int h = 0; h < heads; ++h) {
        for (Eigen::Index i = 0; i < n; ++i) {
            VecD logits(n);
            for (Eigen::Index j = 0; j < n; ++j) {
                const double dot = q.row(i).segment(h * dk, dk).dot(k.row(j).segment(h * dk, dk));
                logits[j] = lambda[i] * dot / std::sqrt(double(dk)) + gamma[i] * a(i, j);
            }
            const double m = logits.maxCoeff();
            VecD p = (logits.array() - m).exp();
            p /= p.sum();
            ctx.row(i).segment(h * dk, dk) = p.transpose() * v.middleCols(h * dk, dk);
        }
    }
    return ctx * b.wo;
}

} // namespace

TEST_CASE("parameter shapes and naming") {
    const EncoderConfig c = small_config();
    auto p = EncoderParams<double>::init(c, 1);
    CHECK(p.token_proj.rows() == node_feature_dim);
    CHECK(p.pe_proj.rows() == c.pe_dim);
    CHECK(p.blocks.size() == 2);
    CHECK(p.blocks[0].wbias.cols() == 1);
    CHECK(p.head2.cols() == c.proj_dim);
    const auto t = p.tensors();
    CHECK(t.front().first == "token_proj");
    CHECK(t.back().first == "head2_bias");
    std::size_t count = 0;
    for (const auto& [name, m]: t) count += static_cast<std::size_t>(m->size());
    CHECK(count == p.parameter_count());
    c.validate();

    EncoderConfig untied = c;
    untied.tied_bias = false;
    CHECK(EncoderParams<double>::init(untied, 1).blocks[0].wbias.cols() == 2);

    CHECK(EncoderParams<double>::init(c, 1).blocks[1].wq == EncoderParams<double>::init(c, 1).blocks[1].wq);
    CHECK(EncoderParams<double>::init(c, 2).blocks[1].wq != EncoderParams<double>::init(c, 1).blocks[1].wq);
}

TEST_CASE("encoder config validation") {
    EncoderConfig c = small_config();
    c.heads = 3;
    CHECK_THROWS_AS(c.validate(), ArgumentError);
    c = small_config();
    c.blocks = 0;
    CHECK_THROWS_AS(c.validate(), ArgumentError);
}

TEST_CASE("tokenize is linear in features and PE") {
    Rng rng(1);
    const auto p = EncoderParams<double>::init(small_config(), 3);
    GraphInput<double> g = input(9, rng);
    GraphInput<double> zero = g;
    zero.features.setZero();
    zero.pe.setZero();
    CHECK(tokenize(zero, p).isZero());

    GraphInput<double> only_features = g;
    only_features.pe.setZero();
    GraphInput<double> doubled = only_features;
    doubled.features *= 2;
    CHECK(tokenize(doubled, p) == 2 * tokenize(only_features, p));

    GraphBatch<double> batch;
    batch.graphs = {g, g};
    const auto tokens = tokenize(batch, p);
    REQUIRE(tokens.size() == 2);
    CHECK(tokens[0].rows() == 9);
    CHECK(tokens[0].cols() == 16);
}

TEST_CASE("bias coefficients") {
    Rng rng(2);
    const MatD x = MatD::Random(7, 16);
    const auto z = bias_coefficients<double>(x, MatD::Zero(16, 1), true);
    CHECK(z.lambda.isZero());
    CHECK(z.gamma.isZero());

    const MatD w = MatD::Random(16, 1);
    const auto tied = bias_coefficients(x, w, true);
    CHECK(tied.lambda == tied.gamma);
    CHECK(tied.lambda.isApprox(x * w, 1e-14));

    MatD w2 = MatD::Zero(16, 2);
    w2.col(0) = MatD::Random(16, 1);
    const auto untied = bias_coefficients(x, w2, false);
    CHECK(untied.gamma.isZero());
    CHECK(untied.lambda.isApprox(x * w2.col(0), 1e-14));
}

TEST_CASE("graph_attention matches an explicit per-head oracle") {
    Rng rng(3);
    const auto p = EncoderParams<double>::init(small_config(), 5);
    const auto g = input(11, rng);
    const MatD x = MatD::Random(11, 16);
    BiasCoefficients<double> coef{VecD::Random(11), VecD::Random(11) * 2};
    std::vector<MatD> probs;
    const MatD out = graph_attention(x, g.adjacency, coef, p.blocks[0], 8, &probs);
    CHECK((out - attention_oracle(x, g.adjacency, coef.lambda, coef.gamma, p.blocks[0], 8)).cwiseAbs().maxCoeff() < 1e-12);
    REQUIRE(probs.size() == 8);
    for (const auto& pr: probs) {
        CHECK(pr.minCoeff() >= 0);
        CHECK((pr.rowwise().sum().array() - 1).abs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("graph_attention reduces to scaled dot-product attention") {
    Rng rng(4);
    const auto p = EncoderParams<double>::init(small_config(), 6);
    const auto g = input(12, rng);
    const MatD x = MatD::Random(12, 16);
    const BiasCoefficients<double> coef{VecD::Ones(12), VecD::Zero(12)};
    const MatD a = graph_attention(x, g.adjacency, coef, p.blocks[1], 8);
    const MatD b = scaled_dot_product_attention(x, p.blocks[1], 8);
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("large adjacency bias turns attention into neighbour averaging") {
    Rng rng(5);
    const auto p = EncoderParams<double>::init(small_config(), 7);
    const auto g = input(12, rng);
    const MatD x = MatD::Random(12, 16);
    const BiasCoefficients<double> coef{VecD::Zero(12), VecD::Constant(12, 50.0)};
    const MatD out = graph_attention(x, g.adjacency, coef, p.blocks[0], 8);
    const MatD v = x * p.blocks[0].wv;
    const VecD deg = g.adjacency.rowwise().sum();
    const MatD mean_v = (g.adjacency * v).array().colwise() / deg.array();
    CHECK((out - mean_v * p.blocks[0].wo).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("non-finite attention logits are reported with the block") {
    Rng rng(6);
    const auto p = EncoderParams<double>::init(small_config(), 8);
    const auto g = input(5, rng);
    MatD x = MatD::Random(5, 16);
    const BiasCoefficients<double> coef{VecD::Constant(5, std::numeric_limits<double>::infinity()), VecD::Zero(5)};
    CHECK_THROWS_WITH_AS(graph_attention<double>(x, g.adjacency, coef, p.blocks[0], 8, nullptr, 3),
                         doctest::Contains("block 3"), NumericError);
}

TEST_CASE("encoder with zero adjacency and unit lambda is a vanilla transformer") {
    Rng rng(7);
    const auto p = EncoderParams<double>::init(small_config(), 9);
    const auto g = input(10, rng);
    ForwardOptions<double> biased;
    biased.fixed_lambda = 1.0;
    biased.zero_adjacency = true;
    ForwardOptions<double> vanilla;
    vanilla.vanilla_attention = true;
    CHECK((encode_graph<double>(g, p, nullptr, biased) - encode_graph<double>(g, p, nullptr, vanilla)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("encode shapes and determinism") {
    Rng rng(8);
    const auto p = EncoderParams<double>::init(small_config(), 10);
    const auto g = input(13, rng);
    GraphBatch<double> batch;
    batch.graphs = {g, input(13, rng), g};
    const MatD z = encode(batch, p);
    CHECK(z.rows() == 3);
    CHECK(z.cols() == 6);
    CHECK(z.row(0) == z.row(2));
    CHECK(encode(batch, p) == z);
    const MatD pr = project(z, p);
    CHECK(pr.rows() == 3);
    CHECK(pr.cols() == 20);
}

TEST_CASE("batch validation") {
    Rng rng(9);
    GraphBatch<double> batch;
    batch.graphs = {input(8, rng), input(9, rng)};
    CHECK_THROWS_AS(batch.validate(4), ArgumentError);
    batch.graphs = {input(8, rng)};
    CHECK_THROWS_AS(batch.validate(5), ArgumentError);
    CHECK_NOTHROW(batch.validate(4));
}

TEST_CASE("mean-pooled embeddings are invariant to node relabelling") {
    Rng rng(10);
    EncoderConfig c = small_config();
    c.pe_dim = 8;
    const auto p = EncoderParams<double>::init(c, 11);
    int tested = 0;
    while (tested < 20) {
        const auto g = testing::random_tree(6 + uniform_index(rng, 25), rng);
        if (testing::spectral_gap(g) < 1e-6) continue;
        ++tested;
        std::vector<std::size_t> perm(g.size());
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        std::shuffle(perm.begin(), perm.end(), rng);
        const auto h = testing::relabel(g, perm);
        const MatD za = encode_graph(make_graph_input(g, {}, 8, {}), p);
        const MatD zb = encode_graph(make_graph_input(h, {}, 8, {}), p);
        CHECK((za - zb).cwiseAbs().maxCoeff() <= 1e-6);
    }
}

TEST_CASE("projection head") {
    EncoderConfig c = small_config();
    auto p = EncoderParams<double>::init(c, 12);
    const MatD z = MatD::Random(4, c.latent);

    auto zero = p;
    zero.head1.setZero();
    zero.head2.setZero();
    CHECK(project(z, zero).isZero());

    c.head_activation = false;
    auto affine = EncoderParams<double>::init(c, 13);
    affine.head1_bias.setRandom();
    affine.head2_bias.setRandom();
    const MatD p0 = project<double>(MatD::Zero(1, c.latent), affine);
    const MatD p1 = project(z, affine);
    const MatD p2 = project<double>(2 * z, affine);
    const MatD expect = 2 * p1 - p0.replicate(4, 1);
    CHECK((p2 - expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("float and double forward passes agree") {
    Rng rng(14);
    const auto p = EncoderParams<double>::init(small_config(), 15);
    const auto g = input(12, rng);
    const MatD zd = encode_graph(g, p);
    const Mat<float> zf = encode_graph(g.cast<float>(), p.cast<float>());
    CHECK((zd - zf.cast<double>()).cwiseAbs().maxCoeff() < 1e-4);
}
