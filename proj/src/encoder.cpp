#include "neuroembed/encoder.hpp"

#include <cmath>

namespace neuroembed {

namespace {

constexpr double ln_eps = 1e-5;

template <typename T>
Mat<T> row_vector(Eigen::Index cols, T value = T(0)) {
    return Mat<T>::Constant(1, cols, value);
}

template <typename T>
Mat<T> layer_norm(const Mat<T>& h, const Mat<T>& gain, const Mat<T>& bias,
                  LayerNormCache<T>* cache) {
    const T inv_d = T(1) / static_cast<T>(h.cols());
    const Vec<T> mean = h.rowwise().sum() * inv_d;
    Mat<T> xhat = h.colwise() - mean;
    Vec<T> rstd = ((xhat.array().square().rowwise().sum() * inv_d) + T(ln_eps)).rsqrt();
    xhat.array().colwise() *= rstd.array();
    Mat<T> out = (xhat.array().rowwise() * gain.row(0).array()).rowwise() + bias.row(0).array();
    if (cache) {
        cache->xhat = std::move(xhat);
        cache->rstd = std::move(rstd);
    }
    return out;
}

// Returns dL/dh and accumulates gain/bias gradients.
template <typename T>
Mat<T> layer_norm_backward(const LayerNormCache<T>& cache, const Mat<T>& dy, const Mat<T>& gain,
                           Mat<T>& dgain, Mat<T>& dbias) {
    dgain += (dy.array() * cache.xhat.array()).colwise().sum().matrix();
    dbias += dy.colwise().sum();
    const Mat<T> dxhat = dy.array().rowwise() * gain.row(0).array();
    const T inv_d = T(1) / static_cast<T>(dy.cols());
    const Vec<T> m1 = dxhat.rowwise().sum() * inv_d;
    const Vec<T> m2 = dxhat.cwiseProduct(cache.xhat).rowwise().sum() * inv_d;
    Mat<T> dh = dxhat.colwise() - m1;
    dh.array() -= cache.xhat.array().colwise() * m2.array();
    dh.array().colwise() *= cache.rstd.array();
    return dh;
}

constexpr double gelu_c = 0.7978845608028654;  // sqrt(2/pi)
constexpr double gelu_a = 0.044715;

template <typename T>
Mat<T> gelu(const Mat<T>& u) {
    const auto x = u.array();
    const auto t = (T(gelu_c) * (x + T(gelu_a) * x.cube())).tanh();
    return (T(0.5) * x * (T(1) + t)).matrix();
}

template <typename T>
Mat<T> gelu_grad(const Mat<T>& u) {
    const auto x = u.array();
    const Mat<T> t = (T(gelu_c) * (x + T(gelu_a) * x.cube())).tanh().matrix();
    const auto ta = t.array();
    return (T(0.5) * (T(1) + ta) +
            T(0.5) * x * (T(1) - ta.square()) * T(gelu_c) * (T(1) + T(3 * gelu_a) * x.square()))
        .matrix();
}

// Returns false when a row maximum or normalizer is not finite.
template <typename T>
bool softmax_rows(Mat<T>& m) {
    const Vec<T> mx = m.rowwise().maxCoeff();
    m.colwise() -= mx;
    m = m.array().exp();
    const Vec<T> sums = m.rowwise().sum();
    m.array().colwise() /= sums.array();
    return mx.allFinite() && sums.allFinite();
}

template <typename T>
void check_shape(const Mat<T>& m, Eigen::Index rows, Eigen::Index cols, const char* what) {
    if (m.rows() != rows || m.cols() != cols) {
        throw ArgumentError(std::string(what) + ": expected " + std::to_string(rows) + "x" +
                            std::to_string(cols) + ", got " + std::to_string(m.rows()) + "x" +
                            std::to_string(m.cols()));
    }
}

template <typename T>
void fill_normal(Mat<T>& m, Rng& rng, double sigma) {
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<T>(normal(rng, sigma));
}

template <typename T>
Mat<T> attention_core(const Mat<T>& q, const Mat<T>& k, const Mat<T>& v, const Mat<T>* adjacency,
                      const Vec<T>* lambda, const Vec<T>* gamma, int heads,
                      std::vector<Mat<T>>* probs, int block_index) {
    const Eigen::Index n = q.rows();
    const Eigen::Index dk = q.cols() / heads;
    const T scale = T(1) / std::sqrt(static_cast<T>(dk));
    Mat<T> ctx(n, q.cols());
    if (probs) probs->assign(static_cast<std::size_t>(heads), Mat<T>());
    for (int h = 0; h < heads; ++h) {
        Mat<T> logits;
        logits.noalias() = q.middleCols(h * dk, dk) * k.middleCols(h * dk, dk).transpose();
        if (lambda) logits.array().colwise() *= lambda->array() * scale;
        else logits *= scale;
        if (gamma && adjacency) logits.array() += adjacency->array().colwise() * gamma->array();
        if (!softmax_rows(logits)) {
            throw NumericError("non-finite attention logits in block " + std::to_string(block_index));
        }
        ctx.middleCols(h * dk, dk).noalias() = logits * v.middleCols(h * dk, dk);
        if (probs) (*probs)[static_cast<std::size_t>(h)] = std::move(logits);
    }
    return ctx;
}

template <typename T>
BiasCoefficients<T> effective_coefficients(const Mat<T>& x, const BlockParams<T>& block, bool tied,
                                           const ForwardOptions<T>& opts) {
    BiasCoefficients<T> c = bias_coefficients(x, block.wbias, tied);
    if (opts.fixed_lambda) c.lambda.setConstant(*opts.fixed_lambda);
    if (opts.fixed_gamma) c.gamma.setConstant(*opts.fixed_gamma);
    return c;
}

} // namespace

void EncoderConfig::validate() const {
    if (dim <= 0 || heads <= 0 || dim % heads != 0) {
        throw ArgumentError("encoder: dim " + std::to_string(dim) + " must be a positive multiple of heads " +
                            std::to_string(heads));
    }
    if (blocks < 1) throw ArgumentError("encoder: blocks must be >= 1");
    if (pe_dim < 0) throw ArgumentError("encoder: pe_dim must be >= 0");
    if (latent < 1 || ff_mult < 1 || head_hidden < 1 || proj_dim < 1) {
        throw ArgumentError("encoder: latent, ff_mult, head_hidden and proj_dim must be >= 1");
    }
}

template <typename T>
EncoderParams<T> EncoderParams<T>::zeros(const EncoderConfig& cfg) {
    cfg.validate();
    const Eigen::Index d = cfg.dim;
    const Eigen::Index f = static_cast<Eigen::Index>(cfg.ff_mult) * d;
    EncoderParams p;
    p.config = cfg;
    p.token_proj = Mat<T>::Zero(node_feature_dim, d);
    p.pe_proj = Mat<T>::Zero(cfg.pe_dim, d);
    p.blocks.resize(static_cast<std::size_t>(cfg.blocks));
    for (auto& b: p.blocks) {
        b.ln1_gain = row_vector<T>(d);
        b.ln1_bias = row_vector<T>(d);
        b.wq = Mat<T>::Zero(d, d);
        b.wk = Mat<T>::Zero(d, d);
        b.wv = Mat<T>::Zero(d, d);
        b.wo = Mat<T>::Zero(d, d);
        b.wbias = Mat<T>::Zero(d, cfg.tied_bias ? 1 : 2);
        b.ln2_gain = row_vector<T>(d);
        b.ln2_bias = row_vector<T>(d);
        b.ff1 = Mat<T>::Zero(d, f);
        b.ff1_bias = row_vector<T>(f);
        b.ff2 = Mat<T>::Zero(f, d);
        b.ff2_bias = row_vector<T>(d);
    }
    p.readout = Mat<T>::Zero(d, cfg.latent);
    p.readout_bias = row_vector<T>(cfg.latent);
    p.head1 = Mat<T>::Zero(cfg.latent, cfg.head_hidden);
    p.head1_bias = row_vector<T>(cfg.head_hidden);
    p.head2 = Mat<T>::Zero(cfg.head_hidden, cfg.proj_dim);
    p.head2_bias = row_vector<T>(cfg.proj_dim);
    return p;
}

constexpr double head_init_std = 0.02;

template <typename T>
EncoderParams<T> EncoderParams<T>::init(const EncoderConfig& cfg, std::uint64_t seed) {
    EncoderParams p = zeros(cfg);
    Rng rng(derive_seed(seed, 0x1417));
    const double d = cfg.dim;
    const double residual = 1.0 / std::sqrt(2.0 * cfg.blocks);
    fill_normal(p.token_proj, rng, 1.0 / std::sqrt(double(node_feature_dim)));
    if (cfg.pe_dim > 0) fill_normal(p.pe_proj, rng, 1.0 / std::sqrt(double(cfg.pe_dim)));
    for (auto& b: p.blocks) {
        b.ln1_gain.setOnes();
        b.ln2_gain.setOnes();
        fill_normal(b.wq, rng, 1.0 / std::sqrt(d));
        fill_normal(b.wk, rng, 1.0 / std::sqrt(d));
        fill_normal(b.wv, rng, 1.0 / std::sqrt(d));
        fill_normal(b.wo, rng, residual / std::sqrt(d));
        fill_normal(b.wbias, rng, 1.0 / std::sqrt(d));
        fill_normal(b.ff1, rng, 1.0 / std::sqrt(d));
        fill_normal(b.ff2, rng, residual / std::sqrt(d * cfg.ff_mult));
    }
    fill_normal(p.readout, rng, 1.0 / std::sqrt(d));
    // Small head weights keep the initial teacher targets close to uniform.
    fill_normal(p.head1, rng, head_init_std);
    fill_normal(p.head2, rng, head_init_std);
    return p;
}

template <typename T>
std::vector<std::pair<std::string, Mat<T>*>> EncoderParams<T>::tensors() {
    std::vector<std::pair<std::string, Mat<T>*>> out;
    out.emplace_back("token_proj", &token_proj);
    out.emplace_back("pe_proj", &pe_proj);
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        const std::string p = "block" + std::to_string(i) + ".";
        auto& b = blocks[i];
        out.emplace_back(p + "ln1_gain", &b.ln1_gain);
        out.emplace_back(p + "ln1_bias", &b.ln1_bias);
        out.emplace_back(p + "wq", &b.wq);
        out.emplace_back(p + "wk", &b.wk);
        out.emplace_back(p + "wv", &b.wv);
        out.emplace_back(p + "wo", &b.wo);
        out.emplace_back(p + "wbias", &b.wbias);
        out.emplace_back(p + "ln2_gain", &b.ln2_gain);
        out.emplace_back(p + "ln2_bias", &b.ln2_bias);
        out.emplace_back(p + "ff1", &b.ff1);
        out.emplace_back(p + "ff1_bias", &b.ff1_bias);
        out.emplace_back(p + "ff2", &b.ff2);
        out.emplace_back(p + "ff2_bias", &b.ff2_bias);
    }
    out.emplace_back("readout", &readout);
    out.emplace_back("readout_bias", &readout_bias);
    out.emplace_back("head1", &head1);
    out.emplace_back("head1_bias", &head1_bias);
    out.emplace_back("head2", &head2);
    out.emplace_back("head2_bias", &head2_bias);
    return out;
}

template <typename T>
std::vector<std::pair<std::string, const Mat<T>*>> EncoderParams<T>::tensors() const {
    auto mut = const_cast<EncoderParams*>(this)->tensors();
    std::vector<std::pair<std::string, const Mat<T>*>> out;
    out.reserve(mut.size());
    for (auto& [name, m]: mut) out.emplace_back(std::move(name), m);
    return out;
}

template <typename T>
std::size_t EncoderParams<T>::parameter_count() const {
    std::size_t total = 0;
    for (const auto& [name, m]: tensors()) total += static_cast<std::size_t>(m->size());
    return total;
}

template <typename T>
void EncoderParams<T>::set_zero() {
    for (auto& [name, m]: tensors()) m->setZero();
}

template <typename T>
bool EncoderParams<T>::all_finite() const {
    for (const auto& [name, m]: tensors()) {
        if (!m->allFinite()) return false;
    }
    return true;
}

template <typename T>
Mat<T> tokenize(const GraphInput<T>& g, const EncoderParams<T>& params) {
    const auto n = static_cast<Eigen::Index>(g.nodes());
    check_shape(g.features, n, node_feature_dim, "tokenize: features");
    check_shape(g.pe, n, params.config.pe_dim, "tokenize: positional encoding");
    Mat<T> tokens = g.features * params.token_proj;
    if (params.config.pe_dim > 0) tokens.noalias() += g.pe * params.pe_proj;
    return tokens;
}

template <typename T>
std::vector<Mat<T>> tokenize(const GraphBatch<T>& batch, const EncoderParams<T>& params) {
    batch.validate(static_cast<std::size_t>(params.config.pe_dim));
    std::vector<Mat<T>> out;
    out.reserve(batch.size());
    for (const auto& g: batch.graphs) out.push_back(tokenize(g, params));
    return out;
}

template <typename T>
BiasCoefficients<T> bias_coefficients(const Mat<T>& tokens, const Mat<T>& wbias, bool tied) {
    if (wbias.rows() != tokens.cols() || wbias.cols() != (tied ? 1 : 2)) {
        throw ArgumentError("bias_coefficients: W_bias shape does not match tokens / tied mode");
    }
    BiasCoefficients<T> c;
    if (tied) {
        c.lambda = tokens * wbias.col(0);
        c.gamma = c.lambda;
    }
    else {
        c.lambda = tokens * wbias.col(0);
        c.gamma = tokens * wbias.col(1);
    }
    return c;
}

template <typename T>
Mat<T> graph_attention(const Mat<T>& x, const Mat<T>& adjacency, const BiasCoefficients<T>& coef,
                       const BlockParams<T>& block, int heads, std::vector<Mat<T>>* probs,
                       int block_index) {
    const Eigen::Index n = x.rows();
    check_shape(adjacency, n, n, "graph_attention: adjacency");
    if (coef.lambda.size() != n || coef.gamma.size() != n) {
        throw ArgumentError("graph_attention: coefficient length does not match node count");
    }
    const Mat<T> q = x * block.wq;
    const Mat<T> k = x * block.wk;
    const Mat<T> v = x * block.wv;
    return attention_core<T>(q, k, v, &adjacency, &coef.lambda, &coef.gamma, heads, probs,
                             block_index) *
           block.wo;
}

template <typename T>
Mat<T> scaled_dot_product_attention(const Mat<T>& x, const BlockParams<T>& block, int heads) {
    const Mat<T> q = x * block.wq;
    const Mat<T> k = x * block.wk;
    const Mat<T> v = x * block.wv;
    return attention_core<T>(q, k, v, nullptr, nullptr, nullptr, heads, nullptr, 0) * block.wo;
}

template <typename T>
Mat<T> encode_graph(const GraphInput<T>& g, const EncoderParams<T>& params, GraphCache<T>* cache,
                    const ForwardOptions<T>& opts) {
    const auto& cfg = params.config;
    const auto n = static_cast<Eigen::Index>(g.nodes());
    if (n == 0) throw ArgumentError("encode: graph has no nodes");
    check_shape(g.adjacency, n, n, "encode: adjacency");
    const Mat<T> zero_adj = opts.zero_adjacency ? Mat<T>::Zero(n, n) : Mat<T>();
    const Mat<T>& adj = opts.zero_adjacency ? zero_adj : g.adjacency;

    Mat<T> h = tokenize(g, params);
    if (cache) cache->blocks.assign(params.blocks.size(), BlockCache<T>());
    for (std::size_t bi = 0; bi < params.blocks.size(); ++bi) {
        const auto& b = params.blocks[bi];
        BlockCache<T> local;
        BlockCache<T>& c = cache ? cache->blocks[bi] : local;
        c.x = layer_norm(h, b.ln1_gain, b.ln1_bias, &c.ln1);
        c.q = c.x * b.wq;
        c.k = c.x * b.wk;
        c.v = c.x * b.wv;
        std::vector<Mat<T>>* probs = cache ? &c.probs : nullptr;
        if (opts.vanilla_attention) {
            c.ctx = attention_core<T>(c.q, c.k, c.v, nullptr, nullptr, nullptr, cfg.heads, probs,
                                      static_cast<int>(bi));
        }
        else {
            c.coef = effective_coefficients(c.x, b, cfg.tied_bias, opts);
            c.ctx = attention_core<T>(c.q, c.k, c.v, &adj, &c.coef.lambda, &c.coef.gamma, cfg.heads,
                                      probs, static_cast<int>(bi));
        }
        h.noalias() += c.ctx * b.wo;
        c.x2 = layer_norm(h, b.ln2_gain, b.ln2_bias, &c.ln2);
        c.u = (c.x2 * b.ff1).rowwise() + b.ff1_bias.row(0);
        c.act = gelu(c.u);
        h.noalias() += c.act * b.ff2;
        h.rowwise() += b.ff2_bias.row(0);
        if (!cache) {
            // release per-block temporaries early when no cache is kept
            c = BlockCache<T>();
        }
    }
    Mat<T> pooled = h.colwise().mean();
    Mat<T> z = pooled * params.readout + params.readout_bias;
    if (cache) cache->pooled = std::move(pooled);
    return z;
}

template <typename T>
void encode_graph_backward(const GraphInput<T>& g, const EncoderParams<T>& params,
                           const GraphCache<T>& cache, const Mat<T>& dz, EncoderParams<T>& grads,
                           const ForwardOptions<T>& opts) {
    const auto& cfg = params.config;
    const auto n = static_cast<Eigen::Index>(g.nodes());
    const Eigen::Index dk = cfg.head_dim();
    const T scale = T(1) / std::sqrt(static_cast<T>(dk));
    const bool zero_adj = opts.zero_adjacency;

    grads.readout.noalias() += cache.pooled.transpose() * dz;
    grads.readout_bias += dz;
    const Mat<T> dpooled = dz * params.readout.transpose();
    Mat<T> dh = dpooled.replicate(n, 1) / static_cast<T>(n);

    for (std::size_t bi = params.blocks.size(); bi-- > 0;) {
        const auto& b = params.blocks[bi];
        const auto& c = cache.blocks[bi];
        auto& gb = grads.blocks[bi];

        // feedforward sublayer
        gb.ff2.noalias() += c.act.transpose() * dh;
        gb.ff2_bias += dh.colwise().sum();
        Mat<T> du = (dh * b.ff2.transpose()).cwiseProduct(gelu_grad(c.u));
        gb.ff1.noalias() += c.x2.transpose() * du;
        gb.ff1_bias += du.colwise().sum();
        const Mat<T> dx2 = du * b.ff1.transpose();
        dh += layer_norm_backward(c.ln2, dx2, b.ln2_gain, gb.ln2_gain, gb.ln2_bias);

        // attention sublayer
        gb.wo.noalias() += c.ctx.transpose() * dh;
        const Mat<T> dctx = dh * b.wo.transpose();
        Mat<T> dq(n, cfg.dim), dkm(n, cfg.dim), dv(n, cfg.dim);
        Vec<T> dlambda = Vec<T>::Zero(n);
        Vec<T> dgamma = Vec<T>::Zero(n);
        for (int h = 0; h < cfg.heads; ++h) {
            const Mat<T>& p = c.probs[static_cast<std::size_t>(h)];
            const auto dch = dctx.middleCols(h * dk, dk);
            const auto qh = c.q.middleCols(h * dk, dk);
            const auto kh = c.k.middleCols(h * dk, dk);
            dv.middleCols(h * dk, dk).noalias() = p.transpose() * dch;
            Mat<T> dlogits;
            dlogits.noalias() = dch * c.v.middleCols(h * dk, dk).transpose();
            const Vec<T> rowdot = dlogits.cwiseProduct(p).rowwise().sum();
            dlogits.colwise() -= rowdot;
            dlogits.array() *= p.array();
            if (!opts.vanilla_attention) {
                if (!opts.fixed_lambda) {
                    Mat<T> s;
                    s.noalias() = qh * kh.transpose();
                    dlambda += dlogits.cwiseProduct(s).rowwise().sum() * scale;
                }
                if (!opts.fixed_gamma && !zero_adj) {
                    dgamma += dlogits.cwiseProduct(g.adjacency).rowwise().sum();
                }
                dlogits.array().colwise() *= c.coef.lambda.array() * scale;
            }
            else {
                dlogits *= scale;
            }
            dq.middleCols(h * dk, dk).noalias() = dlogits * kh;
            dkm.middleCols(h * dk, dk).noalias() = dlogits.transpose() * qh;
        }
        gb.wq.noalias() += c.x.transpose() * dq;
        gb.wk.noalias() += c.x.transpose() * dkm;
        gb.wv.noalias() += c.x.transpose() * dv;
        Mat<T> dx = dq * b.wq.transpose();
        dx.noalias() += dkm * b.wk.transpose();
        dx.noalias() += dv * b.wv.transpose();
        if (!opts.vanilla_attention) {
            if (cfg.tied_bias) {
                const Vec<T> dc = dlambda + dgamma;
                gb.wbias.col(0).noalias() += c.x.transpose() * dc;
                dx.noalias() += dc * b.wbias.col(0).transpose();
            }
            else {
                gb.wbias.col(0).noalias() += c.x.transpose() * dlambda;
                gb.wbias.col(1).noalias() += c.x.transpose() * dgamma;
                dx.noalias() += dlambda * b.wbias.col(0).transpose();
                dx.noalias() += dgamma * b.wbias.col(1).transpose();
            }
        }
        dh += layer_norm_backward(c.ln1, dx, b.ln1_gain, gb.ln1_gain, gb.ln1_bias);
    }

    grads.token_proj.noalias() += g.features.transpose() * dh;
    if (cfg.pe_dim > 0) grads.pe_proj.noalias() += g.pe.transpose() * dh;
}

template <typename T>
Mat<T> encode(const GraphBatch<T>& batch, const EncoderParams<T>& params,
              const ForwardOptions<T>& opts) {
    batch.validate(static_cast<std::size_t>(params.config.pe_dim));
    Mat<T> z(static_cast<Eigen::Index>(batch.size()), params.config.latent);
    for (std::size_t i = 0; i < batch.size(); ++i) {
        z.row(static_cast<Eigen::Index>(i)) = encode_graph<T>(batch.graphs[i], params, nullptr, opts);
    }
    return z;
}

template <typename T>
Mat<T> project(const Mat<T>& z, const EncoderParams<T>& params, HeadCache<T>* cache) {
    if (z.cols() != params.config.latent) {
        throw ArgumentError("project: expected " + std::to_string(params.config.latent) +
                            " latent columns, got " + std::to_string(z.cols()));
    }
    Mat<T> u = (z * params.head1).rowwise() + params.head1_bias.row(0);
    Mat<T> a = params.config.head_activation ? gelu(u) : u;
    Mat<T> p = (a * params.head2).rowwise() + params.head2_bias.row(0);
    if (cache) {
        cache->z = z;
        cache->u = std::move(u);
        cache->a = std::move(a);
    }
    return p;
}

template <typename T>
Mat<T> project_backward(const HeadCache<T>& cache, const Mat<T>& dp, const EncoderParams<T>& params,
                        EncoderParams<T>& grads) {
    grads.head2.noalias() += cache.a.transpose() * dp;
    grads.head2_bias += dp.colwise().sum();
    Mat<T> du = dp * params.head2.transpose();
    if (params.config.head_activation) du = du.cwiseProduct(gelu_grad(cache.u));
    grads.head1.noalias() += cache.z.transpose() * du;
    grads.head1_bias += du.colwise().sum();
    return du * params.head1.transpose();
}

#define NEUROEMBED_ENCODER_INSTANTIATE(T)                                                         \
    template struct EncoderParams<T>;                                                             \
    template Mat<T> tokenize(const GraphInput<T>&, const EncoderParams<T>&);                      \
    template std::vector<Mat<T>> tokenize(const GraphBatch<T>&, const EncoderParams<T>&);         \
    template BiasCoefficients<T> bias_coefficients(const Mat<T>&, const Mat<T>&, bool);           \
    template Mat<T> graph_attention(const Mat<T>&, const Mat<T>&, const BiasCoefficients<T>&,     \
                                    const BlockParams<T>&, int, std::vector<Mat<T>>*, int);       \
    template Mat<T> scaled_dot_product_attention(const Mat<T>&, const BlockParams<T>&, int);      \
    template Mat<T> encode_graph(const GraphInput<T>&, const EncoderParams<T>&, GraphCache<T>*,   \
                                 const ForwardOptions<T>&);                                       \
    template void encode_graph_backward(const GraphInput<T>&, const EncoderParams<T>&,            \
                                        const GraphCache<T>&, const Mat<T>&, EncoderParams<T>&,   \
                                        const ForwardOptions<T>&);                                \
    template Mat<T> encode(const GraphBatch<T>&, const EncoderParams<T>&,                         \
                           const ForwardOptions<T>&);                                             \
    template Mat<T> project(const Mat<T>&, const EncoderParams<T>&, HeadCache<T>*);               \
    template Mat<T> project_backward(const HeadCache<T>&, const Mat<T>&, const EncoderParams<T>&, \
                                     EncoderParams<T>&);

NEUROEMBED_ENCODER_INSTANTIATE(float)
NEUROEMBED_ENCODER_INSTANTIATE(double)

} // namespace neuroembed
