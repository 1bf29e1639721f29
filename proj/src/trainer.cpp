#include "neuroembed/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "neuroembed/log.hpp"
#include "neuroembed/parallel.hpp"

namespace neuroembed {

namespace {

constexpr std::size_t grad_chunk = 8;
constexpr std::uint64_t validation_stream = 0x76616c6964ULL;

unsigned worker_count(const TrainConfig& cfg) { return cfg.deterministic ? 1u : std::max(1u, cfg.threads); }

std::string format_line(const char* kind, std::uint64_t step, double lr, double loss, double center_norm,
                        double wall) {
    char buf[192];
    std::snprintf(buf, sizeof buf, "%s step=%llu lr=%.6e loss=%.6f center_norm=%.6f wall=%.3f", kind,
                  static_cast<unsigned long long>(step), lr, loss, center_norm, wall);
    return buf;
}

template <typename T>
void add_into(EncoderParams<T>& dst, const EncoderParams<T>& src) {
    auto d = dst.tensors();
    auto s = src.tensors();
    for (std::size_t i = 0; i < d.size(); ++i) *d[i].second += *s[i].second;
}

} // namespace

void TrainConfig::validate() const {
    if (batch_size < 1) throw ArgumentError("train: batch_size must be >= 1");
    if (!(teacher_temp > 0.0) || !(teacher_temp <= student_temp)) {
        throw ArgumentError("train: need 0 < teacher_temp <= student_temp");
    }
    if (!(ema_momentum >= 0.0 && ema_momentum <= 1.0)) {
        throw ArgumentError("train: ema_momentum must lie in [0, 1]");
    }
    if (!(center_momentum >= 0.0 && center_momentum < 1.0)) {
        throw ArgumentError("train: center_momentum must lie in [0, 1)");
    }
    if (warmup_steps >= total_steps) throw ArgumentError("train: warmup_steps must be < total_steps");
    if (!(peak_lr >= 0.0)) throw ArgumentError("train: peak_lr must be >= 0");
    if (log_every < 1) throw ArgumentError("train: log_every must be >= 1");
    encoder.validate();
    augment.validate();
}

double lr_at(std::uint64_t step, const TrainConfig& cfg) {
    return lr_schedule(step, cfg.warmup_steps, cfg.total_steps, cfg.peak_lr);
}

template <typename T>
ObjectiveResult<T> dino_objective(const EncoderParams<T>& student, const EncoderParams<T>& teacher,
                                  const Mat<T>& center, const GraphBatch<T>& view1,
                                  const GraphBatch<T>& view2, double student_temp,
                                  double teacher_temp, bool with_grad, unsigned threads) {
    const std::size_t b = view1.size();
    if (b == 0 || view2.size() != b) throw ArgumentError("dino_objective: view batches must be non-empty and equal");
    const std::size_t total = 2 * b;
    auto graph = [&](std::size_t i) -> const GraphInput<T>& {
        return i < b ? view1.graphs[i] : view2.graphs[i - b];
    };
    const Eigen::Index latent = student.config.latent;
    Mat<T> zs(static_cast<Eigen::Index>(total), latent);
    Mat<T> zt(static_cast<Eigen::Index>(total), latent);
    std::vector<GraphCache<T>> caches(with_grad ? total : 0);
    parallel_for(total, threads, [&](std::size_t i) {
        const auto r = static_cast<Eigen::Index>(i);
        zs.row(r) = encode_graph(graph(i), student, with_grad ? &caches[i] : nullptr);
        zt.row(r) = encode_graph(graph(i), teacher);
    });

    const auto bi = static_cast<Eigen::Index>(b);
    HeadCache<T> hc1, hc2;
    const Mat<T> ps1 = project<T>(zs.topRows(bi), student, &hc1);
    const Mat<T> ps2 = project<T>(zs.bottomRows(bi), student, &hc2);
    ObjectiveResult<T> out;
    out.teacher1 = project<T>(zt.topRows(bi), teacher);
    out.teacher2 = project<T>(zt.bottomRows(bi), teacher);
    const DinoLoss<T> loss =
        dino_loss(ps1, ps2, out.teacher1, out.teacher2, center, student_temp, teacher_temp);
    out.loss = loss.value;
    if (!with_grad) return out;

    out.grads = EncoderParams<T>::zeros(student.config);
    Mat<T> dz(static_cast<Eigen::Index>(total), latent);
    dz.topRows(bi) = project_backward(hc1, loss.grad_student1, student, out.grads);
    dz.bottomRows(bi) = project_backward(hc2, loss.grad_student2, student, out.grads);

    const std::size_t chunks = (total + grad_chunk - 1) / grad_chunk;
    std::vector<EncoderParams<T>> partial(chunks);
    parallel_for(chunks, threads, [&](std::size_t c) {
        partial[c] = EncoderParams<T>::zeros(student.config);
        const std::size_t end = std::min(total, (c + 1) * grad_chunk);
        for (std::size_t i = c * grad_chunk; i < end; ++i) {
            const Mat<T> dzi = dz.row(static_cast<Eigen::Index>(i));
            encode_graph_backward(graph(i), student, caches[i], dzi, partial[c]);
            caches[i] = GraphCache<T>();
        }
    });
    for (const auto& p: partial) add_into(out.grads, p);
    return out;
}

template ObjectiveResult<float> dino_objective(const EncoderParams<float>&, const EncoderParams<float>&,
                                               const Mat<float>&, const GraphBatch<float>&,
                                               const GraphBatch<float>&, double, double, bool, unsigned);
template ObjectiveResult<double> dino_objective(const EncoderParams<double>&, const EncoderParams<double>&,
                                                const Mat<double>&, const GraphBatch<double>&,
                                                const GraphBatch<double>&, double, double, bool, unsigned);

std::vector<std::size_t> batch_indices(std::size_t dataset_size, std::uint64_t step,
                                       std::size_t batch_size, std::uint64_t seed) {
    if (dataset_size == 0) throw EmptyInputError("training set is empty");
    std::vector<std::size_t> out;
    out.reserve(batch_size);
    std::uint64_t cached_epoch = ~std::uint64_t{0};
    std::vector<std::size_t> order;
    for (std::size_t j = 0; j < batch_size; ++j) {
        const std::uint64_t pos = step * batch_size + j;
        const std::uint64_t epoch = pos / dataset_size;
        if (epoch != cached_epoch) {
            order.resize(dataset_size);
            std::iota(order.begin(), order.end(), std::size_t{0});
            Rng rng(derive_seed(seed, 0x65706f6368ULL, epoch));
            for (std::size_t i = dataset_size; i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);
            cached_epoch = epoch;
        }
        out.push_back(order[pos % dataset_size]);
    }
    return out;
}

std::pair<GraphInput<float>, GraphInput<float>> training_views(const NeuronGraph& g, std::uint64_t index,
                                                               std::uint64_t step, const TrainConfig& cfg) {
    Rng rng(derive_seed(cfg.seed, index, step));
    auto [a, b] = make_two_views(g, cfg.augment, rng);
    const PeOptions pe{cfg.pe_order, SignMode::random};
    const auto k = static_cast<std::size_t>(cfg.encoder.pe_dim);
    GraphInput<float> va = make_graph_input(a, cfg.features, k, pe, &rng).cast<float>();
    GraphInput<float> vb = make_graph_input(b, cfg.features, k, pe, &rng).cast<float>();
    return {std::move(va), std::move(vb)};
}

namespace {

struct ViewBatch {
    GraphBatch<float> first, second;
};

ViewBatch build_views(const std::vector<NeuronGraph>& data, const std::vector<std::size_t>& idx,
                      std::uint64_t index_offset, std::uint64_t step, const TrainConfig& cfg,
                      unsigned threads) {
    ViewBatch vb;
    vb.first.graphs.resize(idx.size());
    vb.second.graphs.resize(idx.size());
    parallel_for(idx.size(), threads, [&](std::size_t j) {
        auto [a, b] = training_views(data[idx[j]], index_offset + idx[j], step, cfg);
        vb.first.graphs[j] = std::move(a);
        vb.second.graphs[j] = std::move(b);
    });
    return vb;
}

double validation_loss(const std::vector<NeuronGraph>& val, const TrainState& s, const TrainConfig& cfg,
                       unsigned threads) {
    double weighted = 0;
    std::size_t count = 0;
    for (std::size_t start = 0; start < val.size(); start += cfg.batch_size) {
        std::vector<std::size_t> idx;
        for (std::size_t i = start; i < std::min(val.size(), start + cfg.batch_size); ++i) idx.push_back(i);
        const ViewBatch vb = build_views(val, idx, validation_stream, 0, cfg, threads);
        const auto r = dino_objective(s.student, s.teacher, s.center, vb.first, vb.second,
                                      cfg.student_temp, cfg.teacher_temp, false, threads);
        weighted += r.loss * static_cast<double>(idx.size());
        count += idx.size();
    }
    return weighted / static_cast<double>(count);
}

} // namespace

TrainResult train(const std::vector<NeuronGraph>& train_set, const std::vector<NeuronGraph>& val_set,
                  const TrainConfig& cfg, std::optional<TrainState> resume, const nlohmann::json& meta) {
    cfg.validate();
    if (train_set.empty()) throw EmptyInputError("train: training set is empty");
    for (const auto& g: train_set) {
        if (g.size() < cfg.augment.n_keep) {
            throw StructuralError("train: graph '" + g.meta.source + "' has " + std::to_string(g.size()) +
                                  " nodes, fewer than n_keep=" + std::to_string(cfg.augment.n_keep));
        }
    }
    const unsigned threads = worker_count(cfg);
    TrainResult result;
    TrainState& s = result.state;
    if (resume) {
        if (!(resume->student.config == cfg.encoder)) {
            throw VersionError("train: resume checkpoint encoder config differs from the run config");
        }
        s = std::move(*resume);
    }
    else {
        s = TrainState::fresh(cfg.encoder, cfg.seed);
    }

    const bool write = !cfg.output_dir.empty();
    std::ofstream log;
    if (write) {
        std::filesystem::create_directories(cfg.output_dir);
        log.open(cfg.output_dir / "train.log", resume ? std::ios::app : std::ios::trunc);
        if (!log) throw IoError("cannot open '" + (cfg.output_dir / "train.log").string() + "'");
    }
    const auto t0 = std::chrono::steady_clock::now();
    auto wall = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };
    auto emit = [&](const std::string& line) {
        log_info(line);
        if (write) log << line << '\n' << std::flush;
    };
    auto checkpoint = [&](const std::string& name) {
        if (write) save_checkpoint(cfg.output_dir / name, s, meta);
    };

    std::uint64_t step = s.step;
    const std::uint64_t end = cfg.stop_at > 0 ? std::min(cfg.stop_at, cfg.total_steps) : cfg.total_steps;
    try {
        for (; step < end; ++step) {
            const auto idx = batch_indices(train_set.size(), step, cfg.batch_size, cfg.seed);
            const ViewBatch vb = build_views(train_set, idx, 0, step, cfg, threads);
            auto obj = dino_objective(s.student, s.teacher, s.center, vb.first, vb.second,
                                      cfg.student_temp, cfg.teacher_temp, true, threads);
            const double lr = lr_at(step, cfg);
            adam_step(s.student, obj.grads, s.adam, lr);
            if (!s.student.all_finite()) throw NumericError("non-finite student parameters after update");
            ema_update(s.teacher, s.student, cfg.ema_momentum);
            update_center(s.center, obj.teacher1, obj.teacher2, cfg.center_momentum);
            s.step = step + 1;
            result.step_losses.push_back(obj.loss);

            if (step % cfg.log_every == 0 || step + 1 == cfg.total_steps) {
                s.loss_history.emplace_back(step, obj.loss);
                emit(format_line("train", step, lr, obj.loss, s.center.norm(), wall()));
            }
            if (cfg.validate_every > 0 && !val_set.empty() && (step + 1) % cfg.validate_every == 0) {
                const double vl = validation_loss(val_set, s, cfg, threads);
                result.val_losses.emplace_back(step + 1, vl);
                emit(format_line("val", step + 1, lr, vl, s.center.norm(), wall()));
            }
            if (cfg.checkpoint_every > 0 && (step + 1) % cfg.checkpoint_every == 0 &&
                step + 1 < cfg.total_steps) {
                checkpoint("checkpoint.gdck");
            }
        }
    }
    catch (const NumericError& e) {
        checkpoint("checkpoint.emergency.gdck");
        throw NumericError("training failed at step " + std::to_string(step) + ": " + e.what());
    }
    checkpoint("checkpoint.gdck");
    return result;
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c: s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

EmbeddingTable embed(const std::vector<NeuronGraph>& dataset, const EncoderParams<float>& teacher,
                     const EmbedConfig& cfg) {
    if (cfg.views < 1) throw ArgumentError("embed: views must be >= 1");
    EmbeddingTable table;
    table.ids.reserve(dataset.size());
    for (const auto& g: dataset) table.ids.push_back(g.meta.source);
    table.z = MatD::Zero(static_cast<Eigen::Index>(dataset.size()), teacher.config.latent);
    const PeOptions pe{cfg.pe_order, SignMode::fixed};
    const auto k = static_cast<std::size_t>(teacher.config.pe_dim);
    parallel_for(dataset.size(), std::max(1u, cfg.threads), [&](std::size_t i) {
        const NeuronGraph& g = dataset[i];
        const std::uint64_t base = fnv1a(g.meta.source);
        VecD acc = VecD::Zero(teacher.config.latent);
        for (std::size_t v = 0; v < cfg.views; ++v) {
            Rng rng(derive_seed(base, cfg.same_view_seeds ? 0 : v));
            const NeuronGraph view = g.size() > cfg.n_keep ? subsample(g, cfg.n_keep, rng) : g;
            const GraphInput<float> in = make_graph_input(view, cfg.features, k, pe).cast<float>();
            acc += encode_graph(in, teacher).row(0).transpose().cast<double>();
        }
        table.z.row(static_cast<Eigen::Index>(i)) = (acc / static_cast<double>(cfg.views)).transpose();
    });
    return table;
}

} // namespace neuroembed
