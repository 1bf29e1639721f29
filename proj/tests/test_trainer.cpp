#include "doctest.h"

#include <fstream>
#include <limits>
#include <set>

#include "neuroembed/binary_io.hpp"
#include "neuroembed/trainer.hpp"
#include "support.hpp"

using namespace neuroembed;

namespace {

TrainConfig tiny_config() {
    TrainConfig cfg;
    cfg.encoder.dim = 8;
    cfg.encoder.heads = 2;
    cfg.encoder.blocks = 1;
    cfg.encoder.pe_dim = 3;
    cfg.encoder.latent = 4;
    cfg.encoder.head_hidden = 8;
    cfg.encoder.proj_dim = 16;
    cfg.augment.n_keep = 10;
    cfg.augment.n_drop_branches = 2;
    cfg.batch_size = 4;
    cfg.total_steps = 6;
    cfg.warmup_steps = 2;
    cfg.peak_lr = 1e-3;
    cfg.log_every = 2;
    cfg.validate_every = 3;
    cfg.checkpoint_every = 0;
    cfg.seed = 7;
    return cfg;
}

std::vector<NeuronGraph> dataset(std::size_t count, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<NeuronGraph> out;
    for (std::size_t i = 0; i < count; ++i) {
        NeuronGraph g = testing::random_tree(20 + uniform_index(rng, 10), rng);
        g.meta.source = "g" + std::to_string(i);
        out.push_back(std::move(g));
    }
    return out;
}

bool same_params(const EncoderParams<float>& a, const EncoderParams<float>& b) {
    const auto ta = a.tensors();
    const auto tb = b.tensors();
    for (std::size_t i = 0; i < ta.size(); ++i)
        if (*ta[i].second != *tb[i].second) return false;
    return true;
}

std::size_t count_lines(const std::filesystem::path& p, const std::string& prefix) {
    std::ifstream in(p);
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) n += line.rfind(prefix, 0) == 0;
    return n;
}

} // namespace

TEST_CASE("batch indices walk through shuffled epochs") {
    const std::size_t n = 10;
    std::vector<std::size_t> all;
    for (std::uint64_t step = 0; step < 5; ++step) {
        const auto idx = batch_indices(n, step, 4, 3);
        CHECK(idx.size() == 4);
        all.insert(all.end(), idx.begin(), idx.end());
    }
    CHECK(std::set<std::size_t>(all.begin(), all.begin() + 10).size() == 10);
    CHECK(std::set<std::size_t>(all.begin() + 10, all.begin() + 20).size() == 10);
    CHECK(batch_indices(n, 3, 4, 3) == batch_indices(n, 3, 4, 3));
    CHECK(batch_indices(n, 0, 10, 3) != batch_indices(n, 0, 10, 4));
    CHECK_THROWS_AS(batch_indices(0, 0, 4, 3), EmptyInputError);
}

TEST_CASE("training views are seeded by sample and step") {
    const auto data = dataset(2, 1);
    const TrainConfig cfg = tiny_config();
    const auto a = training_views(data[0], 0, 5, cfg);
    const auto b = training_views(data[0], 0, 5, cfg);
    CHECK(a.first.features == b.first.features);
    CHECK(a.second.pe == b.second.pe);
    CHECK(a.first.nodes() == 10);
    const auto c = training_views(data[0], 0, 6, cfg);
    CHECK(a.first.features != c.first.features);
}

TEST_CASE("train config validation") {
    TrainConfig cfg = tiny_config();
    cfg.teacher_temp = 0.2;
    CHECK_THROWS_AS(cfg.validate(), ArgumentError);
    cfg = tiny_config();
    cfg.warmup_steps = cfg.total_steps;
    CHECK_THROWS_AS(cfg.validate(), ArgumentError);
    cfg = tiny_config();
    cfg.batch_size = 0;
    CHECK_THROWS_AS(cfg.validate(), ArgumentError);
}

TEST_CASE("a step with zero learning rate and unit momentum changes nothing") {
    TrainConfig cfg = tiny_config();
    cfg.total_steps = 1;
    cfg.warmup_steps = 0;
    cfg.peak_lr = 0;
    cfg.ema_momentum = 1.0;
    const auto data = dataset(6, 2);
    const TrainState fresh = TrainState::fresh(cfg.encoder, cfg.seed);
    const TrainResult r = train(data, {}, cfg);
    CHECK(r.state.step == 1);
    CHECK(same_params(r.state.student, fresh.student));
    CHECK(same_params(r.state.teacher, fresh.teacher));
}

TEST_CASE("a teacher with unit momentum never moves while the student trains") {
    TrainConfig cfg = tiny_config();
    cfg.ema_momentum = 1.0;
    const auto data = dataset(6, 3);
    const TrainState fresh = TrainState::fresh(cfg.encoder, cfg.seed);
    const TrainResult r = train(data, {}, cfg);
    CHECK(same_params(r.state.teacher, fresh.teacher));
    CHECK_FALSE(same_params(r.state.student, fresh.student));
}

TEST_CASE("identical runs produce identical checkpoints and threads do not matter") {
    const auto data = dataset(10, 4);
    const auto val = dataset(3, 5);
    const auto d1 = testing::scratch_dir("trainer_a");
    const auto d2 = testing::scratch_dir("trainer_b");
    const auto d3 = testing::scratch_dir("trainer_c");
    TrainConfig cfg = tiny_config();
    cfg.deterministic = true;
    cfg.output_dir = d1;
    const TrainResult r1 = train(data, val, cfg);
    cfg.output_dir = d2;
    train(data, val, cfg);
    cfg.deterministic = false;
    cfg.threads = 3;
    cfg.output_dir = d3;
    train(data, val, cfg);
    const std::string c1 = read_file((d1 / "checkpoint.gdck").string());
    CHECK(c1 == read_file((d2 / "checkpoint.gdck").string()));
    CHECK(c1 == read_file((d3 / "checkpoint.gdck").string()));

    CHECK(r1.step_losses.size() == 6);
    CHECK(count_lines(d1 / "train.log", "train ") == 4);  // steps 0, 2, 4 and the last one
    CHECK(count_lines(d1 / "train.log", "val ") == 2);
    CHECK(r1.val_losses.size() == 2);
    for (const auto& d: {d1, d2, d3}) std::filesystem::remove_all(d);
}

TEST_CASE("resuming continues the same trajectory") {
    const auto data = dataset(8, 6);
    TrainConfig cfg = tiny_config();
    cfg.total_steps = 8;
    const TrainResult straight = train(data, {}, cfg);

    TrainConfig half = cfg;
    half.stop_at = 4;
    const TrainResult first = train(data, {}, half);
    CHECK(first.state.step == 4);
    const std::string bytes = encode_checkpoint(first.state, {});
    const TrainResult rest = train(data, {}, cfg, decode_checkpoint(bytes).state);
    CHECK(rest.state.step == 8);
    CHECK(rest.step_losses.size() == 4);
    CHECK(same_params(rest.state.student, straight.state.student));
    CHECK(same_params(rest.state.teacher, straight.state.teacher));
    CHECK(rest.state.center == straight.state.center);
}

TEST_CASE("small graphs are rejected before training") {
    TrainConfig cfg = tiny_config();
    cfg.augment.n_keep = 50;
    CHECK_THROWS_AS(train(dataset(4, 7), {}, cfg), StructuralError);
    CHECK_THROWS_AS(train({}, {}, tiny_config()), EmptyInputError);
}

TEST_CASE("a numeric failure writes an emergency checkpoint") {
    auto data = dataset(4, 8);
    for (auto& g: data) {
        for (auto& n: g.nodes) n.position.x = std::numeric_limits<double>::quiet_NaN();
    }
    const auto dir = testing::scratch_dir("emergency");
    TrainConfig cfg = tiny_config();
    cfg.output_dir = dir;
    CHECK_THROWS_AS(train(data, {}, cfg), NumericError);
    CHECK(std::filesystem::exists(dir / "checkpoint.emergency.gdck"));
    std::filesystem::remove_all(dir);
}

TEST_CASE("embedding is deterministic and averages views") {
    const auto data = dataset(5, 9);
    const TrainConfig cfg = tiny_config();
    const auto teacher = EncoderParams<float>::init(cfg.encoder, 3);
    EmbedConfig e;
    e.n_keep = 12;
    e.views = 1;
    const EmbeddingTable one = embed(data, teacher, e);
    CHECK(one.size() == 5);
    CHECK(one.z.cols() == 4);
    CHECK(one.ids[2] == "g2");
    e.views = 2;
    e.same_view_seeds = true;
    const EmbeddingTable two = embed(data, teacher, e);
    CHECK((two.z - one.z).cwiseAbs().maxCoeff() == 0.0);
    e.same_view_seeds = false;
    e.views = 4;
    const EmbeddingTable a = embed(data, teacher, e);
    e.threads = 3;
    const EmbeddingTable b = embed(data, teacher, e);
    CHECK(a.z == b.z);
    CHECK(a.z != one.z);
}
