#include "neuroembed/checkpoint.hpp"

#include <map>

#include "neuroembed/binary_io.hpp"

namespace neuroembed {

namespace {

void put_config(ByteWriter& w, const EncoderConfig& c) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(c.dim));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(c.pe_dim));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(c.blocks));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(c.heads));
    w.put<std::uint8_t>(c.tied_bias ? 1 : 0);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(c.latent));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(c.head_hidden));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(c.proj_dim));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(c.ff_mult));
    w.put<std::uint8_t>(c.head_activation ? 1 : 0);
}

EncoderConfig get_config(ByteReader& r) {
    EncoderConfig c;
    c.dim = static_cast<int>(r.get<std::uint32_t>());
    c.pe_dim = static_cast<int>(r.get<std::uint32_t>());
    c.blocks = static_cast<int>(r.get<std::uint32_t>());
    c.heads = static_cast<int>(r.get<std::uint32_t>());
    c.tied_bias = r.get<std::uint8_t>() != 0;
    c.latent = static_cast<int>(r.get<std::uint32_t>());
    c.head_hidden = static_cast<int>(r.get<std::uint32_t>());
    c.proj_dim = static_cast<int>(r.get<std::uint32_t>());
    c.ff_mult = static_cast<int>(r.get<std::uint32_t>());
    c.head_activation = r.get<std::uint8_t>() != 0;
    return c;
}

void put_tensor(ByteWriter& w, const std::string& name, const Mat<float>& m) {
    w.put_string(name);
    w.put<std::uint32_t>(2);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(m.rows()));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(m.cols()));
    w.put_raw(m.data(), sizeof(float) * static_cast<std::size_t>(m.size()));
}

std::string describe(const EncoderConfig& c) {
    return to_json(c).dump();
}

} // namespace

TrainState TrainState::fresh(const EncoderConfig& cfg, std::uint64_t seed) {
    TrainState s;
    s.student = EncoderParams<float>::init(cfg, seed);
    s.teacher = s.student;
    s.center = Mat<float>::Zero(1, cfg.proj_dim);
    s.adam = AdamState<float>::zeros(cfg);
    s.seed = seed;
    return s;
}

std::string encode_checkpoint(const TrainState& state, const nlohmann::json& meta) {
    ByteWriter w;
    w.put_raw("GDCK", 4);
    w.put<std::uint16_t>(checkpoint_version);
    put_config(w, state.student.config);

    nlohmann::json m;
    m["step"] = state.step;
    m["seed"] = state.seed;
    m["adam_t"] = state.adam.t;
    nlohmann::json hist = nlohmann::json::array();
    for (const auto& [step, loss]: state.loss_history) hist.push_back({step, loss});
    m["loss_history"] = hist;
    m["run"] = meta;
    w.put_string(m.dump());

    std::vector<std::pair<std::string, const Mat<float>*>> all;
    auto add = [&](const std::string& prefix, const EncoderParams<float>& p) {
        for (const auto& [name, t]: p.tensors()) all.emplace_back(prefix + name, t);
    };
    add("student/", state.student);
    add("teacher/", state.teacher);
    all.emplace_back("center", &state.center);
    add("adam_m/", state.adam.m);
    add("adam_v/", state.adam.v);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(all.size()));
    for (const auto& [name, t]: all) put_tensor(w, name, *t);
    return w.bytes();
}

Checkpoint decode_checkpoint(std::string_view bytes, const std::optional<EncoderConfig>& expected) {
    ByteReader r(bytes, "checkpoint");
    char magic[4];
    r.get_raw(magic, 4);
    if (std::string_view(magic, 4) != "GDCK") throw IoError("checkpoint: bad magic, not a GDCK file");
    const auto version = r.get<std::uint16_t>();
    if (version != checkpoint_version) {
        throw VersionError("checkpoint: format version " + std::to_string(version) +
                           " is not supported (expected " + std::to_string(checkpoint_version) + ")");
    }
    const EncoderConfig cfg = get_config(r);
    if (expected && !(*expected == cfg)) {
        throw VersionError("checkpoint: config " + describe(cfg) + " does not match expected " +
                           describe(*expected));
    }
    try {
        cfg.validate();
    }
    catch (const ArgumentError& e) {
        throw IoError(std::string("checkpoint: invalid config echo: ") + e.what());
    }

    Checkpoint ck;
    nlohmann::json m;
    try {
        m = nlohmann::json::parse(r.get_string());
    }
    catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("checkpoint: bad metadata: ") + e.what());
    }
    TrainState& s = ck.state;
    s.student = EncoderParams<float>::zeros(cfg);
    s.teacher = EncoderParams<float>::zeros(cfg);
    s.center = Mat<float>::Zero(1, cfg.proj_dim);
    s.adam = AdamState<float>::zeros(cfg);
    s.step = m.value("step", std::uint64_t{0});
    s.seed = m.value("seed", std::uint64_t{0});
    s.adam.t = m.value("adam_t", std::uint64_t{0});
    if (m.contains("loss_history")) {
        for (const auto& e: m["loss_history"]) {
            s.loss_history.emplace_back(e.at(0).get<std::uint64_t>(), e.at(1).get<double>());
        }
    }
    ck.meta = m.value("run", nlohmann::json::object());

    std::map<std::string, Mat<float>*> slots;
    auto add = [&](const std::string& prefix, EncoderParams<float>& p) {
        for (auto& [name, t]: p.tensors()) slots[prefix + name] = t;
    };
    add("student/", s.student);
    add("teacher/", s.teacher);
    slots["center"] = &s.center;
    add("adam_m/", s.adam.m);
    add("adam_v/", s.adam.v);

    const auto count = r.get<std::uint32_t>();
    std::size_t filled = 0;
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::string name = r.get_string();
        const auto rank = r.get<std::uint32_t>();
        if (rank != 2) throw IoError("checkpoint: tensor '" + name + "' has unsupported rank");
        const auto rows = r.get<std::uint32_t>();
        const auto cols = r.get<std::uint32_t>();
        auto it = slots.find(name);
        if (it == slots.end()) throw IoError("checkpoint: unexpected tensor '" + name + "'");
        Mat<float>& t = *it->second;
        if (t.rows() != rows || t.cols() != cols) {
            throw VersionError("checkpoint: tensor '" + name + "' has shape " + std::to_string(rows) +
                               "x" + std::to_string(cols) + ", config implies " +
                               std::to_string(t.rows()) + "x" + std::to_string(t.cols()));
        }
        r.get_raw(t.data(), sizeof(float) * static_cast<std::size_t>(t.size()));
        ++filled;
    }
    if (filled != slots.size()) throw IoError("checkpoint: missing tensors");
    if (!r.at_end()) throw IoError("checkpoint: trailing bytes");
    return ck;
}

void save_checkpoint(const std::filesystem::path& path, const TrainState& state,
                     const nlohmann::json& meta) {
    const auto tmp = path.string() + ".tmp";
    write_file(tmp, encode_checkpoint(state, meta));
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("cannot move checkpoint into place at '" + path.string() + "': " + ec.message());
}

Checkpoint load_checkpoint(const std::filesystem::path& path, const std::optional<EncoderConfig>& expected) {
    return decode_checkpoint(read_file(path.string()), expected);
}

nlohmann::json to_json(const EncoderConfig& c) {
    return {{"dim", c.dim},           {"heads", c.heads},
            {"blocks", c.blocks},     {"pe_dim", c.pe_dim},
            {"latent", c.latent},     {"ff_mult", c.ff_mult},
            {"head_hidden", c.head_hidden}, {"proj_dim", c.proj_dim},
            {"tied_bias", c.tied_bias}, {"head_activation", c.head_activation}};
}

EncoderConfig encoder_config_from_json(const nlohmann::json& j, EncoderConfig c) {
    c.dim = j.value("dim", c.dim);
    c.heads = j.value("heads", c.heads);
    c.blocks = j.value("blocks", c.blocks);
    c.pe_dim = j.value("pe_dim", c.pe_dim);
    c.latent = j.value("latent", c.latent);
    c.ff_mult = j.value("ff_mult", c.ff_mult);
    c.head_hidden = j.value("head_hidden", c.head_hidden);
    c.proj_dim = j.value("proj_dim", c.proj_dim);
    c.tied_bias = j.value("tied_bias", c.tied_bias);
    c.head_activation = j.value("head_activation", c.head_activation);
    return c;
}

} // namespace neuroembed
