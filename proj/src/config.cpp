#include "neuroembed/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "neuroembed/binary_io.hpp"

namespace neuroembed {

using nlohmann::json;

namespace {

template <typename T>
json optional_json(const std::optional<T>& v) {
    return v ? json(*v) : json(nullptr);
}

// Rejects keys that the defaults do not know about, so typos fail loudly.
void check_keys(const json& patch, const json& known, const std::string& prefix) {
    if (!patch.is_object()) return;
    for (const auto& [key, value]: patch.items()) {
        const std::string path = prefix.empty() ? key : prefix + "." + key;
        if (!known.contains(key)) throw ArgumentError("config: unknown key '" + path + "'");
        if (value.is_object() && known.at(key).is_object()) check_keys(value, known.at(key), path);
        else if (value.is_object() && !known.at(key).is_null()) {
            throw ArgumentError("config: key '" + path + "' must not be an object");
        }
    }
}

class Reader {
public:
    explicit Reader(const json& root): root_(root) {}

    template <typename T>
    void get(const char* section, const char* key, T& out) const {
        const json* node = section ? &root_.at(section) : &root_;
        if (!node->contains(key)) return;
        const std::string path = section ? std::string(section) + "." + key : std::string(key);
        try {
            node->at(key).get_to(out);
        }
        catch (const json::exception&) {
            throw ArgumentError("config: key '" + path + "' has the wrong type");
        }
    }

    template <typename T>
    void get_optional(const char* section, const char* key, std::optional<T>& out) const {
        const json& node = root_.at(section);
        if (!node.contains(key) || node.at(key).is_null()) {
            out.reset();
            return;
        }
        T v{};
        get(section, key, v);
        out = v;
    }

private:
    const json& root_;
};

std::string tag_of(const json& j) {
    if (j.contains("dataset") && j.at("dataset").is_object() && j.at("dataset").contains("tag")) {
        if (!j.at("dataset").at("tag").is_string()) throw ArgumentError("config: key 'dataset.tag' must be a string");
        return j.at("dataset").at("tag").get<std::string>();
    }
    return "synthetic";
}

} // namespace

RunConfig RunConfig::for_tag(const std::string& tag) {
    RunConfig c;
    c.tag = tag;
    if (tag == "aba") {
        c.preprocess.soma_mode = SomaMode::relative_depth;
        c.preprocess.remove_axon = false;
        c.train.augment = AugmentConfig::aba();
        c.train.total_steps = 100000;
    }
    else if (tag == "bbp") {
        c.preprocess.soma_mode = SomaMode::soma_origin;
        c.preprocess.remove_axon = true;
        c.train.augment = AugmentConfig::bbp();
        c.train.total_steps = 200000;
    }
    else if (tag == "synthetic") {
        // Desk-scale defaults: synthetic graphs have a few hundred nodes.
        c.preprocess.soma_mode = SomaMode::relative_depth;
        c.preprocess.remove_axon = false;
        c.train.augment = AugmentConfig::aba();
        c.train.augment.n_keep = 100;
        c.train.batch_size = 32;
        c.train.total_steps = 2000;
        c.train.warmup_steps = 200;
        c.train.checkpoint_every = 500;
        c.train.validate_every = 100;
        c.train.log_every = 10;
        c.cluster.k_max = 10;
        c.cluster.repeats = 20;
        c.cluster.runs = 25;
    }
    else {
        throw ArgumentError("config: unknown dataset tag '" + tag + "' (expected aba, bbp or synthetic)");
    }
    return c;
}

void RunConfig::propagate() {
    train.seed = seed;
    train.threads = threads;
    train.deterministic = deterministic;
    train.output_dir = output_dir;
    evaluate.forest.seed = seed;
    evaluate.forest.threads = deterministic ? 1u : threads;
}

void RunConfig::validate() const {
    if (tag != "aba" && tag != "bbp" && tag != "synthetic") throw ArgumentError("config: unknown dataset tag '" + tag + "'");
    if (!(split_fraction > 0.0 && split_fraction <= 1.0)) throw ArgumentError("config: train.split_fraction must lie in (0, 1]");
    if (preprocess.subsample < 2) throw ArgumentError("config: preprocess.subsample must be >= 2");
    if (threads < 1) throw ArgumentError("config: threads must be >= 1");
    if (output_dir.empty()) throw ArgumentError("config: output_dir must not be empty");
    train.validate();
    if (embed.views < 1) throw ArgumentError("config: embed.views must be >= 1");
    if (embed.n_keep && *embed.n_keep < 2) throw ArgumentError("config: embed.n_keep must be >= 2");
    if (cluster.k_min < 1 || cluster.k_max < cluster.k_min) throw ArgumentError("config: need 1 <= cluster.k_min <= cluster.k_max");
    if (cluster.folds < 2) throw ArgumentError("config: cluster.folds must be >= 2");
    if (cluster.repeats < 1) throw ArgumentError("config: cluster.repeats must be >= 1");
    if (cluster.runs < 1) throw ArgumentError("config: cluster.runs must be >= 1");
    if (cluster.k && *cluster.k < 1) throw ArgumentError("config: cluster.k must be >= 1");
    if (evaluate.forest.n_trees < 1) throw ArgumentError("config: evaluate.n_trees must be >= 1");
    if (evaluate.forest.min_leaf < 1) throw ArgumentError("config: evaluate.min_leaf must be >= 1");
    if (evaluate.cv_folds < 2) throw ArgumentError("config: evaluate.cv_folds must be >= 2");
    if (evaluate.cv_repeats < 0) throw ArgumentError("config: evaluate.cv_repeats must be >= 0");
}

json to_json(const RunConfig& c) {
    const auto& t = c.train;
    const auto& a = t.augment;
    return {
        {"seed", c.seed},
        {"threads", c.threads},
        {"deterministic", c.deterministic},
        {"output_dir", c.output_dir.string()},
        {"dataset", {{"tag", c.tag}, {"inputs", c.inputs}}},
        {"preprocess",
         {{"soma_mode", to_string(c.preprocess.soma_mode)},
          {"remove_axon", c.preprocess.remove_axon},
          {"subsample", c.preprocess.subsample}}},
        {"augment",
         {{"n_keep", a.n_keep},
          {"sigma_jitter", a.sigma_jitter},
          {"n_drop_branches", a.n_drop_branches},
          {"n_cum_branches", a.n_cum_branches},
          {"sigma_cum", a.sigma_cum},
          {"sigma_soma", a.sigma_soma},
          {"min_nodes", optional_json(a.min_nodes)},
          {"fixed_rotation", optional_json(a.fixed_rotation)}}},
        {"encoder", to_json(t.encoder)},
        {"features",
         {{"coord_scale", t.features.coord_scale},
          {"radius_scale", t.features.radius_scale},
          {"pe_order", to_string(t.pe_order)}}},
        {"train",
         {{"batch_size", t.batch_size},
          {"total_steps", t.total_steps},
          {"warmup_steps", t.warmup_steps},
          {"peak_lr", t.peak_lr},
          {"teacher_temp", t.teacher_temp},
          {"student_temp", t.student_temp},
          {"ema_momentum", t.ema_momentum},
          {"center_momentum", t.center_momentum},
          {"log_every", t.log_every},
          {"checkpoint_every", t.checkpoint_every},
          {"validate_every", t.validate_every},
          {"split_fraction", c.split_fraction}}},
        {"embed", {{"views", c.embed.views}, {"n_keep", optional_json(c.embed.n_keep)}}},
        {"cluster",
         {{"k_min", c.cluster.k_min},
          {"k_max", c.cluster.k_max},
          {"folds", c.cluster.folds},
          {"repeats", c.cluster.repeats},
          {"runs", c.cluster.runs},
          {"k", optional_json(c.cluster.k)}}},
        {"evaluate",
         {{"n_trees", c.evaluate.forest.n_trees},
          {"max_features", optional_json(c.evaluate.forest.max_features)},
          {"min_leaf", c.evaluate.forest.min_leaf},
          {"cv_folds", c.evaluate.cv_folds},
          {"cv_repeats", c.evaluate.cv_repeats},
          {"reference", c.evaluate.reference}}},
    };
}

RunConfig run_config_from_json(const json& patch) {
    if (!patch.is_object()) throw ArgumentError("config: top level must be a JSON object");
    RunConfig c = RunConfig::for_tag(tag_of(patch));
    const json defaults = to_json(c);
    check_keys(patch, defaults, "");
    json j = defaults;
    j.merge_patch(patch);
    for (const char* section: {"dataset", "preprocess", "augment", "encoder", "features", "train", "embed", "cluster",
                               "evaluate"}) {
        if (!j.contains(section)) j[section] = json::object();
    }

    Reader r(j);
    r.get(nullptr, "seed", c.seed);
    r.get(nullptr, "threads", c.threads);
    r.get(nullptr, "deterministic", c.deterministic);
    std::string out = c.output_dir.string();
    r.get(nullptr, "output_dir", out);
    c.output_dir = out;

    r.get("dataset", "inputs", c.inputs);

    std::string soma = to_string(c.preprocess.soma_mode);
    r.get("preprocess", "soma_mode", soma);
    try {
        c.preprocess.soma_mode = soma_mode_from_string(soma);
    }
    catch (const Error&) {
        throw ArgumentError("config: preprocess.soma_mode must be relative_depth or soma_origin");
    }
    r.get("preprocess", "remove_axon", c.preprocess.remove_axon);
    r.get("preprocess", "subsample", c.preprocess.subsample);

    auto& a = c.train.augment;
    r.get("augment", "n_keep", a.n_keep);
    r.get("augment", "sigma_jitter", a.sigma_jitter);
    r.get("augment", "n_drop_branches", a.n_drop_branches);
    r.get("augment", "n_cum_branches", a.n_cum_branches);
    r.get("augment", "sigma_cum", a.sigma_cum);
    r.get("augment", "sigma_soma", a.sigma_soma);
    r.get_optional("augment", "min_nodes", a.min_nodes);
    r.get_optional("augment", "fixed_rotation", a.fixed_rotation);

    try {
        c.train.encoder = encoder_config_from_json(j.at("encoder"), c.train.encoder);
    }
    catch (const json::exception&) {
        throw ArgumentError("config: encoder section has a value of the wrong type");
    }

    r.get("features", "coord_scale", c.train.features.coord_scale);
    r.get("features", "radius_scale", c.train.features.radius_scale);
    std::string order = to_string(c.train.pe_order);
    r.get("features", "pe_order", order);
    try {
        c.train.pe_order = pe_order_from_string(order);
    }
    catch (const Error&) {
        throw ArgumentError("config: features.pe_order must be largest or smallest_nontrivial");
    }

    auto& t = c.train;
    r.get("train", "batch_size", t.batch_size);
    r.get("train", "total_steps", t.total_steps);
    r.get("train", "warmup_steps", t.warmup_steps);
    r.get("train", "peak_lr", t.peak_lr);
    r.get("train", "teacher_temp", t.teacher_temp);
    r.get("train", "student_temp", t.student_temp);
    r.get("train", "ema_momentum", t.ema_momentum);
    r.get("train", "center_momentum", t.center_momentum);
    r.get("train", "log_every", t.log_every);
    r.get("train", "checkpoint_every", t.checkpoint_every);
    r.get("train", "validate_every", t.validate_every);
    r.get("train", "split_fraction", c.split_fraction);
    const bool warmup_given = patch.contains("train") && patch.at("train").contains("warmup_steps");
    if (!warmup_given && t.warmup_steps >= t.total_steps) t.warmup_steps = t.total_steps / 10;

    r.get("embed", "views", c.embed.views);
    r.get_optional("embed", "n_keep", c.embed.n_keep);

    r.get("cluster", "k_min", c.cluster.k_min);
    r.get("cluster", "k_max", c.cluster.k_max);
    r.get("cluster", "folds", c.cluster.folds);
    r.get("cluster", "repeats", c.cluster.repeats);
    r.get("cluster", "runs", c.cluster.runs);
    r.get_optional("cluster", "k", c.cluster.k);

    r.get("evaluate", "n_trees", c.evaluate.forest.n_trees);
    r.get_optional("evaluate", "max_features", c.evaluate.forest.max_features);
    r.get("evaluate", "min_leaf", c.evaluate.forest.min_leaf);
    r.get("evaluate", "cv_folds", c.evaluate.cv_folds);
    r.get("evaluate", "cv_repeats", c.evaluate.cv_repeats);
    r.get("evaluate", "reference", c.evaluate.reference);

    c.propagate();
    c.validate();
    return c;
}

RunConfig resolve_config(const std::optional<std::filesystem::path>& file, const json& patch) {
    json merged = json::object();
    if (file) {
        const std::string text = read_file(file->string());
        try {
            merged = json::parse(text);
        }
        catch (const json::parse_error& e) {
            throw ArgumentError("config: " + file->string() + " is not valid JSON: " + e.what());
        }
        if (!merged.is_object()) throw ArgumentError("config: " + file->string() + " must hold a JSON object");
    }
    const bool file_sets_out = merged.contains("output_dir");
    merged.merge_patch(patch);
    if (!patch.contains("output_dir")) {
        if (const char* env = std::getenv(output_dir_env); env && *env) merged["output_dir"] = env;
        else if (!file_sets_out) merged.erase("output_dir");
    }
    return run_config_from_json(merged);
}

} // namespace neuroembed
