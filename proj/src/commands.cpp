#include "neuroembed/commands.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "neuroembed/binary_io.hpp"
#include "neuroembed/cluster_metrics.hpp"
#include "neuroembed/forest.hpp"
#include "neuroembed/gmm.hpp"
#include "neuroembed/graph_io.hpp"
#include "neuroembed/log.hpp"
#include "neuroembed/parallel.hpp"
#include "neuroembed/synth.hpp"

namespace neuroembed {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string path_in(const RunConfig& cfg, const char* name) { return (cfg.output_dir / name).string(); }

void require_artifact(const RunConfig& cfg, const char* name, const char* producer) {
    const fs::path p = cfg.output_dir / name;
    if (!fs::exists(p)) {
        throw IoError("missing '" + p.string() + "'; run `neuroembed " + producer + "` with the same output directory first");
    }
}

void write_json(const std::string& path, const json& j) { write_file(path, j.dump(2) + "\n"); }

void write_effective_config(const RunConfig& cfg, const char* command) {
    fs::create_directories(cfg.output_dir);
    write_json(path_in(cfg, (std::string(command) + ".config.json").c_str()), to_json(cfg));
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::vector<std::string> csv_lines(const std::string& path) {
    const std::string text = read_file(path);
    std::vector<std::string> lines;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) lines.push_back(line);
    }
    if (lines.empty()) throw EmptyInputError(path + ": empty file");
    return lines;
}

std::optional<int> parse_int(const std::string& s) {
    int v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

std::vector<fs::path> expand_inputs(const std::vector<std::string>& inputs, std::vector<std::string>& failures) {
    std::vector<fs::path> files;
    for (const auto& in: inputs) {
        const fs::path p(in);
        std::error_code ec;
        if (fs::is_directory(p, ec)) {
            std::vector<fs::path> found;
            for (const auto& e: fs::directory_iterator(p)) {
                std::string ext = e.path().extension().string();
                std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
                if (e.is_regular_file() && ext == ".swc") found.push_back(e.path());
            }
            std::sort(found.begin(), found.end());
            if (found.empty()) failures.push_back(in + ": directory holds no .swc files");
            files.insert(files.end(), found.begin(), found.end());
        }
        else if (fs::is_regular_file(p, ec)) {
            files.push_back(p);
        }
        else {
            failures.push_back(in + ": no such file or directory");
        }
    }
    return files;
}

struct IngestEntry {
    std::string source, path, error;
    std::size_t nodes_in = 0, nodes_out = 0, components = 0;
    bool unknown_compartment = false;
    int merged_soma_samples = 0;
    NeuronGraph graph;
};

EmbedConfig embed_config(const RunConfig& cfg) {
    EmbedConfig e;
    e.views = cfg.embed.views;
    e.n_keep = cfg.embed.n_keep.value_or(cfg.train.augment.n_keep);
    e.features = cfg.train.features;
    e.pe_order = cfg.train.pe_order;
    e.threads = cfg.deterministic ? 1u : cfg.threads;
    return e;
}

unsigned workers(const RunConfig& cfg) { return cfg.deterministic ? 1u : std::max(1u, cfg.threads); }

std::vector<int> align_labels(const std::vector<std::string>& ids, const LabelTable& ref, const std::string& what) {
    std::map<std::string, int> by_id;
    for (std::size_t i = 0; i < ref.ids.size(); ++i) by_id[ref.ids[i]] = ref.labels[i];
    std::vector<int> out;
    out.reserve(ids.size());
    std::vector<std::string> missing;
    for (const auto& id: ids) {
        auto it = by_id.find(id);
        if (it == by_id.end()) missing.push_back(id);
        else out.push_back(it->second);
    }
    if (!missing.empty()) {
        std::string list;
        for (std::size_t i = 0; i < std::min<std::size_t>(missing.size(), 5); ++i) list += (i ? ", " : "") + missing[i];
        throw StructuralError(what + ": " + std::to_string(missing.size()) + " ids have no reference label (" + list +
                              (missing.size() > 5 ? ", ..." : "") + ")");
    }
    return out;
}

} // namespace

LabelTable read_labels_csv(const std::string& path) {
    const auto lines = csv_lines(path);
    const auto header = split_csv(lines[0]);
    if (header.size() < 2 || header[0] != "id" || header[1] != "label") {
        throw ParseError(path + ": expected header 'id,label'", 1);
    }
    LabelTable t;
    std::vector<std::string> raw;
    std::set<std::string> seen;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto cells = split_csv(lines[i]);
        if (cells.size() < 2) throw ParseError(path + ": expected 2 columns", i + 1);
        if (!seen.insert(cells[0]).second) throw ParseError(path + ": duplicate id '" + cells[0] + "'", i + 1);
        t.ids.push_back(cells[0]);
        raw.push_back(cells[1]);
    }
    if (t.ids.empty()) throw EmptyInputError(path + ": no rows");
    const bool numeric = std::all_of(raw.begin(), raw.end(), [](const std::string& s) { return parse_int(s).has_value(); });
    if (numeric) {
        for (const auto& s: raw) t.labels.push_back(*parse_int(s));
        return t;
    }
    std::set<std::string> distinct(raw.begin(), raw.end());
    t.names.assign(distinct.begin(), distinct.end());
    for (const auto& s: raw) {
        t.labels.push_back(static_cast<int>(std::lower_bound(t.names.begin(), t.names.end(), s) - t.names.begin()));
    }
    return t;
}

ClusterTable read_clusters_csv(const std::string& path) {
    const auto lines = csv_lines(path);
    if (lines[0] != "id,label,max_responsibility") throw ParseError(path + ": expected header 'id,label,max_responsibility'", 1);
    ClusterTable t;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto cells = split_csv(lines[i]);
        if (cells.size() != 3) throw ParseError(path + ": expected 3 columns", i + 1);
        const auto label = parse_int(cells[1]);
        if (!label) throw ParseError(path + ": label is not an integer", i + 1);
        t.ids.push_back(cells[0]);
        t.labels.push_back(*label);
        try {
            t.confidence.push_back(std::stod(cells[2]));
        }
        catch (const std::exception&) {
            throw ParseError(path + ": max_responsibility is not a number", i + 1);
        }
    }
    return t;
}

void cmd_ingest(const RunConfig& cfg) {
    if (cfg.inputs.empty()) throw ArgumentError("ingest: no inputs given");
    std::vector<std::string> failures;
    const auto files = expand_inputs(cfg.inputs, failures);
    std::vector<IngestEntry> entries(files.size());
    parallel_for(files.size(), workers(cfg), [&](std::size_t i) {
        IngestEntry& e = entries[i];
        e.path = files[i].string();
        e.source = files[i].stem().string();
        try {
            NeuronGraph g = parse_swc(read_file(e.path), cfg.tag);
            g.meta.source = e.source;
            e.nodes_in = g.size();
            e.unknown_compartment = g.meta.unknown_compartment;
            e.merged_soma_samples = g.meta.merged_soma_samples;
            if (cfg.preprocess.remove_axon) g = remove_axon(g);
            e.components = count_components(g);
            g = connect_components(std::move(g));
            Rng rng(derive_seed(cfg.seed, fnv1a(e.source)));
            g = subsample(g, cfg.preprocess.subsample, rng);
            g = normalize_soma(std::move(g), cfg.preprocess.soma_mode);
            e.nodes_out = g.size();
            e.graph = std::move(g);
        }
        catch (const Error& err) {
            e.error = err.what();
        }
    });

    std::set<std::string> sources;
    for (auto& e: entries) {
        if (e.error.empty() && !sources.insert(e.source).second) e.error = "duplicate source id '" + e.source + "'";
        if (!e.error.empty()) failures.push_back(e.path + ": " + e.error);
    }
    for (const auto& e: entries) {
        if (!e.error.empty()) continue;
        std::cout << e.source << ": nodes " << e.nodes_in << " -> " << e.nodes_out << ", components joined "
                  << (e.components > 0 ? e.components - 1 : 0) << '\n';
    }
    if (!failures.empty()) {
        std::string msg = "ingest: " + std::to_string(failures.size()) + " input(s) failed; nothing written";
        for (const auto& f: failures) msg += "\n  " + f;
        throw IoError(msg);
    }
    if (entries.empty()) throw EmptyInputError("ingest: no SWC files found");

    std::vector<NeuronGraph> graphs;
    json manifest_entries = json::array();
    for (auto& e: entries) {
        manifest_entries.push_back({{"source", e.source},
                                    {"path", e.path},
                                    {"nodes_in", e.nodes_in},
                                    {"nodes_out", e.nodes_out},
                                    {"components_joined", e.components > 0 ? e.components - 1 : 0},
                                    {"unknown_compartment", e.unknown_compartment},
                                    {"merged_soma_samples", e.merged_soma_samples}});
        graphs.push_back(std::move(e.graph));
    }
    fs::create_directories(cfg.output_dir);
    write_container(path_in(cfg, artifact::dataset), graphs);
    write_json(path_in(cfg, artifact::manifest),
               {{"config", to_json(cfg)}, {"graphs", graphs.size()}, {"entries", manifest_entries}});
    write_effective_config(cfg, "ingest");
    std::cout << "ingested " << graphs.size() << " graphs into " << path_in(cfg, artifact::dataset) << '\n';
}

void cmd_train(const RunConfig& cfg, bool resume) {
    require_artifact(cfg, artifact::dataset, "ingest");
    const auto graphs = read_container(path_in(cfg, artifact::dataset));
    if (graphs.empty()) throw EmptyInputError("train: dataset is empty");

    std::vector<std::size_t> order(graphs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(cfg.seed, fnv1a("split")));
    std::shuffle(order.begin(), order.end(), rng);
    auto n_train = static_cast<std::size_t>(std::llround(cfg.split_fraction * static_cast<double>(graphs.size())));
    n_train = std::clamp<std::size_t>(n_train, 1, graphs.size());
    std::vector<std::size_t> train_idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    std::vector<std::size_t> val_idx(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(val_idx.begin(), val_idx.end());
    std::vector<NeuronGraph> train_set, val_set;
    for (auto i: train_idx) train_set.push_back(graphs[i]);
    for (auto i: val_idx) val_set.push_back(graphs[i]);

    std::optional<TrainState> state;
    if (resume) {
        require_artifact(cfg, artifact::checkpoint, "train");
        state = load_checkpoint(cfg.output_dir / artifact::checkpoint, cfg.train.encoder).state;
        if (state->seed != cfg.seed) throw ArgumentError("train: --resume checkpoint was trained with a different seed");
    }
    write_effective_config(cfg, "train");
    json echo = to_json(cfg);
    // Location-independent so identical runs in different directories match bit for bit.
    echo.erase("output_dir");
    echo["dataset"].erase("inputs");
    json meta = {{"config", echo},
                 {"dataset", {{"graphs", graphs.size()}, {"train", train_set.size()}, {"validation", val_set.size()}}}};
    std::cout << "training on " << train_set.size() << " graphs, validating on " << val_set.size() << '\n';
    const TrainResult r = train(train_set, val_set, cfg.train, std::move(state), meta);
    if (!r.step_losses.empty()) {
        std::cout << "steps " << r.state.step << ", first loss " << r.step_losses.front() << ", last loss "
                  << r.step_losses.back() << '\n';
    }
    std::cout << "checkpoint written to " << path_in(cfg, artifact::checkpoint) << '\n';
}

void cmd_embed(const RunConfig& cfg) {
    require_artifact(cfg, artifact::dataset, "ingest");
    require_artifact(cfg, artifact::checkpoint, "train");
    const auto graphs = read_container(path_in(cfg, artifact::dataset));
    const Checkpoint ck = load_checkpoint(cfg.output_dir / artifact::checkpoint, cfg.train.encoder);
    const EmbeddingTable table = embed(graphs, ck.state.teacher, embed_config(cfg));
    write_embeddings_csv(path_in(cfg, artifact::embeddings), table);
    if (table.size() >= 2) {
        const MatD p = pca_2d(table.z);
        std::string out = "id,pc1,pc2\n";
        for (std::size_t i = 0; i < table.size(); ++i) {
            const auto r = static_cast<Eigen::Index>(i);
            out += table.ids[i] + "," + fmt(p(r, 0)) + "," + fmt(p(r, 1)) + "\n";
        }
        write_file(path_in(cfg, artifact::pca), out);
    }
    write_effective_config(cfg, "embed");
    std::cout << "embedded " << table.size() << " graphs (" << table.z.cols() << " dims) into "
              << path_in(cfg, artifact::embeddings) << '\n';
}

void cmd_select_k(const RunConfig& cfg) {
    require_artifact(cfg, artifact::embeddings, "embed");
    const auto data = read_embeddings_csv(path_in(cfg, artifact::embeddings));
    const auto& c = cfg.cluster;
    const SelectKResult r = select_k(data.table.z, c.k_min, c.k_max, c.folds, c.repeats,
                                     derive_seed(cfg.seed, fnv1a("select-k")), workers(cfg));
    std::string csv = "k,mean_heldout_loglik,skipped_fits\n";
    json curve = json::array();
    for (std::size_t i = 0; i < r.ks.size(); ++i) {
        csv += std::to_string(r.ks[i]) + "," + fmt(r.curve[i]) + "," + std::to_string(r.skipped[i]) + "\n";
        curve.push_back({{"k", r.ks[i]}, {"mean_heldout_loglik", r.curve[i]}, {"skipped_fits", r.skipped[i]}});
    }
    write_file(path_in(cfg, artifact::select_k_csv), csv);
    write_json(path_in(cfg, artifact::select_k_json), {{"config", to_json(cfg)}, {"best_k", r.best_k}, {"curve", curve}});
    write_effective_config(cfg, "select-k");
    std::cout << "best k = " << r.best_k << '\n';
}

void cmd_cluster(const RunConfig& cfg) {
    require_artifact(cfg, artifact::embeddings, "embed");
    const auto data = read_embeddings_csv(path_in(cfg, artifact::embeddings));
    int k = 0;
    if (cfg.cluster.k) {
        k = *cfg.cluster.k;
    }
    else {
        require_artifact(cfg, artifact::select_k_json, "select-k` (or pass --k to `neuroembed cluster");
        const json j = json::parse(read_file(path_in(cfg, artifact::select_k_json)));
        k = j.at("best_k").get<int>();
    }
    const ConsensusResult r =
        consensus_fit(data.table.z, k, cfg.cluster.runs, derive_seed(cfg.seed, fnv1a("cluster")), workers(cfg));
    const auto& cl = r.clustering;
    std::string csv = "id,label,max_responsibility\n";
    for (std::size_t i = 0; i < data.table.size(); ++i) {
        const auto row = static_cast<Eigen::Index>(i);
        csv += data.table.ids[i] + "," + std::to_string(cl.labels[i]) + "," + fmt(cl.responsibilities.row(row).maxCoeff()) + "\n";
    }
    write_file(path_in(cfg, artifact::clusters), csv);
    write_json(path_in(cfg, artifact::gmm), {{"config", to_json(cfg)},
                                             {"k", k},
                                             {"runs", cfg.cluster.runs},
                                             {"chosen_run", r.chosen_run},
                                             {"mean_ari", r.mean_ari},
                                             {"model", to_json(cl.model)}});
    write_effective_config(cfg, "cluster");
    std::cout << "clustered " << data.table.size() << " graphs into k = " << k << " (run " << r.chosen_run << ")\n";
}

void cmd_evaluate(const RunConfig& cfg) {
    require_artifact(cfg, artifact::embeddings, "embed");
    require_artifact(cfg, artifact::clusters, "cluster");
    const auto data = read_embeddings_csv(path_in(cfg, artifact::embeddings));
    const ClusterTable clusters = read_clusters_csv(path_in(cfg, artifact::clusters));
    if (clusters.ids != data.table.ids) {
        throw StructuralError("evaluate: clusters.csv and embeddings.csv list different ids; rerun `neuroembed cluster`");
    }

    json metrics = {{"config", to_json(cfg)},
                    {"samples", clusters.ids.size()},
                    {"clusters", std::set<int>(clusters.labels.begin(), clusters.labels.end()).size()}};

    json forest = {{"config", to_json(cfg.evaluate.forest, static_cast<std::size_t>(data.table.z.cols()))},
                   {"n_samples", clusters.labels.size()},
                   {"n_classes", metrics["clusters"]}};
    try {
        const OobResult oob = forest_oob_accuracy(data.table.z, clusters.labels, cfg.evaluate.forest);
        forest["oob_accuracy"] = oob.accuracy;
        forest["oob_scored"] = oob.scored;
        forest["never_oob"] = oob.never_oob;
        if (cfg.evaluate.cv_repeats > 0) {
            const CvResult cv = forest_cv_accuracy(data.table.z, clusters.labels, cfg.evaluate.forest,
                                                   cfg.evaluate.cv_folds, cfg.evaluate.cv_repeats);
            forest["cv_folds"] = cfg.evaluate.cv_folds;
            forest["cv_repeats"] = cfg.evaluate.cv_repeats;
            forest["cv_mean"] = cv.mean;
            forest["cv_std"] = cv.stddev;
        }
    }
    catch (const ArgumentError& e) {
        log_warn(std::string("evaluate: forest metrics skipped: ") + e.what());
        forest["skipped"] = e.what();
    }
    metrics["forest"] = forest;

    if (!cfg.evaluate.reference.empty()) {
        const LabelTable ref = read_labels_csv(cfg.evaluate.reference);
        const std::vector<int> truth = align_labels(clusters.ids, ref, "evaluate");
        const ConfusionMatrix cm = confusion(truth, clusters.labels);
        json rows = json::array();
        for (Eigen::Index i = 0; i < cm.percent.rows(); ++i) {
            std::vector<double> row(cm.percent.row(i).data(), cm.percent.row(i).data() + cm.percent.cols());
            rows.push_back(row);
        }
        json ref_json = {{"path", cfg.evaluate.reference},
                         {"ari", ari(truth, clusters.labels)},
                         {"confusion", {{"reference_labels", cm.row_labels}, {"cluster_labels", cm.col_labels}, {"percent", rows}}}};
        if (!ref.names.empty()) ref_json["label_names"] = ref.names;
        metrics["reference"] = ref_json;
        std::cout << "ARI vs reference = " << ref_json["ari"].get<double>() << '\n';
    }
    if (forest.contains("oob_accuracy")) std::cout << "forest OOB accuracy = " << forest["oob_accuracy"].get<double>() << '\n';
    write_json(path_in(cfg, artifact::metrics), metrics);
    write_effective_config(cfg, "evaluate");
}

void cmd_synth(const SynthOptions& opts) {
    if (opts.output_dir.empty()) throw ArgumentError("synth: output directory must not be empty");
    std::vector<SynthClassSpec> specs;
    if (opts.spec_file) {
        json j;
        try {
            j = json::parse(read_file(opts.spec_file->string()));
        }
        catch (const json::parse_error& e) {
            throw ArgumentError("synth: " + opts.spec_file->string() + " is not valid JSON: " + e.what());
        }
        specs = synth_specs_from_json(j);
    }
    else {
        specs = default_synth_classes();
    }
    const SynthDataset data = generate(specs, opts.per_class, opts.seed, opts.threads);
    const fs::path swc = opts.output_dir / artifact::swc_dir;
    if (fs::exists(swc)) {
        for (const auto& e: fs::directory_iterator(swc)) {
            if (e.path().extension() == ".swc") fs::remove(e.path());
        }
    }
    fs::create_directories(swc);
    std::string labels = "id,label\n";
    for (std::size_t i = 0; i < data.graphs.size(); ++i) {
        const auto& g = data.graphs[i];
        write_file((swc / (g.meta.source + ".swc")).string(), to_swc(g));
        labels += g.meta.source + "," + std::to_string(data.labels[i]) + "\n";
    }
    write_file((opts.output_dir / artifact::labels).string(), labels);
    json classes = json::array();
    for (const auto& s: specs) classes.push_back(to_json(s));
    write_file((opts.output_dir / "synth.config.json").string(),
               json{{"seed", opts.seed}, {"per_class", opts.per_class}, {"classes", classes}}.dump(2) + "\n");
    std::cout << "wrote " << data.graphs.size() << " SWC files to " << swc.string() << '\n';
}

} // namespace neuroembed
