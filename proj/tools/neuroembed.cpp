#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "neuroembed/commands.hpp"
#include "neuroembed/log.hpp"

using namespace neuroembed;
using nlohmann::json;

namespace {

int exit_code(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::usage: return 1;
    case ErrorKind::data: return 2;
    case ErrorKind::numeric: return 3;
    }
    return 1;
}

template <typename T>
void set(json& patch, const char* section, const char* key, const std::optional<T>& v) {
    if (!v) return;
    if (section) patch[section][key] = *v;
    else patch[key] = *v;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Self-supervised embeddings of neuron morphologies"};
    app.require_subcommand(1);
    app.fallthrough();

    std::optional<std::string> config_file, out, tag;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    bool deterministic = false, verbose = false, quiet = false;
    app.add_option("-c,--config", config_file, "JSON run configuration")->check(CLI::ExistingFile);
    app.add_option("-o,--out", out, "output directory (overrides $NEUROEMBED_OUT)");
    app.add_option("--tag", tag, "dataset tag selecting defaults")->check(CLI::IsMember({"aba", "bbp", "synthetic"}));
    app.add_option("--seed", seed, "master seed");
    app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    app.add_flag("--deterministic", deterministic, "single-threaded, bit-reproducible run");
    app.add_flag("-v,--verbose", verbose, "progress messages on stderr");
    app.add_flag("-q,--quiet", quiet, "suppress warnings");

    auto* ingest = app.add_subcommand("ingest", "parse and preprocess SWC files into dataset.mgrf");
    std::vector<std::string> inputs;
    std::optional<std::string> soma_mode;
    std::optional<bool> remove_axon;
    std::optional<std::size_t> subsample_n;
    ingest->add_option("inputs", inputs, "SWC files or directories");
    ingest->add_option("--soma-mode", soma_mode, "relative_depth or soma_origin")
        ->check(CLI::IsMember({"relative_depth", "soma_origin"}));
    ingest->add_flag("--remove-axon,!--keep-axon", remove_axon, "drop axon nodes");
    ingest->add_option("--subsample", subsample_n, "nodes kept per graph");

    auto* train = app.add_subcommand("train", "self-supervised training; writes checkpoint.gdck and train.log");
    std::optional<std::size_t> batch, n_keep;
    std::optional<std::uint64_t> total_steps, warmup, log_every, ckpt_every, val_every;
    std::optional<double> peak_lr, teacher_temp, student_temp, split;
    std::optional<int> dim, blocks, heads, pe_dim, latent;
    bool resume = false;
    train->add_option("--batch-size", batch);
    train->add_option("--total-steps", total_steps);
    train->add_option("--warmup-steps", warmup);
    train->add_option("--peak-lr", peak_lr);
    train->add_option("--teacher-temp", teacher_temp);
    train->add_option("--student-temp", student_temp);
    train->add_option("--n-keep", n_keep, "nodes per augmented view");
    train->add_option("--split-fraction", split, "training share of the dataset");
    train->add_option("--dim", dim);
    train->add_option("--blocks", blocks);
    train->add_option("--heads", heads);
    train->add_option("--pe-dim", pe_dim);
    train->add_option("--latent", latent);
    train->add_option("--log-every", log_every);
    train->add_option("--checkpoint-every", ckpt_every);
    train->add_option("--validate-every", val_every);
    train->add_flag("--resume", resume, "continue from checkpoint.gdck");

    auto* embed_cmd = app.add_subcommand("embed", "teacher embeddings for every graph; writes embeddings.csv");
    std::optional<std::size_t> views;
    embed_cmd->add_option("--views", views, "subsampled views averaged per graph");

    auto* selk = app.add_subcommand("select-k", "cross-validated GMM model selection");
    std::optional<int> k_min, k_max, folds, repeats;
    selk->add_option("--k-min", k_min);
    selk->add_option("--k-max", k_max);
    selk->add_option("--folds", folds);
    selk->add_option("--repeats", repeats);

    auto* cluster = app.add_subcommand("cluster", "consensus GMM clustering; writes clusters.csv and gmm.json");
    std::optional<int> k, runs;
    cluster->add_option("--k", k, "number of clusters (default: best k from select-k)");
    cluster->add_option("--runs", runs, "independent fits for the consensus");

    auto* evaluate = app.add_subcommand("evaluate", "ARI, confusion and forest metrics; writes metrics.json");
    std::optional<std::string> reference;
    std::optional<std::size_t> trees;
    std::optional<int> cv_folds, cv_repeats;
    evaluate->add_option("--reference", reference, "id,label CSV")->check(CLI::ExistingFile);
    evaluate->add_option("--trees", trees);
    evaluate->add_option("--cv-folds", cv_folds);
    evaluate->add_option("--cv-repeats", cv_repeats, "0 skips cross-validation");

    auto* synth = app.add_subcommand("synth", "generate labelled synthetic SWC files");
    std::optional<std::string> spec_file;
    std::size_t count = 100;
    synth->add_option("--spec", spec_file, "JSON class specs (default: three built-in classes)")->check(CLI::ExistingFile);
    synth->add_option("--count", count, "graphs per class")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    log_level() = quiet ? LogLevel::quiet : verbose ? LogLevel::info : LogLevel::warn;

    try {
        if (synth->parsed()) {
            SynthOptions o;
            o.spec_file = spec_file;
            o.per_class = count;
            o.seed = seed.value_or(0);
            o.threads = deterministic ? 1u : threads.value_or(1);
            if (out) o.output_dir = *out;
            else if (const char* env = std::getenv(output_dir_env); env && *env) o.output_dir = env;
            else o.output_dir = "synthetic";
            cmd_synth(o);
            return 0;
        }

        json patch = json::object();
        set(patch, nullptr, "output_dir", out);
        set(patch, nullptr, "seed", seed);
        set(patch, nullptr, "threads", threads);
        if (deterministic) patch["deterministic"] = true;
        set(patch, "dataset", "tag", tag);
        if (!inputs.empty()) patch["dataset"]["inputs"] = inputs;
        set(patch, "preprocess", "soma_mode", soma_mode);
        set(patch, "preprocess", "remove_axon", remove_axon);
        set(patch, "preprocess", "subsample", subsample_n);
        set(patch, "train", "batch_size", batch);
        set(patch, "train", "total_steps", total_steps);
        set(patch, "train", "warmup_steps", warmup);
        set(patch, "train", "peak_lr", peak_lr);
        set(patch, "train", "teacher_temp", teacher_temp);
        set(patch, "train", "student_temp", student_temp);
        set(patch, "train", "split_fraction", split);
        set(patch, "train", "log_every", log_every);
        set(patch, "train", "checkpoint_every", ckpt_every);
        set(patch, "train", "validate_every", val_every);
        set(patch, "augment", "n_keep", n_keep);
        set(patch, "encoder", "dim", dim);
        set(patch, "encoder", "blocks", blocks);
        set(patch, "encoder", "heads", heads);
        set(patch, "encoder", "pe_dim", pe_dim);
        set(patch, "encoder", "latent", latent);
        set(patch, "embed", "views", views);
        set(patch, "cluster", "k_min", k_min);
        set(patch, "cluster", "k_max", k_max);
        set(patch, "cluster", "folds", folds);
        set(patch, "cluster", "repeats", repeats);
        set(patch, "cluster", "runs", runs);
        set(patch, "cluster", "k", k);
        set(patch, "evaluate", "reference", reference);
        set(patch, "evaluate", "n_trees", trees);
        set(patch, "evaluate", "cv_folds", cv_folds);
        set(patch, "evaluate", "cv_repeats", cv_repeats);

        std::optional<std::filesystem::path> file;
        if (config_file) file = *config_file;
        const RunConfig cfg = resolve_config(file, patch);

        if (ingest->parsed()) cmd_ingest(cfg);
        else if (train->parsed()) cmd_train(cfg, resume);
        else if (embed_cmd->parsed()) cmd_embed(cfg);
        else if (selk->parsed()) cmd_select_k(cfg);
        else if (cluster->parsed()) cmd_cluster(cfg);
        else if (evaluate->parsed()) cmd_evaluate(cfg);
        return 0;
    }
    catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code(e.kind());
    }
    catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
