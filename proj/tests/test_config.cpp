#include "doctest.h"

#include <cstdlib>
#include <fstream>

#include "neuroembed/config.hpp"
#include "support.hpp"

using namespace neuroembed;
using nlohmann::json;

namespace {

struct EnvGuard {
    explicit EnvGuard(const char* value) {
        if (value) setenv(output_dir_env, value, 1);
        else unsetenv(output_dir_env);
    }
    ~EnvGuard() { unsetenv(output_dir_env); }
};

std::filesystem::path write_json(const std::filesystem::path& dir, const json& j) {
    const auto p = dir / "config.json";
    std::ofstream(p) << j.dump(2);
    return p;
}

} // namespace

TEST_CASE("tag defaults") {
    const RunConfig aba = RunConfig::for_tag("aba");
    CHECK(aba.train.total_steps == 100000);
    CHECK(aba.train.batch_size == 64);
    CHECK(aba.train.augment.n_keep == 200);
    CHECK_FALSE(aba.preprocess.remove_axon);
    CHECK(aba.preprocess.soma_mode == SomaMode::relative_depth);

    const RunConfig bbp = RunConfig::for_tag("bbp");
    CHECK(bbp.train.total_steps == 200000);
    CHECK(bbp.preprocess.remove_axon);
    CHECK(bbp.preprocess.soma_mode == SomaMode::soma_origin);

    const RunConfig syn = RunConfig::for_tag("synthetic");
    CHECK(syn.train.augment.n_keep == 100);
    CHECK(syn.train.total_steps == 2000);
    CHECK_NOTHROW(syn.validate());

    CHECK_THROWS_AS(RunConfig::for_tag("mouse"), ArgumentError);
}

TEST_CASE("config JSON round trip") {
    RunConfig c = RunConfig::for_tag("bbp");
    c.seed = 12;
    c.cluster.k = 4;
    c.embed.n_keep = 150;
    c.inputs = {"a", "b"};
    const RunConfig back = run_config_from_json(json::parse(to_json(c).dump()));
    CHECK(to_json(back) == to_json(c));
    CHECK(back.tag == "bbp");
    CHECK(back.cluster.k == 4);
}

TEST_CASE("unknown and mistyped keys are rejected with their path") {
    CHECK_THROWS_WITH_AS(run_config_from_json({{"train", {{"bach_size", 3}}}}), doctest::Contains("train.bach_size"),
                         ArgumentError);
    CHECK_THROWS_WITH_AS(run_config_from_json({{"colour", 1}}), doctest::Contains("colour"), ArgumentError);
    CHECK_THROWS_WITH_AS(run_config_from_json({{"train", {{"batch_size", "many"}}}}),
                         doctest::Contains("train.batch_size"), ArgumentError);
}

TEST_CASE("propagate pushes shared settings down") {
    json j = {{"seed", 5}, {"threads", 3}, {"deterministic", true}, {"output_dir", "/tmp/x"}};
    const RunConfig c = run_config_from_json(j);
    CHECK(c.train.seed == 5);
    CHECK(c.train.threads == 3);
    CHECK(c.train.deterministic);
    CHECK(c.train.output_dir == "/tmp/x");
    CHECK(c.evaluate.forest.seed == 5);
}

TEST_CASE("precedence: defaults, file, flags") {
    EnvGuard env(nullptr);
    const auto dir = testing::scratch_dir("config");
    const auto file = write_json(dir, {{"dataset", {{"tag", "aba"}}}, {"train", {{"batch_size", 16}, {"peak_lr", 0.5}}}});
    const RunConfig from_file = resolve_config(file, json::object());
    CHECK(from_file.tag == "aba");
    CHECK(from_file.train.batch_size == 16);
    CHECK(from_file.train.total_steps == 100000);

    const RunConfig patched = resolve_config(file, {{"train", {{"batch_size", 8}}}});
    CHECK(patched.train.batch_size == 8);
    CHECK(patched.train.peak_lr == 0.5);
    CHECK(resolve_config(std::nullopt, json::object()).tag == "synthetic");
    std::filesystem::remove_all(dir);
}

TEST_CASE("output directory: flag, then environment, then file") {
    const auto dir = testing::scratch_dir("config_out");
    const auto file = write_json(dir, {{"output_dir", "from_file"}});
    {
        EnvGuard env(nullptr);
        CHECK(resolve_config(file, json::object()).output_dir == "from_file");
        CHECK(resolve_config(std::nullopt, json::object()).output_dir == "neuroembed_out");
    }
    {
        EnvGuard env("from_env");
        CHECK(resolve_config(file, json::object()).output_dir == "from_env");
        CHECK(resolve_config(file, {{"output_dir", "from_flag"}}).output_dir == "from_flag");
    }
    std::filesystem::remove_all(dir);
}

TEST_CASE("a shorter run pulls the warmup down unless it was set") {
    EnvGuard env(nullptr);
    const RunConfig c = resolve_config(std::nullopt, {{"train", {{"total_steps", 100}}}});
    CHECK(c.train.warmup_steps < c.train.total_steps);
    CHECK_THROWS_AS(resolve_config(std::nullopt, {{"train", {{"total_steps", 100}, {"warmup_steps", 100}}}}),
                    ArgumentError);
}

TEST_CASE("invalid config files") {
    const auto dir = testing::scratch_dir("config_bad");
    std::ofstream(dir / "bad.json") << "{not json";
    CHECK_THROWS_AS(resolve_config(dir / "bad.json", json::object()), ArgumentError);
    std::ofstream(dir / "list.json") << "[1, 2]";
    CHECK_THROWS_AS(resolve_config(dir / "list.json", json::object()), ArgumentError);
    CHECK_THROWS_AS(resolve_config(dir / "missing.json", json::object()), Error);
    std::filesystem::remove_all(dir);
}
