#include "doctest.h"

#include <cstring>

#include "neuroembed/binary_io.hpp"
#include "neuroembed/graph_io.hpp"
#include "support.hpp"

using namespace neuroembed;

TEST_CASE("container round-trips graphs and metadata") {
    Rng rng(4);
    std::vector<NeuronGraph> graphs;
    for (int i = 0; i < 5; ++i) {
        NeuronGraph g = testing::random_tree(3 + uniform_index(rng, 40), rng);
        g.meta.source = "cell_" + std::to_string(i);
        g.meta.dataset_tag = i % 2 ? "bbp" : "aba";
        graphs.push_back(std::move(g));
    }
    const std::string bytes = encode_container(graphs);
    CHECK(bytes.substr(0, 4) == "MGRF");
    const auto back = decode_container(bytes);
    REQUIRE(back.size() == graphs.size());
    for (std::size_t i = 0; i < graphs.size(); ++i) {
        CHECK(same_structure(back[i], graphs[i]));
        CHECK(back[i].meta.source == graphs[i].meta.source);
        CHECK(back[i].meta.dataset_tag == graphs[i].meta.dataset_tag);
    }
    CHECK(encode_container(back) == bytes);
}

TEST_CASE("empty container") {
    CHECK(decode_container(encode_container({})).empty());
}

TEST_CASE("container rejects foreign or damaged bytes") {
    Rng rng(1);
    const std::string bytes = encode_container({testing::random_tree(10, rng)});

    std::string bad_magic = bytes;
    bad_magic[0] = 'X';
    CHECK_THROWS_AS(decode_container(bad_magic), IoError);

    std::string bad_version = bytes;
    const std::uint16_t v = container_version + 1;
    std::memcpy(bad_version.data() + 4, &v, 2);
    CHECK_THROWS_AS(decode_container(bad_version), VersionError);

    CHECK_THROWS_AS(decode_container(bytes.substr(0, bytes.size() - 3)), IoError);
    CHECK_THROWS_AS(decode_container(bytes + "junk"), IoError);
}

TEST_CASE("container files") {
    const auto dir = testing::scratch_dir("graph_io");
    Rng rng(2);
    const std::vector<NeuronGraph> graphs{testing::random_tree(12, rng), testing::random_tree(7, rng)};
    const std::string path = (dir / "d.mgrf").string();
    write_container(path, graphs);
    const auto back = read_container(path);
    REQUIRE(back.size() == 2);
    CHECK(same_structure(back[1], graphs[1]));
    CHECK_THROWS_AS(read_container((dir / "missing.mgrf").string()), IoError);
    std::filesystem::remove_all(dir);
}
