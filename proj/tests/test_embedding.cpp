#include "doctest.h"

#include "neuroembed/embedding.hpp"
#include "support.hpp"

using namespace neuroembed;

TEST_CASE("embeddings CSV round trip is exact") {
    const auto dir = testing::scratch_dir("embedding");
    EmbeddingTable t;
    t.ids = {"a", "b", "c"};
    t.z = MatD::Random(3, 5) * 1e3;
    t.z(1, 2) = 1.0 / 3.0;
    write_embeddings_csv((dir / "e.csv").string(), t);
    const auto back = read_embeddings_csv((dir / "e.csv").string());
    CHECK(back.table.ids == t.ids);
    CHECK(back.table.z == t.z);
    CHECK_FALSE(back.labels.has_value());

    write_embeddings_csv((dir / "l.csv").string(), t, std::vector<int>{2, 0, 1});
    const auto labeled = read_embeddings_csv((dir / "l.csv").string());
    REQUIRE(labeled.labels.has_value());
    CHECK(*labeled.labels == std::vector<int>{2, 0, 1});
    CHECK(labeled.table.z == t.z);
    CHECK_THROWS_AS(read_embeddings_csv((dir / "missing.csv").string()), IoError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("pca_2d") {
    MatD x(5, 3);
    for (int i = 0; i < 5; ++i) x.row(i) << 2.0 * i, -1.0 * i, 0.0;
    x(2, 2) = 0.5;
    const MatD p = pca_2d(x);
    CHECK(p.rows() == 5);
    CHECK(p.cols() == 2);
    CHECK(std::abs(p.col(0).sum()) < 1e-12);
    CHECK(p.col(0).norm() > 10 * p.col(1).norm());
    CHECK(p(4, 0) > p(0, 0));

    MatD shuffled(5, 3);
    for (int i = 0; i < 5; ++i) shuffled.row(i) = x.row(4 - i);
    const MatD q = pca_2d(shuffled);
    for (int i = 0; i < 5; ++i) CHECK(std::abs(q(i, 0) - p(4 - i, 0)) < 1e-10);
}
