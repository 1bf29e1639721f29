#include "doctest.h"

#include "neuroembed/forest.hpp"

using namespace neuroembed;

namespace {

struct Data {
    MatD x;
    std::vector<int> y;
};

Data separable(int per, std::uint64_t seed) {
    Rng rng(seed);
    Data d;
    d.x.resize(3 * per, 4);
    for (int c = 0; c < 3; ++c) {
        for (int i = 0; i < per; ++i) {
            const int r = c * per + i;
            for (int j = 0; j < 4; ++j) d.x(r, j) = normal(rng, 1.0);
            d.x(r, c) += 6.0;
            d.y.push_back(c);
        }
    }
    return d;
}

} // namespace

TEST_CASE("a single tree fits its training data") {
    const Data d = separable(20, 1);
    std::vector<std::size_t> all(d.y.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    Rng rng(2);
    const DecisionTree t = grow_tree(d.x, d.y, 3, all, 4, 1, rng);
    for (std::size_t i = 0; i < all.size(); ++i) CHECK(t.predict(d.x.row(static_cast<Eigen::Index>(i)).data()) == d.y[i]);
}

TEST_CASE("forest OOB accuracy on separable classes") {
    const Data d = separable(40, 3);
    ForestConfig cfg;
    cfg.n_trees = 100;
    cfg.seed = 4;
    const OobResult r = forest_oob_accuracy(d.x, d.y, cfg);
    CHECK(r.accuracy >= 0.95);
    CHECK(r.scored + r.never_oob == d.y.size());
    cfg.threads = 3;
    CHECK(forest_oob_accuracy(d.x, d.y, cfg).accuracy == r.accuracy);
}

TEST_CASE("forest OOB accuracy on shuffled labels is near chance") {
    const Data d = separable(40, 5);
    double total = 0;
    for (std::uint64_t s = 0; s < 10; ++s) {
        std::vector<int> y = d.y;
        Rng rng(100 + s);
        std::shuffle(y.begin(), y.end(), rng);
        ForestConfig cfg;
        cfg.n_trees = 60;
        cfg.seed = s;
        total += forest_oob_accuracy(d.x, y, cfg).accuracy;
    }
    CHECK(std::abs(total / 10 - 1.0 / 3) < 0.1);
}

TEST_CASE("forest cross-validation") {
    const Data d = separable(30, 6);
    ForestConfig cfg;
    cfg.n_trees = 30;
    const CvResult cv = forest_cv_accuracy(d.x, d.y, cfg, 5, 3);
    CHECK(cv.per_repeat.size() == 3);
    CHECK(cv.mean >= 0.9);
    CHECK(cv.stddev >= 0.0);
}

TEST_CASE("forest config") {
    ForestConfig cfg;
    CHECK(cfg.features_for(64) == 8);
    CHECK(cfg.features_for(10) == 4);
    cfg.max_features = 5;
    CHECK_THROWS_AS(cfg.validate(4), ArgumentError);
    CHECK_NOTHROW(cfg.validate(5));
    cfg.n_trees = 0;
    CHECK_THROWS_AS(cfg.validate(5), ArgumentError);
    const auto j = to_json(ForestConfig{}, 64);
    CHECK(j.at("max_features") == 8);
}
