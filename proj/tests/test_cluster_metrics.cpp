#include "doctest.h"

#include <map>

#include "neuroembed/cluster_metrics.hpp"

using namespace neuroembed;

namespace {

double choose2(double n) { return n * (n - 1) / 2; }

// Pair-counting over every sample pair.
double ari_oracle(const std::vector<int>& a, const std::vector<int>& b) {
    const std::size_t n = a.size();
    double both = 0, in_a = 0, in_b = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const bool sa = a[i] == a[j], sb = b[i] == b[j];
            both += sa && sb;
            in_a += sa;
            in_b += sb;
        }
    }
    const double pairs = choose2(static_cast<double>(n));
    const double expected = in_a * in_b / pairs;
    const double max_index = (in_a + in_b) / 2;
    if (max_index == expected) return 1.0;
    return (both - expected) / (max_index - expected);
}

} // namespace

TEST_CASE("ari examples") {
    CHECK(ari({0, 0, 1, 1}, {0, 0, 1, 1}) == 1.0);
    CHECK(ari({0, 0, 1, 1}, {5, 5, 2, 2}) == 1.0);
    CHECK(ari({0, 0, 0, 0}, {1, 1, 1, 1}) == 1.0);
    CHECK(ari({0, 0, 1, 1}, {0, 1, 0, 1}) == doctest::Approx(-0.5));
    CHECK_THROWS_AS(ari({0, 1}, {0}), ArgumentError);
}

TEST_CASE("ari matches brute-force pair counting") {
    Rng rng(1);
    for (int t = 0; t < 200; ++t) {
        const std::size_t n = 2 + uniform_index(rng, 60);
        const std::size_t ka = 1 + uniform_index(rng, 6), kb = 1 + uniform_index(rng, 6);
        std::vector<int> a(n), b(n);
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = static_cast<int>(uniform_index(rng, ka));
            b[i] = uniform01(rng) < 0.5 ? a[i] : static_cast<int>(uniform_index(rng, kb));
        }
        CHECK(ari(a, b) == doctest::Approx(ari_oracle(a, b)).epsilon(1e-12));
        CHECK(ari(a, b) == doctest::Approx(ari(b, a)).epsilon(1e-14));
    }
}

TEST_CASE("confusion rows are percentages") {
    const auto c = confusion({0, 0, 0, 1, 1, 2}, {4, 4, 7, 7, 7, 4});
    CHECK(c.row_labels == std::vector<int>{0, 1, 2});
    CHECK(c.col_labels == std::vector<int>{4, 7});
    CHECK(c.percent(0, 0) == doctest::Approx(200.0 / 3));
    CHECK(c.percent(0, 1) == doctest::Approx(100.0 / 3));
    CHECK(c.percent(1, 1) == 100.0);
    CHECK(c.percent(2, 0) == 100.0);
    for (Eigen::Index r = 0; r < c.percent.rows(); ++r) CHECK(c.percent.row(r).sum() == doctest::Approx(100.0));
}
