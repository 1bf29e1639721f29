#include "doctest.h"

#include <cmath>
#include <numbers>

#include "neuroembed/cluster_metrics.hpp"
#include "neuroembed/gmm.hpp"

using namespace neuroembed;

namespace {

struct Blobs {
    MatD x;
    std::vector<int> labels;
};

Blobs blobs(int per, int k, int d, double sep, std::uint64_t seed) {
    Rng rng(seed);
    Blobs b;
    b.x.resize(per * k, d);
    for (int c = 0; c < k; ++c) {
        for (int i = 0; i < per; ++i) {
            for (int j = 0; j < d; ++j) b.x(c * per + i, j) = (j == c % d ? sep * (c + 1) : 0.0) + normal(rng, 1.0);
            b.labels.push_back(c);
        }
    }
    return b;
}

double loglik_oracle(const GmmModel& m, const VecD& row) {
    double total = 0;
    for (int c = 0; c < m.k; ++c) {
        double dens = m.weights[c];
        for (int j = 0; j < m.dims(); ++j) {
            const double v = m.variances(c, j);
            const double diff = row[j] - m.means(c, j);
            dens *= std::exp(-0.5 * diff * diff / v) / std::sqrt(2 * std::numbers::pi * v);
        }
        total += dens;
    }
    return std::log(total);
}

} // namespace

TEST_CASE("EM recovers well-separated components") {
    const Blobs b = blobs(60, 3, 4, 12.0, 1);
    const GmmModel m = gmm_fit(b.x, 3, 7);
    CHECK(m.k == 3);
    CHECK(m.weights.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m.variances.minCoeff() >= 1e-6);
    CHECK(m.converged);
    const Clustering c = gmm_predict(m, b.x);
    CHECK(ari(c.labels, b.labels) == 1.0);
    CHECK((c.responsibilities.rowwise().sum().array() - 1).abs().maxCoeff() < 1e-12);

    std::size_t seg = 0;
    for (std::size_t i = 1; i < m.trace.size(); ++i) {
        while (seg + 1 < m.restarts.size() && m.restarts[seg + 1] <= i) ++seg;
        if (m.restarts.size() > seg + 1 && m.restarts[seg + 1] == i) continue;
        CHECK(m.trace[i] >= m.trace[i - 1] - 1e-9);
    }
    CHECK(m.loglik_train == doctest::Approx(m.trace.back()).epsilon(1e-9));
}

TEST_CASE("per-sample log-likelihood matches a direct density sum") {
    const Blobs b = blobs(30, 2, 3, 6.0, 2);
    const GmmModel m = gmm_fit(b.x, 2, 3);
    const VecD ll = gmm_sample_loglik(m, b.x);
    for (Eigen::Index i = 0; i < b.x.rows(); ++i) {
        CHECK(ll[i] == doctest::Approx(loglik_oracle(m, b.x.row(i).transpose())).epsilon(1e-10));
    }
    CHECK(gmm_loglik(m, b.x) == doctest::Approx(ll.mean()).epsilon(1e-12));
}

TEST_CASE("gmm_fit is reproducible and validates input") {
    const Blobs b = blobs(20, 2, 2, 5.0, 3);
    const GmmModel a = gmm_fit(b.x, 2, 11);
    const GmmModel c = gmm_fit(b.x, 2, 11);
    CHECK(a.means == c.means);
    CHECK(a.trace == c.trace);
    CHECK_THROWS_AS(gmm_fit(b.x, 40, 1), ArgumentError);
    CHECK_THROWS_AS(gmm_fit(b.x, 0, 1), ArgumentError);
    MatD bad = b.x;
    bad(0, 0) = std::nan("");
    CHECK_THROWS_AS(gmm_fit(bad, 2, 1), ArgumentError);
}

TEST_CASE("duplicate points do not break EM") {
    MatD x(40, 2);
    x.topRows(20).setConstant(1.0);
    x.bottomRows(20).setConstant(-1.0);
    const GmmModel m = gmm_fit(x, 3, 5);
    CHECK(m.variances.allFinite());
    CHECK(m.weights.sum() == doctest::Approx(1.0));
}

TEST_CASE("select_k finds the generating component count") {
    const Blobs b = blobs(50, 3, 3, 10.0, 4);
    const SelectKResult r = select_k(b.x, 1, 6, 5, 3, 9);
    CHECK(r.best_k == 3);
    CHECK(r.ks.size() == 6);
    CHECK(r.curve.size() == 6);
    CHECK(r.ks.front() == 1);
    const SelectKResult again = select_k(b.x, 1, 6, 5, 3, 9, 3);
    CHECK(again.curve == r.curve);
    CHECK_THROWS_AS(select_k(b.x, 3, 2, 5, 1, 1), ArgumentError);
    CHECK_THROWS_AS(select_k(b.x, 1, 2, 1, 1, 1), ArgumentError);
}

TEST_CASE("select_k skips k values that exceed the training fold") {
    const Blobs b = blobs(4, 2, 2, 10.0, 5);
    const SelectKResult r = select_k(b.x, 1, 8, 2, 2, 1);
    CHECK(r.skipped.back() > 0);
    CHECK(r.best_k <= 3);
}

TEST_CASE("consensus keeps the most agreeable run") {
    const Blobs b = blobs(40, 3, 3, 3.0, 6);
    const ConsensusResult r = consensus_fit(b.x, 3, 8, 21);
    REQUIRE(r.mean_ari.size() == 8);
    for (double v: r.mean_ari) CHECK(v <= r.mean_ari[r.chosen_run]);
    for (std::size_t i = 0; i < r.chosen_run; ++i) CHECK(r.mean_ari[i] < r.mean_ari[r.chosen_run]);
    CHECK(r.clustering.labels.size() == 120);

    const ConsensusResult t = consensus_fit(b.x, 3, 8, 21, 3);
    CHECK(t.chosen_run == r.chosen_run);
    CHECK(t.clustering.labels == r.clustering.labels);
    CHECK_THROWS_AS(consensus_fit(b.x, 3, 1, 1), ArgumentError);
}

TEST_CASE("gmm JSON round trip") {
    const Blobs b = blobs(20, 2, 3, 8.0, 7);
    const GmmModel m = gmm_fit(b.x, 2, 1);
    const GmmModel back = gmm_from_json(nlohmann::json::parse(to_json(m).dump()));
    CHECK(back.k == m.k);
    CHECK(back.means == m.means);
    CHECK(back.variances == m.variances);
    CHECK(back.weights == m.weights);
    CHECK(gmm_predict(back, b.x).labels == gmm_predict(m, b.x).labels);
    CHECK_THROWS_AS(gmm_from_json({{"k", 2}}), IoError);
}
