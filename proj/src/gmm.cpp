#include "neuroembed/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "neuroembed/cluster_metrics.hpp"
#include "neuroembed/log.hpp"
#include "neuroembed/parallel.hpp"

namespace neuroembed {

namespace {

constexpr double empty_component = 1e-8;

// n x k matrix of log w_j + log N(x_i | mu_j, var_j).
MatD weighted_log_density(const GmmModel& m, const MatD& x) {
    const Eigen::Index n = x.rows();
    MatD out(n, m.k);
    const double log2pi = std::log(2.0 * std::numbers::pi);
    for (int j = 0; j < m.k; ++j) {
        const Eigen::ArrayXd inv = m.variances.row(j).array().inverse().transpose();
        const double c = std::log(m.weights(j)) -
                         0.5 * (static_cast<double>(x.cols()) * log2pi + m.variances.row(j).array().log().sum());
        const MatD diff = x.rowwise() - m.means.row(j);
        out.col(j) = (c - 0.5 * (diff.array().square().rowwise() * inv.transpose()).rowwise().sum()).matrix();
    }
    return out;
}

// Normalizes rows of `logp` into responsibilities in place; returns per-row log-sum-exp.
VecD normalize_rows(MatD& logp) {
    VecD lse(logp.rows());
    for (Eigen::Index i = 0; i < logp.rows(); ++i) {
        const double mx = logp.row(i).maxCoeff();
        if (!std::isfinite(mx)) {
            lse(i) = mx;
            logp.row(i).setConstant(1.0 / static_cast<double>(logp.cols()));
            continue;
        }
        const double s = (logp.row(i).array() - mx).exp().sum();
        lse(i) = mx + std::log(s);
        logp.row(i) = (logp.row(i).array() - lse(i)).exp();
    }
    return lse;
}

VecD global_variance(const MatD& x, double floor) {
    const Eigen::RowVectorXd mean = x.colwise().mean();
    VecD v = ((x.rowwise() - mean).array().square().colwise().sum() / static_cast<double>(x.rows()))
                 .transpose()
                 .matrix();
    return v.cwiseMax(floor);
}

// Returns true when a component had to be reseeded.
bool m_step(GmmModel& m, const MatD& x, const MatD& resp, const VecD& sample_ll, double floor) {
    const auto n = static_cast<double>(x.rows());
    const Eigen::RowVectorXd nk = resp.colwise().sum();
    bool reseeded = false;
    for (int j = 0; j < m.k; ++j) {
        if (nk(j) < empty_component) {
            Eigen::Index worst = 0;
            sample_ll.minCoeff(&worst);
            m.means.row(j) = x.row(worst);
            m.variances.row(j) = global_variance(x, floor).transpose();
            m.weights(j) = 1.0 / n;
            reseeded = true;
            log_info("gmm: component " + std::to_string(j) + " emptied; reseeded at sample " +
                     std::to_string(worst));
            continue;
        }
        m.weights(j) = nk(j) / n;
        const Eigen::RowVectorXd mean = (resp.col(j).transpose() * x) / nk(j);
        m.means.row(j) = mean;
        const MatD diff = x.rowwise() - mean;
        const Eigen::RowVectorXd var = (resp.col(j).transpose() * diff.array().square().matrix()) / nk(j);
        m.variances.row(j) = var.cwiseMax(floor);
    }
    m.weights /= m.weights.sum();
    return reseeded;
}

Eigen::Index sample_by_weight(const VecD& w, Rng& rng) {
    const double total = w.sum();
    const Eigen::Index n = w.size();
    if (!(total > 0)) return static_cast<Eigen::Index>(uniform_index(rng, static_cast<std::size_t>(n)));
    const double r = uniform01(rng) * total;
    double acc = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        acc += w(i);
        if (r < acc) return i;
    }
    return n - 1;
}

// Greedy k-means++: each new center is the best of 2 + ln k distance-weighted
// candidates by remaining potential.
std::vector<Eigen::Index> seed_centers(const MatD& x, int k, Rng& rng) {
    const Eigen::Index n = x.rows();
    const int trials = 2 + static_cast<int>(std::log(static_cast<double>(k)));
    std::vector<Eigen::Index> centers;
    centers.push_back(static_cast<Eigen::Index>(uniform_index(rng, static_cast<std::size_t>(n))));
    VecD d2 = (x.rowwise() - x.row(centers[0])).rowwise().squaredNorm();
    while (static_cast<int>(centers.size()) < k) {
        Eigen::Index pick = -1;
        VecD best_d2;
        double best_potential = std::numeric_limits<double>::infinity();
        for (int t = 0; t < trials; ++t) {
            const Eigen::Index cand = sample_by_weight(d2, rng);
            VecD next = d2.cwiseMin((x.rowwise() - x.row(cand)).rowwise().squaredNorm());
            const double potential = next.sum();
            if (potential < best_potential) {
                best_potential = potential;
                best_d2 = std::move(next);
                pick = cand;
            }
        }
        centers.push_back(pick);
        d2 = std::move(best_d2);
    }
    return centers;
}

} // namespace

GmmModel gmm_fit(const MatD& x, int k, std::uint64_t seed, const GmmOptions& opts) {
    const Eigen::Index n = x.rows();
    if (k < 1) throw ArgumentError("gmm_fit: k must be >= 1");
    if (k >= n && !(k == 1 && n == 1)) {
        throw ArgumentError("gmm_fit: k=" + std::to_string(k) + " must be smaller than the sample count " +
                            std::to_string(n));
    }
    if (!x.allFinite()) throw ArgumentError("gmm_fit: data contains non-finite values");

    Rng rng(derive_seed(seed, 0x676d6dULL));
    GmmModel m;
    m.k = k;
    m.seed = seed;
    m.weights = VecD::Constant(k, 1.0 / k);
    m.means = MatD::Zero(k, x.cols());
    m.variances = MatD::Ones(k, x.cols());

    // distance-weighted seeding, then one hard k-means assignment
    const auto centers = seed_centers(x, k, rng);
    MatD c(k, x.cols());
    for (int j = 0; j < k; ++j) c.row(j) = x.row(centers[static_cast<std::size_t>(j)]);
    MatD resp = MatD::Zero(n, k);
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::Index best = 0;
        (c.rowwise() - x.row(i)).rowwise().squaredNorm().minCoeff(&best);
        resp(i, best) = 1.0;
    }
    VecD sample_ll = (x.rowwise() - x.colwise().mean()).rowwise().squaredNorm() * -1.0;
    if (m_step(m, x, resp, sample_ll, opts.variance_floor)) m.restarts.push_back(0);

    double prev = -std::numeric_limits<double>::infinity();
    bool fresh_segment = true;
    for (;;) {
        MatD logp = weighted_log_density(m, x);
        sample_ll = normalize_rows(logp);
        const double ll = sample_ll.mean();
        if (!std::isfinite(ll)) throw NumericError("gmm_fit: non-finite log-likelihood");
        m.trace.push_back(ll);
        m.loglik_train = ll;
        if (!fresh_segment && ll - prev < opts.tol) {
            m.converged = true;
            break;
        }
        if (m.iterations >= opts.max_iter) break;
        fresh_segment = m_step(m, x, logp, sample_ll, opts.variance_floor);
        if (fresh_segment) m.restarts.push_back(m.trace.size());
        prev = ll;
        ++m.iterations;
    }
    return m;
}

VecD gmm_sample_loglik(const GmmModel& m, const MatD& x) {
    if (x.cols() != m.means.cols()) {
        throw ArgumentError("gmm: data has " + std::to_string(x.cols()) + " columns, model " +
                            std::to_string(m.means.cols()));
    }
    MatD logp = weighted_log_density(m, x);
    return normalize_rows(logp);
}

double gmm_loglik(const GmmModel& m, const MatD& x) {
    if (x.rows() == 0) throw ArgumentError("gmm_loglik: no samples");
    return gmm_sample_loglik(m, x).mean();
}

Clustering gmm_predict(const GmmModel& m, const MatD& x) {
    Clustering c;
    c.model = m;
    MatD logp = weighted_log_density(m, x);
    normalize_rows(logp);
    c.labels.resize(static_cast<std::size_t>(x.rows()));
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        Eigen::Index best = 0;
        logp.row(i).maxCoeff(&best);
        c.labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
    }
    c.responsibilities = std::move(logp);
    return c;
}

SelectKResult select_k(const MatD& x, int k_min, int k_max, int folds, int repeats, std::uint64_t seed,
                       unsigned threads, const GmmOptions& opts) {
    if (k_min < 1 || k_max < k_min) throw ArgumentError("select_k: invalid k range");
    if (folds < 2) throw ArgumentError("select_k: folds must be >= 2");
    if (repeats < 1) throw ArgumentError("select_k: repeats must be >= 1");
    const Eigen::Index n = x.rows();
    if (n < folds) throw ArgumentError("select_k: fewer samples than folds");

    std::vector<std::vector<int>> assignment(static_cast<std::size_t>(repeats));
    for (int r = 0; r < repeats; ++r) {
        std::vector<int> perm(static_cast<std::size_t>(n));
        std::iota(perm.begin(), perm.end(), 0);
        Rng rng(derive_seed(seed, 0x666f6c64ULL, static_cast<std::uint64_t>(r)));
        for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[uniform_index(rng, i)]);
        auto& a = assignment[static_cast<std::size_t>(r)];
        a.assign(static_cast<std::size_t>(n), 0);
        for (std::size_t i = 0; i < perm.size(); ++i) a[static_cast<std::size_t>(perm[i])] = static_cast<int>(i % folds);
    }

    const int nk = k_max - k_min + 1;
    struct Job {
        double sum = 0;
        std::size_t count = 0;
        bool skipped = false;
    };
    const std::size_t jobs = static_cast<std::size_t>(repeats) * static_cast<std::size_t>(folds) * static_cast<std::size_t>(nk);
    std::vector<Job> results(jobs);
    parallel_for(jobs, threads, [&](std::size_t job) {
        const int ki = static_cast<int>(job % static_cast<std::size_t>(nk));
        const int f = static_cast<int>((job / static_cast<std::size_t>(nk)) % static_cast<std::size_t>(folds));
        const int r = static_cast<int>(job / (static_cast<std::size_t>(nk) * static_cast<std::size_t>(folds)));
        const int k = k_min + ki;
        const auto& a = assignment[static_cast<std::size_t>(r)];
        std::vector<Eigen::Index> train, test;
        for (Eigen::Index i = 0; i < n; ++i) (a[static_cast<std::size_t>(i)] == f ? test : train).push_back(i);
        if (k >= static_cast<int>(train.size())) {
            results[job].skipped = true;
            return;
        }
        const MatD xtr = x(train, Eigen::all);
        const MatD xte = x(test, Eigen::all);
        const GmmModel m = gmm_fit(xtr, k, derive_seed(seed, static_cast<std::uint64_t>(r),
                                                       static_cast<std::uint64_t>(f), static_cast<std::uint64_t>(k)),
                                   opts);
        results[job].sum = gmm_sample_loglik(m, xte).sum();
        results[job].count = test.size();
    });

    SelectKResult out;
    out.curve.assign(static_cast<std::size_t>(nk), 0.0);
    out.skipped.assign(static_cast<std::size_t>(nk), 0);
    std::vector<double> sums(static_cast<std::size_t>(nk), 0.0);
    std::vector<std::size_t> counts(static_cast<std::size_t>(nk), 0);
    for (std::size_t job = 0; job < jobs; ++job) {
        const auto ki = job % static_cast<std::size_t>(nk);
        if (results[job].skipped) {
            ++out.skipped[ki];
            continue;
        }
        sums[ki] += results[job].sum;
        counts[ki] += results[job].count;
    }
    double best = -std::numeric_limits<double>::infinity();
    for (int ki = 0; ki < nk; ++ki) {
        const auto i = static_cast<std::size_t>(ki);
        out.ks.push_back(k_min + ki);
        if (out.skipped[i] > 0) {
            log_warn("select_k: skipped " + std::to_string(out.skipped[i]) + " fits for k=" +
                     std::to_string(k_min + ki) + " (k >= training fold size)");
        }
        out.curve[i] = counts[i] > 0 ? sums[i] / static_cast<double>(counts[i])
                                     : -std::numeric_limits<double>::infinity();
        if (out.curve[i] > best) {
            best = out.curve[i];
            out.best_k = k_min + ki;
        }
    }
    if (out.best_k == 0) throw ArgumentError("select_k: every k in range was skipped");
    return out;
}

ConsensusResult consensus_fit(const MatD& x, int k, int runs, std::uint64_t seed, unsigned threads,
                              const GmmOptions& opts) {
    if (runs < 2) throw ArgumentError("consensus_fit: runs must be >= 2");
    std::vector<Clustering> fits(static_cast<std::size_t>(runs));
    parallel_for(fits.size(), threads, [&](std::size_t r) {
        fits[r] = gmm_predict(gmm_fit(x, k, derive_seed(seed, 0x636f6e73ULL, r), opts), x);
    });
    ConsensusResult out;
    out.mean_ari.assign(fits.size(), 0.0);
    std::vector<double> pair(fits.size() * fits.size(), 0.0);
    parallel_for(fits.size(), threads, [&](std::size_t i) {
        for (std::size_t j = i + 1; j < fits.size(); ++j) pair[i * fits.size() + j] = ari(fits[i].labels, fits[j].labels);
    });
    for (std::size_t i = 0; i < fits.size(); ++i) {
        double s = 0;
        for (std::size_t j = 0; j < fits.size(); ++j) {
            if (i == j) continue;
            s += pair[std::min(i, j) * fits.size() + std::max(i, j)];
        }
        out.mean_ari[i] = s / static_cast<double>(fits.size() - 1);
    }
    for (std::size_t i = 1; i < fits.size(); ++i) {
        if (out.mean_ari[i] > out.mean_ari[out.chosen_run]) out.chosen_run = i;
    }
    out.clustering = std::move(fits[out.chosen_run]);
    return out;
}

nlohmann::json to_json(const GmmModel& m) {
    auto rows = [](const MatD& mat) {
        nlohmann::json a = nlohmann::json::array();
        for (Eigen::Index i = 0; i < mat.rows(); ++i) {
            std::vector<double> r(mat.row(i).data(), mat.row(i).data() + mat.cols());
            a.push_back(r);
        }
        return a;
    };
    return {{"k", m.k},
            {"seed", m.seed},
            {"weights", std::vector<double>(m.weights.data(), m.weights.data() + m.weights.size())},
            {"means", rows(m.means)},
            {"variances", rows(m.variances)},
            {"loglik_train", m.loglik_train},
            {"iterations", m.iterations},
            {"converged", m.converged}};
}

GmmModel gmm_from_json(const nlohmann::json& j) {
    GmmModel m;
    try {
        m.k = j.at("k").get<int>();
        m.seed = j.value("seed", std::uint64_t{0});
        const auto w = j.at("weights").get<std::vector<double>>();
        const auto means = j.at("means").get<std::vector<std::vector<double>>>();
        const auto vars = j.at("variances").get<std::vector<std::vector<double>>>();
        if (static_cast<int>(w.size()) != m.k || static_cast<int>(means.size()) != m.k ||
            static_cast<int>(vars.size()) != m.k) {
            throw IoError("gmm json: component count mismatch");
        }
        const auto d = static_cast<Eigen::Index>(means.empty() ? 0 : means[0].size());
        m.weights = Eigen::Map<const VecD>(w.data(), m.k);
        m.means.resize(m.k, d);
        m.variances.resize(m.k, d);
        for (int i = 0; i < m.k; ++i) {
            if (static_cast<Eigen::Index>(means[static_cast<std::size_t>(i)].size()) != d ||
                static_cast<Eigen::Index>(vars[static_cast<std::size_t>(i)].size()) != d) {
                throw IoError("gmm json: ragged component arrays");
            }
            for (Eigen::Index c = 0; c < d; ++c) {
                m.means(i, c) = means[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)];
                m.variances(i, c) = vars[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)];
            }
        }
        m.loglik_train = j.value("loglik_train", 0.0);
        m.iterations = j.value("iterations", 0);
        m.converged = j.value("converged", false);
    }
    catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("gmm json: ") + e.what());
    }
    return m;
}

} // namespace neuroembed
