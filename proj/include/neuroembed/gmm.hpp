#pragma once

#include <cstdint>
#include <vector>

#include "json.hpp"
#include "neuroembed/common.hpp"

namespace neuroembed {

struct GmmModel {
    int k = 0;
    VecD weights;    // k
    MatD means;      // k x d
    MatD variances;  // k x d, diagonal covariances
    double loglik_train = 0;
    std::uint64_t seed = 0;
    int iterations = 0;
    bool converged = false;
    // Mean log-likelihood after every E-step. A reseeded component starts a new
    // segment; `restarts` lists the trace indices where segments begin.
    std::vector<double> trace;
    std::vector<std::size_t> restarts;

    int dims() const { return static_cast<int>(means.cols()); }
};

struct GmmOptions {
    int max_iter = 500;
    double tol = 1e-6;
    double variance_floor = 1e-6;
};

// Diagonal-covariance EM from distance-weighted seeding plus one k-means pass.
GmmModel gmm_fit(const MatD& x, int k, std::uint64_t seed, const GmmOptions& opts = {});

// Per-sample log-likelihood log sum_j w_j N(x | mu_j, diag var_j).
VecD gmm_sample_loglik(const GmmModel& m, const MatD& x);
double gmm_loglik(const GmmModel& m, const MatD& x);

struct Clustering {
    std::vector<int> labels;
    MatD responsibilities;  // n x k
    GmmModel model;
};

Clustering gmm_predict(const GmmModel& m, const MatD& x);

struct SelectKResult {
    int best_k = 0;
    std::vector<int> ks;
    std::vector<double> curve;         // mean held-out per-sample log-likelihood
    std::vector<std::size_t> skipped;  // fits skipped per k (k >= training fold size)
};

// Repeated k-fold cross-validation over k in [k_min, k_max]; ties go to the smaller k.
SelectKResult select_k(const MatD& x, int k_min, int k_max, int folds, int repeats, std::uint64_t seed,
                       unsigned threads = 1, const GmmOptions& opts = {});

struct ConsensusResult {
    Clustering clustering;
    std::size_t chosen_run = 0;
    std::vector<double> mean_ari;  // per run, against all other runs
};

// Fits `runs` models and keeps the one whose labels agree best (mean ARI) with
// the others; ties go to the lower run index.
ConsensusResult consensus_fit(const MatD& x, int k, int runs, std::uint64_t seed, unsigned threads = 1,
                              const GmmOptions& opts = {});

nlohmann::json to_json(const GmmModel& m);
GmmModel gmm_from_json(const nlohmann::json& j);

} // namespace neuroembed
