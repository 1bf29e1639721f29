#include "neuroembed/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "neuroembed/log.hpp"
#include "neuroembed/parallel.hpp"

namespace neuroembed {

namespace {

double gini(const std::vector<double>& counts, double total) {
    if (total <= 0) return 0;
    double s = 0;
    for (double c: counts) s += (c / total) * (c / total);
    return 1.0 - s;
}

int majority(const std::vector<double>& counts) {
    return static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

struct Encoded {
    std::vector<int> y;
    std::vector<int> classes;  // original label per class index
};

Encoded encode_labels(const std::vector<int>& y) {
    Encoded e;
    e.classes = y;
    std::sort(e.classes.begin(), e.classes.end());
    e.classes.erase(std::unique(e.classes.begin(), e.classes.end()), e.classes.end());
    e.y.reserve(y.size());
    for (int v: y) {
        e.y.push_back(static_cast<int>(std::lower_bound(e.classes.begin(), e.classes.end(), v) - e.classes.begin()));
    }
    return e;
}

// Lexicographic order over (row values, label) so results do not depend on input order.
std::vector<std::size_t> canonical_order(const MatD& x, const std::vector<int>& y) {
    std::vector<std::size_t> idx(y.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        const auto ra = static_cast<Eigen::Index>(a);
        const auto rb = static_cast<Eigen::Index>(b);
        for (Eigen::Index c = 0; c < x.cols(); ++c) {
            if (x(ra, c) != x(rb, c)) return x(ra, c) < x(rb, c);
        }
        return y[a] < y[b];
    });
    return idx;
}

void check_inputs(const MatD& x, const std::vector<int>& y, const ForestConfig& cfg) {
    if (static_cast<std::size_t>(x.rows()) != y.size()) {
        throw ArgumentError("forest: " + std::to_string(x.rows()) + " rows but " + std::to_string(y.size()) +
                            " labels");
    }
    if (y.size() < 10) throw ArgumentError("forest: need at least 10 samples");
    if (!x.allFinite()) throw ArgumentError("forest: features contain non-finite values");
    cfg.validate(static_cast<std::size_t>(x.cols()));
    auto distinct = y;
    std::sort(distinct.begin(), distinct.end());
    if (std::unique(distinct.begin(), distinct.end()) - distinct.begin() < 2) {
        throw ArgumentError("forest: need at least 2 classes");
    }
}

} // namespace

std::size_t ForestConfig::features_for(std::size_t d) const {
    if (max_features) return *max_features;
    return static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(d))));
}

void ForestConfig::validate(std::size_t d) const {
    if (n_trees < 1) throw ArgumentError("forest: n_trees must be >= 1");
    const auto mf = features_for(d);
    if (mf < 1 || mf > d) {
        throw ArgumentError("forest: max_features " + std::to_string(mf) + " outside [1, " + std::to_string(d) + "]");
    }
    if (min_leaf < 1) throw ArgumentError("forest: min_leaf must be >= 1");
}

int DecisionTree::predict(const double* row) const {
    int at = 0;
    while (nodes[static_cast<std::size_t>(at)].feature >= 0) {
        const auto& n = nodes[static_cast<std::size_t>(at)];
        at = row[n.feature] <= n.threshold ? n.left : n.right;
    }
    return nodes[static_cast<std::size_t>(at)].label;
}

DecisionTree grow_tree(const MatD& x, const std::vector<int>& y, int classes,
                       const std::vector<std::size_t>& samples, std::size_t max_features,
                       std::size_t min_leaf, Rng& rng) {
    const auto d = static_cast<std::size_t>(x.cols());
    DecisionTree tree;
    struct Pending {
        int node;
        std::vector<std::size_t> samples;
    };
    std::vector<Pending> stack;
    tree.nodes.emplace_back();
    stack.push_back({0, samples});
    std::vector<std::size_t> features(d);
    std::vector<std::pair<double, int>> column;

    while (!stack.empty()) {
        Pending p = std::move(stack.back());
        stack.pop_back();
        const double total = static_cast<double>(p.samples.size());
        std::vector<double> counts(static_cast<std::size_t>(classes), 0.0);
        for (auto s: p.samples) counts[static_cast<std::size_t>(y[s])] += 1.0;
        const int label = majority(counts);
        tree.nodes[static_cast<std::size_t>(p.node)].label = label;
        const double parent = gini(counts, total);
        if (parent <= 0 || p.samples.size() < 2 * min_leaf) continue;

        std::iota(features.begin(), features.end(), std::size_t{0});
        for (std::size_t i = d; i > 1; --i) std::swap(features[i - 1], features[uniform_index(rng, i)]);

        double best = parent;
        int best_feature = -1;
        double best_threshold = 0;
        for (std::size_t fi = 0; fi < d; ++fi) {
            // sampled subset first; keep scanning only until a valid split exists
            if (fi >= max_features && best_feature >= 0) break;
            const auto f = static_cast<Eigen::Index>(features[fi]);
            column.clear();
            for (auto s: p.samples) column.emplace_back(x(static_cast<Eigen::Index>(s), f), y[s]);
            std::sort(column.begin(), column.end());
            std::vector<double> left(static_cast<std::size_t>(classes), 0.0);
            std::vector<double> right = counts;
            for (std::size_t i = 0; i + 1 < column.size(); ++i) {
                left[static_cast<std::size_t>(column[i].second)] += 1.0;
                right[static_cast<std::size_t>(column[i].second)] -= 1.0;
                if (column[i].first == column[i + 1].first) continue;
                const double nl = static_cast<double>(i + 1);
                const double nr = total - nl;
                if (nl < static_cast<double>(min_leaf) || nr < static_cast<double>(min_leaf)) continue;
                const double w = (nl * gini(left, nl) + nr * gini(right, nr)) / total;
                if (w < best - 1e-12) {
                    best = w;
                    best_feature = static_cast<int>(f);
                    double t = 0.5 * (column[i].first + column[i + 1].first);
                    if (!(t < column[i + 1].first)) t = column[i].first;
                    best_threshold = t;
                }
            }
        }
        if (best_feature < 0) continue;

        Pending l{static_cast<int>(tree.nodes.size()), {}};
        Pending r{static_cast<int>(tree.nodes.size() + 1), {}};
        for (auto s: p.samples) {
            (x(static_cast<Eigen::Index>(s), best_feature) <= best_threshold ? l : r).samples.push_back(s);
        }
        auto& node = tree.nodes[static_cast<std::size_t>(p.node)];
        node.feature = best_feature;
        node.threshold = best_threshold;
        node.left = l.node;
        node.right = r.node;
        tree.nodes.emplace_back();
        tree.nodes.emplace_back();
        stack.push_back(std::move(r));
        stack.push_back(std::move(l));
    }
    return tree;
}

OobResult forest_oob_accuracy(const MatD& x_in, const std::vector<int>& y_in, const ForestConfig& cfg) {
    check_inputs(x_in, y_in, cfg);
    const auto order = canonical_order(x_in, y_in);
    const std::size_t n = order.size();
    MatD x(x_in.rows(), x_in.cols());
    std::vector<int> raw(n);
    for (std::size_t i = 0; i < n; ++i) {
        x.row(static_cast<Eigen::Index>(i)) = x_in.row(static_cast<Eigen::Index>(order[i]));
        raw[i] = y_in[order[i]];
    }
    const Encoded enc = encode_labels(raw);
    const int classes = static_cast<int>(enc.classes.size());
    const std::size_t mf = cfg.features_for(static_cast<std::size_t>(x.cols()));

    // votes[t] holds (sample, predicted class) pairs for tree t
    std::vector<std::vector<std::pair<std::size_t, int>>> votes(cfg.n_trees);
    parallel_for(cfg.n_trees, std::max(1u, cfg.threads), [&](std::size_t t) {
        Rng rng(derive_seed(cfg.seed, 0x74726565ULL, t));
        std::vector<std::size_t> boot(n);
        std::vector<char> in_bag(n, 0);
        for (auto& b: boot) {
            b = uniform_index(rng, n);
            in_bag[b] = 1;
        }
        const DecisionTree tree = grow_tree(x, enc.y, classes, boot, mf, cfg.min_leaf, rng);
        for (std::size_t i = 0; i < n; ++i) {
            if (!in_bag[i]) votes[t].emplace_back(i, tree.predict(x.row(static_cast<Eigen::Index>(i)).data()));
        }
    });
    std::vector<std::vector<double>> tally(n, std::vector<double>(static_cast<std::size_t>(classes), 0.0));
    for (const auto& v: votes) {
        for (const auto& [i, c]: v) tally[i][static_cast<std::size_t>(c)] += 1.0;
    }
    OobResult out;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double total = 0;
        for (double c: tally[i]) total += c;
        if (total == 0) {
            ++out.never_oob;
            continue;
        }
        ++out.scored;
        if (majority(tally[i]) == enc.y[i]) ++correct;
    }
    if (out.never_oob > 0) {
        log_warn("forest: " + std::to_string(out.never_oob) + " samples never out of bag; excluded from accuracy");
    }
    out.accuracy = out.scored > 0 ? static_cast<double>(correct) / static_cast<double>(out.scored) : 0.0;
    return out;
}

CvResult forest_cv_accuracy(const MatD& x_in, const std::vector<int>& y_in, const ForestConfig& cfg, int folds,
                            int repeats) {
    check_inputs(x_in, y_in, cfg);
    if (folds < 2) throw ArgumentError("forest_cv_accuracy: folds must be >= 2");
    if (repeats < 1) throw ArgumentError("forest_cv_accuracy: repeats must be >= 1");
    const auto order = canonical_order(x_in, y_in);
    const std::size_t n = order.size();
    if (n < static_cast<std::size_t>(folds)) throw ArgumentError("forest_cv_accuracy: fewer samples than folds");
    MatD x(x_in.rows(), x_in.cols());
    std::vector<int> raw(n);
    for (std::size_t i = 0; i < n; ++i) {
        x.row(static_cast<Eigen::Index>(i)) = x_in.row(static_cast<Eigen::Index>(order[i]));
        raw[i] = y_in[order[i]];
    }
    const Encoded enc = encode_labels(raw);
    const int classes = static_cast<int>(enc.classes.size());
    const std::size_t mf = cfg.features_for(static_cast<std::size_t>(x.cols()));

    CvResult out;
    for (int r = 0; r < repeats; ++r) {
        // stratified round-robin fold assignment over shuffled class members
        Rng rng(derive_seed(cfg.seed, 0x6376ULL, static_cast<std::uint64_t>(r)));
        std::vector<int> fold(n, 0);
        std::size_t next = 0;
        for (int c = 0; c < classes; ++c) {
            std::vector<std::size_t> members;
            for (std::size_t i = 0; i < n; ++i) {
                if (enc.y[i] == c) members.push_back(i);
            }
            for (std::size_t i = members.size(); i > 1; --i) std::swap(members[i - 1], members[uniform_index(rng, i)]);
            for (auto m: members) fold[m] = static_cast<int>(next++ % static_cast<std::size_t>(folds));
        }
        std::vector<double> acc(static_cast<std::size_t>(folds), 0.0);
        std::vector<char> used(static_cast<std::size_t>(folds), 0);
        for (int f = 0; f < folds; ++f) {
            std::vector<std::size_t> train, test;
            for (std::size_t i = 0; i < n; ++i) (fold[i] == f ? test : train).push_back(i);
            if (test.empty()) continue;
            used[static_cast<std::size_t>(f)] = 1;
            std::vector<std::vector<int>> preds(cfg.n_trees);
            parallel_for(cfg.n_trees, std::max(1u, cfg.threads), [&](std::size_t t) {
                Rng trng(derive_seed(cfg.seed, static_cast<std::uint64_t>(r), static_cast<std::uint64_t>(f), t));
                std::vector<std::size_t> boot(train.size());
                for (auto& b: boot) b = train[uniform_index(trng, train.size())];
                const DecisionTree tree = grow_tree(x, enc.y, classes, boot, mf, cfg.min_leaf, trng);
                for (auto i: test) preds[t].push_back(tree.predict(x.row(static_cast<Eigen::Index>(i)).data()));
            });
            std::size_t correct = 0;
            for (std::size_t j = 0; j < test.size(); ++j) {
                std::vector<double> tally(static_cast<std::size_t>(classes), 0.0);
                for (const auto& p: preds) tally[static_cast<std::size_t>(p[j])] += 1.0;
                if (majority(tally) == enc.y[test[j]]) ++correct;
            }
            acc[static_cast<std::size_t>(f)] = static_cast<double>(correct) / static_cast<double>(test.size());
        }
        double s = 0;
        int m = 0;
        for (int f = 0; f < folds; ++f) {
            if (used[static_cast<std::size_t>(f)]) {
                s += acc[static_cast<std::size_t>(f)];
                ++m;
            }
        }
        out.per_repeat.push_back(s / m);
    }
    double mean = 0;
    for (double v: out.per_repeat) mean += v;
    mean /= static_cast<double>(out.per_repeat.size());
    double var = 0;
    for (double v: out.per_repeat) var += (v - mean) * (v - mean);
    out.mean = mean;
    out.stddev = out.per_repeat.size() > 1 ? std::sqrt(var / static_cast<double>(out.per_repeat.size() - 1)) : 0.0;
    return out;
}

nlohmann::json to_json(const ForestConfig& cfg, std::size_t d) {
    return {{"n_trees", cfg.n_trees},
            {"max_features", cfg.features_for(d)},
            {"min_leaf", cfg.min_leaf},
            {"seed", cfg.seed}};
}

} // namespace neuroembed
