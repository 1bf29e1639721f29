#include "neuroembed/cluster_metrics.hpp"

#include <algorithm>

namespace neuroembed {

namespace {

double choose2(double x) { return x * (x - 1.0) / 2.0; }

std::vector<int> distinct(std::vector<int> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

std::size_t position(const std::vector<int>& sorted, int label) {
    return static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), label) - sorted.begin());
}

} // namespace

double ari(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() != b.size()) {
        throw ArgumentError("ari: label vectors differ in length (" + std::to_string(a.size()) + " vs " +
                            std::to_string(b.size()) + ")");
    }
    const std::size_t n = a.size();
    if (n < 2) return 1.0;
    const auto ra = distinct(a);
    const auto rb = distinct(b);
    std::vector<double> table(ra.size() * rb.size(), 0.0);
    std::vector<double> rows(ra.size(), 0.0), cols(rb.size(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = position(ra, a[i]);
        const auto c = position(rb, b[i]);
        table[r * rb.size() + c] += 1.0;
        rows[r] += 1.0;
        cols[c] += 1.0;
    }
    double index = 0, sum_a = 0, sum_b = 0;
    for (double v: table) index += choose2(v);
    for (double v: rows) sum_a += choose2(v);
    for (double v: cols) sum_b += choose2(v);
    const double expected = sum_a * sum_b / choose2(static_cast<double>(n));
    const double max_index = 0.5 * (sum_a + sum_b);
    const double denom = max_index - expected;
    if (denom == 0.0) return 1.0;
    return (index - expected) / denom;
}

ConfusionMatrix confusion(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() != b.size()) {
        throw ArgumentError("confusion: label vectors differ in length (" + std::to_string(a.size()) + " vs " +
                            std::to_string(b.size()) + ")");
    }
    ConfusionMatrix m;
    m.row_labels = distinct(a);
    m.col_labels = distinct(b);
    m.percent = MatD::Zero(static_cast<Eigen::Index>(m.row_labels.size()),
                           static_cast<Eigen::Index>(m.col_labels.size()));
    for (std::size_t i = 0; i < a.size(); ++i) {
        m.percent(static_cast<Eigen::Index>(position(m.row_labels, a[i])),
                  static_cast<Eigen::Index>(position(m.col_labels, b[i]))) += 1.0;
    }
    for (Eigen::Index r = 0; r < m.percent.rows(); ++r) {
        const double total = m.percent.row(r).sum();
        if (total > 0) m.percent.row(r) *= 100.0 / total;
    }
    return m;
}

} // namespace neuroembed
