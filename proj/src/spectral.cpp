#include "neuroembed/spectral.hpp"

#include <cmath>
#include <numbers>
#include <limits>

namespace neuroembed {

AdjacencyMatrix adjacency(const NeuronGraph& g) {
    AdjacencyMatrix a;
    a.n = g.size();
    a.data = MatD::Zero(a.n, a.n);
    for (auto [u, v]: g.edges) {
        const auto i = g.index_of(u), j = g.index_of(v);
        a.data(i, j) = 1.0;
        a.data(j, i) = 1.0;
    }
    return a;
}

MatD normalized_laplacian(const AdjacencyMatrix& a) {
    const std::size_t n = a.n;
    VecD inv_sqrt_deg(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double deg = a.data.row(i).sum();
        inv_sqrt_deg[i] = deg > 0 ? 1.0 / std::sqrt(deg) : 0.0;
    }
    MatD l(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            l(i, j) = -inv_sqrt_deg[i] * a.data(i, j) * inv_sqrt_deg[j];
        }
        l(i, i) += inv_sqrt_deg[i] > 0 ? 1.0 : 0.0;
    }
    return l;
}

namespace {

using ColMat = Eigen::MatrixXd;

// Householder reduction to tridiagonal form. On return v holds the accumulated
// orthogonal transform, d the diagonal and e the sub-diagonal (e[0] unused).
void tridiagonalize(ColMat& v, VecD& d, VecD& e) {
    const int n = static_cast<int>(v.rows());
    for (int j = 0; j < n; ++j) d[j] = v(n - 1, j);

    for (int i = n - 1; i > 0; --i) {
        double scale = 0.0, h = 0.0;
        for (int k = 0; k < i; ++k) scale += std::abs(d[k]);
        if (scale == 0.0) {
            e[i] = d[i - 1];
            for (int j = 0; j < i; ++j) {
                d[j] = v(i - 1, j);
                v(i, j) = 0.0;
                v(j, i) = 0.0;
            }
        }
        else {
            for (int k = 0; k < i; ++k) {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            double f = d[i - 1];
            double g = std::sqrt(h);
            if (f > 0) g = -g;
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for (int j = 0; j < i; ++j) e[j] = 0.0;

            for (int j = 0; j < i; ++j) {
                f = d[j];
                v(j, i) = f;
                g = e[j] + v(j, j) * f;
                for (int k = j + 1; k <= i - 1; ++k) {
                    g += v(k, j) * d[k];
                    e[k] += v(k, j) * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for (int j = 0; j < i; ++j) {
                e[j] /= h;
                f += e[j] * d[j];
            }
            const double hh = f / (h + h);
            for (int j = 0; j < i; ++j) e[j] -= hh * d[j];
            for (int j = 0; j < i; ++j) {
                f = d[j];
                g = e[j];
                for (int k = j; k <= i - 1; ++k) v(k, j) -= (f * e[k] + g * d[k]);
                d[j] = v(i - 1, j);
                v(i, j) = 0.0;
            }
        }
        d[i] = h;
    }

    for (int i = 0; i < n - 1; ++i) {
        v(n - 1, i) = v(i, i);
        v(i, i) = 1.0;
        const double h = d[i + 1];
        if (h != 0.0) {
            for (int k = 0; k <= i; ++k) d[k] = v(k, i + 1) / h;
            for (int j = 0; j <= i; ++j) {
                double g = 0.0;
                for (int k = 0; k <= i; ++k) g += v(k, i + 1) * v(k, j);
                for (int k = 0; k <= i; ++k) v(k, j) -= g * d[k];
            }
        }
        for (int k = 0; k <= i; ++k) v(k, i + 1) = 0.0;
    }
    for (int j = 0; j < n; ++j) {
        d[j] = v(n - 1, j);
        v(n - 1, j) = 0.0;
    }
    v(n - 1, n - 1) = 1.0;
    e[0] = 0.0;
}

// Implicit QL iterations on the tridiagonal (d, e), rotating v alongside.
void tridiagonal_ql(ColMat& v, VecD& d, VecD& e) {
    constexpr int max_iterations = 60;
    const int n = static_cast<int>(v.rows());
    for (int i = 1; i < n; ++i) e[i - 1] = e[i];
    e[n - 1] = 0.0;

    double f = 0.0, tst1 = 0.0;
    const double eps = std::numeric_limits<double>::epsilon();
    for (int l = 0; l < n; ++l) {
        tst1 = std::max(tst1, std::abs(d[l]) + std::abs(e[l]));
        int m = l;
        while (m < n) {
            if (std::abs(e[m]) <= eps * tst1) break;
            ++m;
        }
        if (m > l) {
            int iter = 0;
            do {
                if (++iter > max_iterations) {
                    throw NumericError("eig_sym: QL iteration did not converge for eigenvalue " +
                                       std::to_string(l));
                }
                double g = d[l];
                double p = (d[l + 1] - g) / (2.0 * e[l]);
                double r = std::hypot(p, 1.0);
                if (p < 0) r = -r;
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                const double dl1 = d[l + 1];
                double h = g - d[l];
                for (int i = l + 2; i < n; ++i) d[i] -= h;
                f += h;

                p = d[m];
                double c = 1.0, c2 = 1.0, c3 = 1.0;
                const double el1 = e[l + 1];
                double s = 0.0, s2 = 0.0;
                for (int i = m - 1; i >= l; --i) {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = std::hypot(p, e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for (int k = 0; k < n; ++k) {
                        h = v(k, i + 1);
                        v(k, i + 1) = s * v(k, i) + c * h;
                        v(k, i) = c * v(k, i) - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
            } while (std::abs(e[l]) > eps * tst1);
        }
        d[l] += f;
        e[l] = 0.0;
    }
}

} // namespace

SymmetricEigen eig_sym(const MatD& m) {
    if (m.rows() != m.cols()) throw ArgumentError("eig_sym: matrix is not square");
    const Eigen::Index n = m.rows();
    SymmetricEigen out;
    if (n == 0) return out;
    if (!m.allFinite()) throw NumericError("eig_sym: matrix has non-finite entries");
    const double norm = m.cwiseAbs().maxCoeff();
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-9 * std::max(1.0, norm)) {
        throw ArgumentError("eig_sym: matrix is not symmetric");
    }

    ColMat v = m;
    VecD d(n), e(n);
    tridiagonalize(v, d, e);
    tridiagonal_ql(v, d, e);

    // Selection sort keeps the permutation of equal eigenvalues stable.
    for (Eigen::Index i = 0; i < n - 1; ++i) {
        Eigen::Index k = i;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            if (d[j] < d[k]) k = j;
        }
        if (k != i) {
            std::swap(d[i], d[k]);
            v.col(i).swap(v.col(k));
        }
    }
    out.values = d;
    out.vectors = v;
    return out;
}

void canonicalize_sign(Eigen::Ref<VecD> v, const std::vector<VecD>& tie_breakers) {
    if (v.size() == 0) return;
    Eigen::Index imax = 0;
    const double max_abs = v.cwiseAbs().maxCoeff(&imax);
    if (max_abs == 0.0) return;
    bool ambiguous = false;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (std::abs(v[i]) >= max_abs * (1 - 1e-9) && (v[i] > 0) != (v[imax] > 0)) ambiguous = true;
    }
    Eigen::Index pivot = imax;
    if (ambiguous) {
        for (const VecD& w: tie_breakers) {
            if (w.size() != v.size()) continue;
            const double s = v.dot(w);
            if (std::abs(s) > 1e-9 * max_abs * w.cwiseAbs().sum()) {
                if (s < 0) v = -v;
                return;
            }
        }
    }
    if (ambiguous) {
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            if (std::abs(v[i]) > 1e-12 * max_abs) {
                pivot = i;
                break;
            }
        }
    }
    if (v[pivot] < 0) v = -v;
}

PositionalEncoding positional_encoding(const NeuronGraph& g, std::size_t k, const PeOptions& opts,
                                       Rng* rng) {
    if (k < 1) throw ArgumentError("positional_encoding: k must be at least 1");
    if (opts.sign == SignMode::random && rng == nullptr) {
        throw ArgumentError("positional_encoding: random sign mode needs an rng");
    }
    PositionalEncoding pe;
    pe.n = g.size();
    pe.k = k;
    pe.data = MatD::Zero(pe.n, k);
    if (pe.n == 0) return pe;

    const auto eig = eig_sym(normalized_laplacian(adjacency(g)));
    const auto n = static_cast<Eigen::Index>(pe.n);
    std::vector<VecD> ties(2, VecD::Zero(n));
    ties[0][static_cast<Eigen::Index>(g.index_of(g.soma_id))] = 1.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const Point3& p = g.nodes[static_cast<std::size_t>(i)].position;
        ties[1][i] = p.x + std::numbers::sqrt2 * p.y + std::numbers::sqrt3 * p.z;
    }
    for (std::size_t c = 0; c < k; ++c) {
        Eigen::Index src = 0;
        if (opts.order == PeOrder::largest) {
            if (static_cast<Eigen::Index>(c) >= n) break;
            src = n - 1 - static_cast<Eigen::Index>(c);
        }
        else {
            if (static_cast<Eigen::Index>(c) + 1 >= n) break;
            src = static_cast<Eigen::Index>(c) + 1;
        }
        VecD col = eig.vectors.col(src);
        canonicalize_sign(col, ties);
        if (opts.sign == SignMode::random && uniform01(*rng) < 0.5) col = -col;
        pe.data.col(static_cast<Eigen::Index>(c)) = col;
    }
    return pe;
}

std::string to_string(PeOrder order) {
    return order == PeOrder::largest ? "largest" : "smallest_nontrivial";
}

PeOrder pe_order_from_string(const std::string& s) {
    if (s == "largest") return PeOrder::largest;
    if (s == "smallest_nontrivial") return PeOrder::smallest_nontrivial;
    throw ArgumentError("unknown pe_order '" + s + "' (expected largest or smallest_nontrivial)");
}

} // namespace neuroembed
