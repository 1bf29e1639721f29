#include "neuroembed/dino.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace neuroembed {

namespace {

// Row-wise softmax / log-softmax in double for a stable reduction.
MatD softmax_rows(const MatD& m) {
    MatD out(m.rows(), m.cols());
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        const double mx = m.row(i).maxCoeff();
        out.row(i) = (m.row(i).array() - mx).exp();
        out.row(i) /= out.row(i).sum();
    }
    return out;
}

MatD log_softmax_rows(const MatD& m) {
    MatD out(m.rows(), m.cols());
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        const double mx = m.row(i).maxCoeff();
        const double lse = mx + std::log((m.row(i).array() - mx).exp().sum());
        out.row(i) = m.row(i).array() - lse;
    }
    return out;
}

template <typename T>
MatD teacher_targets(const Mat<T>& teacher, const Mat<T>& center, double temp) {
    MatD c = teacher.template cast<double>();
    c.rowwise() -= center.template cast<double>().row(0);
    return softmax_rows(c / temp);
}

double sorted_sum(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    double s = 0;
    for (double x: v) s += x;
    return s;
}

} // namespace

template <typename T>
DinoLoss<T> dino_loss(const Mat<T>& student1, const Mat<T>& student2, const Mat<T>& teacher1,
                      const Mat<T>& teacher2, const Mat<T>& center, double student_temp,
                      double teacher_temp) {
    const Eigen::Index b = student1.rows();
    const Eigen::Index p = student1.cols();
    if (b == 0) throw ArgumentError("dino_loss: empty batch");
    for (const Mat<T>* m: {&student2, &teacher1, &teacher2}) {
        if (m->rows() != b || m->cols() != p) throw ArgumentError("dino_loss: view shapes differ");
    }
    if (center.rows() != 1 || center.cols() != p) throw ArgumentError("dino_loss: center shape");
    if (!student1.allFinite() || !student2.allFinite() || !teacher1.allFinite() ||
        !teacher2.allFinite() || !center.allFinite()) {
        throw NumericError("dino_loss: non-finite input");
    }
    const MatD t1 = teacher_targets(teacher1, center, teacher_temp);
    const MatD t2 = teacher_targets(teacher2, center, teacher_temp);
    const MatD s1 = student1.template cast<double>() / student_temp;
    const MatD s2 = student2.template cast<double>() / student_temp;
    const MatD ls1 = log_softmax_rows(s1);
    const MatD ls2 = log_softmax_rows(s2);

    std::vector<double> terms(static_cast<std::size_t>(b));
    for (Eigen::Index i = 0; i < b; ++i) {
        terms[static_cast<std::size_t>(i)] =
            -t1.row(i).dot(ls2.row(i)) - t2.row(i).dot(ls1.row(i));
    }
    DinoLoss<T> out;
    out.value = 0.5 * sorted_sum(std::move(terms)) / static_cast<double>(b);
    if (!std::isfinite(out.value)) throw NumericError("dino_loss: non-finite loss");

    const double g = 1.0 / (2.0 * static_cast<double>(b) * student_temp);
    out.grad_student1 = ((ls1.array().exp() - t2.array()) * g).matrix().template cast<T>();
    out.grad_student2 = ((ls2.array().exp() - t1.array()) * g).matrix().template cast<T>();
    return out;
}

template <typename T>
double teacher_entropy(const Mat<T>& teacher1, const Mat<T>& teacher2, const Mat<T>& center,
                       double teacher_temp) {
    double total = 0;
    for (const Mat<T>* t: {&teacher1, &teacher2}) {
        const MatD p = teacher_targets(*t, center, teacher_temp);
        total += -(p.array() * (p.array().max(1e-300)).log()).sum();
    }
    return total / (2.0 * static_cast<double>(teacher1.rows()));
}

template <typename T>
void update_center(Mat<T>& center, const Mat<T>& teacher1, const Mat<T>& teacher2, double momentum) {
    if (momentum == 1.0) return;
    const Eigen::Index rows = teacher1.rows() + teacher2.rows();
    Mat<double> mean =
        (teacher1.template cast<double>().colwise().sum() + teacher2.template cast<double>().colwise().sum()) /
        static_cast<double>(rows);
    if (momentum == 0.0) {
        center = mean.template cast<T>();
        return;
    }
    center = (momentum * center.template cast<double>() + (1.0 - momentum) * mean).template cast<T>();
}

template <typename T>
void ema_update(EncoderParams<T>& teacher, const EncoderParams<T>& student, double momentum) {
    if (momentum < 0.0 || momentum > 1.0) throw ArgumentError("ema_update: momentum outside [0, 1]");
    if (momentum == 1.0) return;
    auto dst = teacher.tensors();
    auto src = student.tensors();
    if (dst.size() != src.size()) throw ArgumentError("ema_update: parameter sets differ");
    const T m = static_cast<T>(momentum);
    const T one_minus = static_cast<T>(1.0 - momentum);
    for (std::size_t i = 0; i < dst.size(); ++i) {
        if (dst[i].second->rows() != src[i].second->rows() ||
            dst[i].second->cols() != src[i].second->cols()) {
            throw ArgumentError("ema_update: shape mismatch in " + dst[i].first);
        }
        if (momentum == 0.0) *dst[i].second = *src[i].second;
        else *dst[i].second = m * (*dst[i].second) + one_minus * (*src[i].second);
    }
}

double lr_schedule(std::uint64_t step, std::uint64_t warmup, std::uint64_t total, double peak_lr) {
    if (step < warmup) {
        return peak_lr * static_cast<double>(step + 1) / static_cast<double>(warmup);
    }
    if (step >= total || total <= warmup) return 0.0;
    const double progress =
        static_cast<double>(step - warmup) / static_cast<double>(total - warmup);
    return std::max(0.0, peak_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress)));
}

template <typename T>
void adam_step(EncoderParams<T>& params, const EncoderParams<T>& grads, AdamState<T>& state,
               double lr, const AdamConfig& cfg) {
    auto p = params.tensors();
    auto g = grads.tensors();
    auto m = state.m.tensors();
    auto v = state.v.tensors();
    for (const auto& [name, t]: g) {
        if (!t->allFinite()) throw NumericError("adam_step: non-finite gradient in " + name);
    }
    state.t += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
    const T b1 = static_cast<T>(cfg.beta1);
    const T b2 = static_cast<T>(cfg.beta2);
    const T step = static_cast<T>(lr / bc1);
    const T inv_bc2 = static_cast<T>(1.0 / bc2);
    const T eps = static_cast<T>(cfg.eps);
    for (std::size_t i = 0; i < p.size(); ++i) {
        auto& mi = *m[i].second;
        auto& vi = *v[i].second;
        const auto& gi = *g[i].second;
        mi = b1 * mi + (T(1) - b1) * gi;
        vi = b2 * vi + (T(1) - b2) * gi.cwiseProduct(gi);
        p[i].second->array() -= step * mi.array() / ((vi.array() * inv_bc2).sqrt() + eps);
    }
}

#define NEUROEMBED_DINO_INSTANTIATE(T)                                                            \
    template DinoLoss<T> dino_loss(const Mat<T>&, const Mat<T>&, const Mat<T>&, const Mat<T>&,    \
                                   const Mat<T>&, double, double);                                \
    template double teacher_entropy(const Mat<T>&, const Mat<T>&, const Mat<T>&, double);         \
    template void update_center(Mat<T>&, const Mat<T>&, const Mat<T>&, double);                   \
    template void ema_update(EncoderParams<T>&, const EncoderParams<T>&, double);                 \
    template void adam_step(EncoderParams<T>&, const EncoderParams<T>&, AdamState<T>&, double,   \
                            const AdamConfig&);

NEUROEMBED_DINO_INSTANTIATE(float)
NEUROEMBED_DINO_INSTANTIATE(double)

} // namespace neuroembed
