#pragma once

#include <cstdint>

#include "neuroembed/encoder.hpp"

namespace neuroembed {

template <typename T>
struct DinoLoss {
    double value = 0;
    // dL/dp for student view 1 and view 2 (b x P each).
    Mat<T> grad_student1, grad_student2;
};

// Cross-view cross-entropy between centered, sharpened teacher targets and
// student log-probabilities. Per-sample terms are reduced in sorted order so the
// value does not depend on batch order.
template <typename T>
DinoLoss<T> dino_loss(const Mat<T>& student1, const Mat<T>& student2, const Mat<T>& teacher1,
                      const Mat<T>& teacher2, const Mat<T>& center, double student_temp,
                      double teacher_temp);

// Row-wise mean entropy of the centered teacher softmax; a lower bound of the loss.
template <typename T>
double teacher_entropy(const Mat<T>& teacher1, const Mat<T>& teacher2, const Mat<T>& center,
                       double teacher_temp);

// center <- m_c * center + (1 - m_c) * mean of the teacher rows of both views.
template <typename T>
void update_center(Mat<T>& center, const Mat<T>& teacher1, const Mat<T>& teacher2, double momentum);

// teacher <- m * teacher + (1 - m) * student; m == 1 is a no-op, m == 0 a copy.
template <typename T>
void ema_update(EncoderParams<T>& teacher, const EncoderParams<T>& student, double momentum);

// Linear warmup to peak_lr over warmup steps, then cosine decay to 0 at total.
double lr_schedule(std::uint64_t step, std::uint64_t warmup, std::uint64_t total, double peak_lr);

template <typename T>
struct AdamState {
    EncoderParams<T> m, v;
    std::uint64_t t = 0;

    static AdamState zeros(const EncoderConfig& cfg) {
        return {EncoderParams<T>::zeros(cfg), EncoderParams<T>::zeros(cfg), 0};
    }
};

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// One bias-corrected Adam update. Throws NumericError on non-finite gradients.
template <typename T>
void adam_step(EncoderParams<T>& params, const EncoderParams<T>& grads, AdamState<T>& state,
               double lr, const AdamConfig& cfg = {});

} // namespace neuroembed
