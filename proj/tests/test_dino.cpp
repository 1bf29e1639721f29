#include "doctest.h"

#include <cmath>

#include "neuroembed/dino.hpp"
#include "neuroembed/trainer.hpp"
#include "support.hpp"

using namespace neuroembed;

namespace {

EncoderConfig tiny_config() {
    EncoderConfig c;
    c.dim = 8;
    c.heads = 2;
    c.blocks = 1;
    c.pe_dim = 3;
    c.latent = 4;
    c.head_hidden = 6;
    c.proj_dim = 10;
    return c;
}

// Plain double-loop cross-entropy between centered teacher softmax and student log-softmax.
double loss_oracle(const MatD& s1, const MatD& s2, const MatD& t1, const MatD& t2, const MatD& c, double ts,
                   double tt) {
    auto softmax = [](VecD v) {
        v.array() -= v.maxCoeff();
        v = v.array().exp();
        return VecD(v / v.sum());
    };
    double total = 0;
    const auto b = s1.rows();
    for (Eigen::Index i = 0; i < b; ++i) {
        const VecD pt1 = softmax(((t1.row(i) - c) / tt).transpose());
        const VecD pt2 = softmax(((t2.row(i) - c) / tt).transpose());
        const VecD ls1 = softmax((s1.row(i) / ts).transpose()).array().log();
        const VecD ls2 = softmax((s2.row(i) / ts).transpose()).array().log();
        total += -pt2.dot(ls1) - pt1.dot(ls2);
    }
    return total / (2.0 * static_cast<double>(b));
}

} // namespace

TEST_CASE("uniform logits give ln P") {
    const MatD z = MatD::Zero(4, 1000);
    const auto l = dino_loss<double>(z, z, z, z, MatD::Zero(1, 1000), 0.1, 0.06);
    CHECK(std::abs(l.value - std::log(1000.0)) < 1e-12);
}

TEST_CASE("dino_loss matches a direct computation and bounds") {
    std::srand(1);
    const MatD s1 = MatD::Random(5, 30), s2 = MatD::Random(5, 30);
    const MatD t1 = MatD::Random(5, 30), t2 = MatD::Random(5, 30);
    const MatD c = MatD::Random(1, 30) * 0.1;
    const auto l = dino_loss(s1, s2, t1, t2, c, 0.1, 0.06);
    CHECK(l.value == doctest::Approx(loss_oracle(s1, s2, t1, t2, c, 0.1, 0.06)).epsilon(1e-12));
    CHECK(l.value >= teacher_entropy(t1, t2, c, 0.06) - 1e-9);

    const MatD shift = MatD::Constant(1, 30, 3.7);
    const auto shifted = dino_loss<double>(s1, s2, t1 + shift.replicate(5, 1), t2 + shift.replicate(5, 1), c, 0.1, 0.06);
    CHECK(std::abs(shifted.value - l.value) < 1e-9);
}

TEST_CASE("dino_loss is invariant to batch order") {
    std::srand(2);
    const MatD s1 = MatD::Random(6, 12), s2 = MatD::Random(6, 12);
    const MatD t1 = MatD::Random(6, 12), t2 = MatD::Random(6, 12);
    const MatD c = MatD::Zero(1, 12);
    Eigen::PermutationMatrix<Eigen::Dynamic> perm(6);
    perm.indices() << 3, 0, 5, 1, 4, 2;
    const auto a = dino_loss(s1, s2, t1, t2, c, 0.1, 0.06);
    const auto b = dino_loss<double>(perm * s1, perm * s2, perm * t1, perm * t2, c, 0.1, 0.06);
    CHECK(a.value == doctest::Approx(b.value).epsilon(1e-14));
}

TEST_CASE("dino_loss gradient w.r.t. student logits matches finite differences") {
    std::srand(3);
    MatD s1 = MatD::Random(3, 15), s2 = MatD::Random(3, 15);
    const MatD t1 = MatD::Random(3, 15), t2 = MatD::Random(3, 15);
    const MatD c = MatD::Random(1, 15) * 0.2;
    const auto l = dino_loss(s1, s2, t1, t2, c, 0.1, 0.06);
    const double h = 1e-5;
    double num = 0, den = 0;
    for (int view = 0; view < 2; ++view) {
        MatD& s = view == 0 ? s1 : s2;
        const MatD& g = view == 0 ? l.grad_student1 : l.grad_student2;
        for (Eigen::Index i = 0; i < s.size(); ++i) {
            const double old = s.data()[i];
            s.data()[i] = old + h;
            const double up = dino_loss(s1, s2, t1, t2, c, 0.1, 0.06).value;
            s.data()[i] = old - h;
            const double down = dino_loss(s1, s2, t1, t2, c, 0.1, 0.06).value;
            s.data()[i] = old;
            const double fd = (up - down) / (2 * h);
            num += (fd - g.data()[i]) * (fd - g.data()[i]);
            den += fd * fd;
        }
    }
    CHECK(std::sqrt(num / den) < 1e-6);
}

TEST_CASE("update_center") {
    std::srand(4);
    const MatD t1 = MatD::Random(4, 8), t2 = MatD::Random(4, 8);
    MatD c = MatD::Random(1, 8);
    const MatD before = c;
    update_center(c, t1, t2, 1.0);
    CHECK(c == before);
    update_center(c, t1, t2, 0.0);
    MatD stacked(8, 8);
    stacked << t1, t2;
    CHECK((c - stacked.colwise().mean()).cwiseAbs().maxCoeff() < 1e-15);

    const MatD v = MatD::Random(1, 8);
    MatD center = MatD::Zero(1, 8);
    double prev = (center - v).norm();
    for (int step = 0; step < 20; ++step) {
        update_center(center, v.replicate(3, 1).eval(), v.replicate(3, 1).eval(), 0.9);
        const double now = (center - v).norm();
        CHECK(now == doctest::Approx(0.9 * prev).epsilon(1e-9));
        prev = now;
    }
}

TEST_CASE("ema_update") {
    const EncoderConfig cfg = tiny_config();
    auto teacher = EncoderParams<double>::init(cfg, 1);
    const auto student = EncoderParams<double>::init(cfg, 2);
    const auto original = teacher;
    for (int i = 0; i < 100; ++i) ema_update(teacher, student, 1.0);
    CHECK(teacher.blocks[0].wq == original.blocks[0].wq);
    CHECK(teacher.head2 == original.head2);
    ema_update(teacher, student, 0.0);
    const auto ts = teacher.tensors();
    const auto ss = student.tensors();
    for (std::size_t i = 0; i < ts.size(); ++i) CHECK(*ts[i].second == *ss[i].second);

    auto t2 = EncoderParams<double>::zeros(cfg);
    auto s2 = EncoderParams<double>::zeros(cfg);
    t2.head2.setConstant(2.0);
    ema_update(t2, s2, 0.5);
    CHECK(t2.head2(0, 0) == 1.0);
}

TEST_CASE("learning-rate schedule") {
    CHECK(lr_schedule(0, 2000, 100000, 1e-4) == doctest::Approx(5e-8).epsilon(1e-12));
    CHECK(lr_schedule(2000, 2000, 100000, 1e-4) == 1e-4);
    CHECK(std::abs(lr_schedule(100000, 2000, 100000, 1e-4)) <= 1e-12);
    CHECK(std::abs(lr_schedule(1999, 2000, 100000, 1e-4) - lr_schedule(2000, 2000, 100000, 1e-4)) <= 1e-4 / 2000 + 1e-16);
    CHECK(lr_schedule(51000, 2000, 100000, 1e-4) == doctest::Approx(5e-5).epsilon(1e-9));
    for (std::uint64_t s = 2000; s < 100000; s += 997) {
        CHECK(lr_schedule(s + 1, 2000, 100000, 1e-4) <= lr_schedule(s, 2000, 100000, 1e-4));
    }
}

TEST_CASE("adam_step") {
    const EncoderConfig cfg = tiny_config();
    auto params = EncoderParams<double>::init(cfg, 3);
    const auto original = params;
    auto grads = EncoderParams<double>::zeros(cfg);
    auto state = AdamState<double>::zeros(cfg);
    adam_step(params, grads, state, 1e-3);
    CHECK(params.head2 == original.head2);
    CHECK(state.t == 1);

    auto p2 = original;
    auto s2 = AdamState<double>::zeros(cfg);
    grads.head2.setConstant(0.37);
    adam_step(p2, grads, s2, 1e-3);
    const MatD step = original.head2 - p2.head2;
    CHECK((step.array() - 1e-3).abs().maxCoeff() < 1e-9);

    auto p3 = original;
    auto s3 = AdamState<double>::zeros(cfg);
    adam_step(p3, grads, s3, 1e-3);
    CHECK(p3.head2 == p2.head2);
    CHECK(s3.m.head2 == s2.m.head2);

    grads.head2(0, 0) = std::nan("");
    CHECK_THROWS_AS(adam_step(p3, grads, s3, 1e-3), NumericError);
}

TEST_CASE("analytic gradients of the objective match finite differences") {
    Rng rng(5);
    const EncoderConfig cfg = tiny_config();
    auto student = EncoderParams<double>::init(cfg, 7);
    const auto teacher = EncoderParams<double>::init(cfg, 8);
    for (auto& [name, t]: student.tensors()) {
        if (name.find("bias") != std::string::npos || name.find("gain") != std::string::npos) {
            *t += MatD::Random(t->rows(), t->cols()) * 0.1;
        }
    }
    GraphBatch<double> v1, v2;
    for (int i = 0; i < 2; ++i) {
        v1.graphs.push_back(make_graph_input(testing::random_tree(7, rng), {}, 3, {}));
        v2.graphs.push_back(make_graph_input(testing::random_tree(7, rng), {}, 3, {}));
    }
    const MatD center = MatD::Random(1, cfg.proj_dim) * 0.1;
    const auto r = dino_objective(student, teacher, center, v1, v2, 0.1, 0.06, true);
    auto params = student.tensors();
    const auto grads = r.grads.tensors();
    for (std::size_t t = 0; t < params.size(); ++t) {
        MatD& p = *params[t].second;
        const MatD& g = *grads[t].second;
        double num = 0, den = 0;
        for (Eigen::Index i = 0; i < p.size(); ++i) {
            const double old = p.data()[i];
            p.data()[i] = old + 1e-5;
            const double up = dino_objective(student, teacher, center, v1, v2, 0.1, 0.06, false).loss;
            p.data()[i] = old - 1e-5;
            const double down = dino_objective(student, teacher, center, v1, v2, 0.1, 0.06, false).loss;
            p.data()[i] = old;
            const double fd = (up - down) / 2e-5;
            num += (fd - g.data()[i]) * (fd - g.data()[i]);
            den += fd * fd;
        }
        INFO(params[t].first);
        CHECK(std::sqrt(num) <= 1e-3 * std::max(std::sqrt(den), 1e-8));
    }
}
