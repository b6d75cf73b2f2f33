#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <random>

#include "esfp/losses.hpp"
#include "esfp/skeleton.hpp"

using namespace esfp;

namespace {

PoseSequence random_seq(std::size_t frames, std::size_t joints, std::uint64_t seed,
                        double lo = -1.0, double hi = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    PoseSequence s(frames, joints);
    for (double& v : s.positions) v = u(rng);
    return s;
}

CovarianceFactors random_factors(std::size_t frames, std::size_t joints, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> d(0.2, 1.5), l(-0.4, 0.4);
    CovarianceFactors f(frames, joints);
    for (std::size_t t = 0; t < frames; ++t)
        for (std::size_t j = 0; j < joints; ++j) {
            f.at(t, j, 0, 0) = d(rng);
            f.at(t, j, 1, 1) = d(rng);
            f.at(t, j, 2, 2) = d(rng);
            f.at(t, j, 1, 0) = l(rng);
            f.at(t, j, 2, 0) = l(rng);
            f.at(t, j, 2, 1) = l(rng);
        }
    return f;
}

}  // namespace

TEST_CASE("position loss is the mean squared coordinate error") {
    const PoseSequence pred = random_seq(4, 3, 1);
    const PoseSequence gt = random_seq(4, 3, 2);
    double acc = 0;
    for (std::size_t i = 0; i < pred.positions.size(); ++i) {
        const double d = pred.positions[i] - gt.positions[i];
        acc += d * d;
    }
    CHECK(loss_position(pred, gt) ==
          doctest::Approx(acc / double(pred.positions.size())).epsilon(1e-12));
    CHECK(loss_position(gt, gt) == 0.0);
}

TEST_CASE("velocity and acceleration losses match brute-force finite differences") {
    const std::size_t T = 6, J = 2;
    const PoseSequence pred = random_seq(T, J, 3);
    const PoseSequence gt = random_seq(T, J, 4);

    double vel = 0;
    for (std::size_t t = 0; t + 1 < T; ++t)
        for (std::size_t j = 0; j < J; ++j)
            for (int d = 0; d < 3; ++d) {
                const double vp = pred.joint(t + 1, j)[d] - pred.joint(t, j)[d];
                const double vg = gt.joint(t + 1, j)[d] - gt.joint(t, j)[d];
                vel += std::fabs(vp - vg);
            }
    vel /= double((T - 1) * J * 3);
    CHECK(loss_velocity(pred, gt) == doctest::Approx(vel).epsilon(1e-12));

    double acc = 0;
    for (std::size_t t = 0; t + 2 < T; ++t)
        for (std::size_t j = 0; j < J; ++j)
            for (int d = 0; d < 3; ++d) {
                const double ap = pred.joint(t + 2, j)[d] - 2 * pred.joint(t + 1, j)[d] +
                                  pred.joint(t, j)[d];
                const double ag =
                    gt.joint(t + 2, j)[d] - 2 * gt.joint(t + 1, j)[d] + gt.joint(t, j)[d];
                acc += std::fabs(ap - ag);
            }
    acc /= double((T - 2) * J * 3);
    CHECK(loss_acceleration(pred, gt) == doctest::Approx(acc).epsilon(1e-12));

    CHECK(loss_velocity(gt, gt) == 0.0);
    CHECK(loss_acceleration(gt, gt) == 0.0);
}

TEST_CASE("bone loss measures squared deviation from canonical lengths") {
    const SkeletonDefinition sk = make_chain({0, 0.5, 0.25});
    PoseSequence seq(2, 3);
    // straight chain, second bone stretched by 0.1
    for (std::size_t t = 0; t < 2; ++t) {
        seq.set_joint(t, 0, {0, 0, 0});
        seq.set_joint(t, 1, {0.5, 0, 0});
        seq.set_joint(t, 2, {0.85, 0, 0});  // length 0.35 vs canonical 0.25
    }
    // mean over 2 frames x 3 joints of squared deviation = 2*0.1^2 / 6
    CHECK(loss_bone(seq, sk) == doctest::Approx(2 * 0.01 / 6.0).epsilon(1e-12));
}

TEST_CASE("NLL matches a dense Eigen oracle") {
    const std::size_t T = 3, J = 4;
    const PoseSequence pred = random_seq(T, J, 5);
    const PoseSequence gt = random_seq(T, J, 6);
    const CovarianceFactors f = random_factors(T, J, 7);

    double total = 0;
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t j = 0; j < J; ++j) {
            Eigen::Matrix3d L = Eigen::Matrix3d::Zero();
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c <= r; ++c) L(r, c) = f.at(t, j, r, c);
            const Eigen::Matrix3d sigma = L * L.transpose();
            Eigen::Vector3d e;
            for (int d = 0; d < 3; ++d) e(d) = gt.joint(t, j)[d] - pred.joint(t, j)[d];
            const double mahal = e.transpose() * sigma.inverse() * e;
            total += 0.5 * mahal + 0.5 * std::log(sigma.determinant()) +
                     1.5 * std::log(2.0 * std::numbers::pi);
        }
    total /= double(T * J);
    CHECK(loss_nll(pred, gt, f) == doctest::Approx(total).epsilon(1e-9));
}

TEST_CASE("NLL of a perfect prediction is the entropy-style constant") {
    const std::size_t T = 2, J = 2;
    const PoseSequence gt = random_seq(T, J, 8);
    CovarianceFactors f(T, J);
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t j = 0; j < J; ++j)
            for (int d = 0; d < 3; ++d) f.at(t, j, d, d) = 1.0;  // identity covariance
    // zero error, unit determinant: only the 1.5 log(2 pi) constant remains
    CHECK(loss_nll(gt, gt, f) ==
          doctest::Approx(1.5 * std::log(2.0 * std::numbers::pi)).epsilon(1e-12));
}

TEST_CASE("assemble_cholesky floors the diagonal and keeps SPD products") {
    std::vector<double> raw(6, 0.0);
    raw[0] = -100.0;  // exp underflows past the floor
    raw[1] = std::log(0.05);
    raw[2] = 0.0;
    raw[3] = 0.7;
    raw[4] = -0.2;
    raw[5] = 0.1;
    const CovarianceFactors f = assemble_cholesky(raw, 1, 1);
    CHECK(f.at(0, 0, 0, 0) == 1e-6);
    CHECK(f.at(0, 0, 1, 1) == doctest::Approx(0.05).epsilon(1e-12));
    CHECK(f.at(0, 0, 2, 2) == 1.0);
    CHECK(f.at(0, 0, 1, 0) == 0.7);
    CHECK(f.at(0, 0, 2, 0) == -0.2);
    CHECK(f.at(0, 0, 2, 1) == 0.1);
    // Sigma = L L^T must be positive definite
    Eigen::Matrix3d L = Eigen::Matrix3d::Zero();
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c <= r; ++c) L(r, c) = f.at(0, 0, r, c);
    const Eigen::Matrix3d sigma = L * L.transpose();
    Eigen::LLT<Eigen::Matrix3d> llt(sigma);
    CHECK(llt.info() == Eigen::Success);
    CHECK(f.trace_sigma(0, 0) == doctest::Approx(sigma.trace()).epsilon(1e-12));

    CHECK_THROWS(assemble_cholesky(std::vector<double>(5, 0.0), 1, 1));
}

TEST_CASE("stage totals combine components with the documented weights") {
    const LossWeights w;
    CHECK(w.w_pos == 1.0);
    CHECK(w.w_bone == 0.3);
    CHECK(w.w_vel == 0.5);
    CHECK(w.w_accel == 0.5);
    CHECK(w.lambda_nll == 1e-4);

    CHECK(loss_total(1, 2.0, 99.0, 99.0, 99.0, 99.0, w) == 2.0);
    CHECK(loss_total(2, 1.0, 1.0, 1.0, 1.0, 99.0, w) ==
          doctest::Approx(1.0 + 0.3 + 0.5 + 0.5).epsilon(1e-15));
    CHECK(loss_total(3, 1.0, 1.0, 1.0, 1.0, 10.0, w) ==
          doctest::Approx(2.3 + 1e-4 * 10.0).epsilon(1e-15));
    CHECK_THROWS(loss_total(4, 0, 0, 0, 0, 0, w));
    CHECK_THROWS(loss_total(0, 0, 0, 0, 0, 0, w));
}

TEST_CASE("graph-mode totals agree with the scalar combination") {
    using namespace lossgraph;
    auto scalar = [](double v) { return ad::Value::constant(ad::Tensor::scalar(v)); };
    StageComponents c{scalar(0.7), scalar(0.2), scalar(0.4), scalar(0.1), scalar(5.0)};
    const LossWeights w;
    CHECK(loss_total(1, c, w).val().item() == 0.7);
    CHECK(loss_total(2, c, w).val().item() ==
          doctest::Approx(loss_total(2, 0.7, 0.2, 0.4, 0.1, 0.0, w)).epsilon(1e-15));
    CHECK(loss_total(3, c, w).val().item() ==
          doctest::Approx(loss_total(3, 0.7, 0.2, 0.4, 0.1, 5.0, w)).epsilon(1e-15));
    StageComponents no_nll{scalar(0.7), scalar(0.2), scalar(0.4), scalar(0.1), std::nullopt};
    CHECK_THROWS(loss_total(3, no_nll, w));
}

TEST_CASE("loss gradients are exact") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-1, 1);
    auto rand_leaf = [&](std::vector<std::size_t> shape, double lo, double hi) {
        std::uniform_real_distribution<double> ur(lo, hi);
        ad::Tensor t(std::move(shape));
        for (std::size_t i = 0; i < t.size(); ++i) t[i] = ur(rng);
        return ad::Value::leaf(t);
    };
    const std::size_t T = 5, J = 2;
    ad::Value pred = rand_leaf({1, T, J, 3}, -1, 1);
    ad::Value gt = rand_leaf({1, T, J, 3}, -1, 1);
    ad::Value diag = rand_leaf({1, T, J, 3}, 0.3, 1.2);
    ad::Value lower = rand_leaf({1, T, J, 3}, -0.3, 0.3);

    CHECK(ad::check_gradients([&] { return lossgraph::loss_position(pred, gt); },
                              {pred.node()}) < 1e-6);
    CHECK(ad::check_gradients([&] { return lossgraph::loss_velocity(pred, gt); },
                              {pred.node()}) < 1e-6);
    CHECK(ad::check_gradients([&] { return lossgraph::loss_acceleration(pred, gt); },
                              {pred.node()}) < 1e-6);
    CHECK(ad::check_gradients([&] { return lossgraph::loss_nll(pred, gt, diag, lower); },
                              {pred.node(), diag.node(), lower.node()}) < 1e-6);
}
