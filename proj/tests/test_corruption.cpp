#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>

#include "esfp/corruption.hpp"
#include "esfp/skeleton.hpp"

using namespace esfp;

namespace {

PoseSequence random_seq(std::size_t frames, std::size_t joints, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    PoseSequence s(frames, joints);
    for (double& v : s.positions) v = u(rng);
    return s;
}

double mean_of(const std::vector<double>& v) {
    double m = 0;
    for (double x : v) m += x;
    return m / double(v.size());
}

double std_of(const std::vector<double>& v) {
    const double m = mean_of(v);
    double acc = 0;
    for (double x : v) acc += (x - m) * (x - m);
    return std::sqrt(acc / double(v.size()));
}

}  // namespace

TEST_CASE("profile presets carry the documented magnitudes") {
    const NoiseProfile s2 = NoiseProfile::stage2();
    CHECK(s2.gaussian_sigma == 0.01);
    CHECK(s2.bone_jitter_rel == 0.03);
    CHECK(s2.temporal_sigma == 0.015);
    CHECK(s2.temporal_window == 7);
    CHECK(s2.outlier_prob == 0.005);
    CHECK(s2.outlier_rel_range == 0.25);

    const NoiseProfile hard = NoiseProfile::eval_hard();
    CHECK(hard.gaussian_sigma == 0.03);
    CHECK(hard.bone_jitter_rel == 0.08);
    CHECK(hard.temporal_sigma == 0.03);
    CHECK(hard.outlier_prob == 0.0025);
    CHECK(hard.outlier_max_dev == 0.25);

    CHECK_NOTHROW(s2.validate());
    NoiseProfile bad = s2;
    bad.temporal_window = 6;
    CHECK_THROWS(bad.validate());
    bad = s2;
    bad.outlier_prob = 1.5;
    CHECK_THROWS(bad.validate());
    bad = s2;
    bad.gaussian_sigma = -0.1;
    CHECK_THROWS(bad.validate());
}

TEST_CASE("profile json round trip and named lookup") {
    NoiseProfile p = NoiseProfile::stage2();
    p.seed = 77;
    const auto path = std::string("/tmp/esfp_test_profile.json");
    {
        std::ofstream os(path);
        os << p.to_json();
    }
    const NoiseProfile back = NoiseProfile::from_json_file(path);
    CHECK(back.gaussian_sigma == p.gaussian_sigma);
    CHECK(back.bone_jitter_rel == p.bone_jitter_rel);
    CHECK(back.temporal_sigma == p.temporal_sigma);
    CHECK(back.outlier_prob == p.outlier_prob);
    CHECK(back.outlier_rel_range == p.outlier_rel_range);
    CHECK(back.seed == 77);

    CHECK(NoiseProfile::named_or_file("eval-hard").gaussian_sigma == 0.03);
    CHECK(NoiseProfile::named_or_file("zero").gaussian_sigma == 0.0);
    CHECK(NoiseProfile::named_or_file(path).seed == 77);
    CHECK_THROWS(NoiseProfile::named_or_file("/nonexistent/profile.json"));
}

TEST_CASE("corruption is deterministic in the seed") {
    const SkeletonDefinition sk = default_skeleton24();
    const PoseSequence seq = random_seq(40, 24, 1);
    NoiseProfile p = NoiseProfile::stage2();
    p.seed = 5;
    const PoseSequence a = apply_profile(seq, sk, p);
    const PoseSequence b = apply_profile(seq, sk, p);
    for (std::size_t i = 0; i < a.positions.size(); ++i)
        CHECK(a.positions[i] == b.positions[i]);
    p.seed = 6;
    const PoseSequence c = apply_profile(seq, sk, p);
    bool diff = false;
    for (std::size_t i = 0; i < a.positions.size(); ++i)
        if (a.positions[i] != c.positions[i]) diff = true;
    CHECK(diff);
}

TEST_CASE("zero profile is the identity") {
    const SkeletonDefinition sk = default_skeleton24();
    const PoseSequence seq = random_seq(10, 24, 2);
    const PoseSequence out = apply_profile(seq, sk, NoiseProfile::zero());
    for (std::size_t i = 0; i < seq.positions.size(); ++i)
        CHECK(out.positions[i] == seq.positions[i]);
}

TEST_CASE("gaussian corruption matches the requested sigma empirically") {
    const PoseSequence seq = random_seq(200, 24, 3);
    Rng rng(11);
    const double sigma = 0.02;
    const PoseSequence out = corrupt_gaussian(seq, sigma, rng);
    std::vector<double> deltas(seq.positions.size());
    for (std::size_t i = 0; i < deltas.size(); ++i)
        deltas[i] = out.positions[i] - seq.positions[i];
    // 14400 samples: std within ~3% of sigma, mean near zero
    CHECK(std::fabs(std_of(deltas) - sigma) < 0.03 * sigma);
    CHECK(std::fabs(mean_of(deltas)) < 5 * sigma / std::sqrt(double(deltas.size())));
}

TEST_CASE("bone jitter scales bone lengths with the requested spread") {
    const SkeletonDefinition sk = default_skeleton24();
    // rest pose repeated: bone ratios are exactly the sampled scales
    PoseParameters rest;
    rest.local_rotations.assign(23, Quaternion::identity());
    rest.bone_lengths = sk.canonical_lengths();
    const auto pos = forward_kinematics(sk, rest);
    PoseSequence seq(300, 24);
    for (std::size_t t = 0; t < 300; ++t)
        for (std::size_t j = 0; j < 24; ++j) seq.set_joint(t, j, pos[j]);

    Rng rng(12);
    const double rel = 0.05;
    const PoseSequence out = corrupt_bone_jitter(seq, sk, rel, rng);
    std::vector<double> ratios;
    for (std::size_t t = 0; t < 300; ++t) {
        const auto lengths = extract_bone_lengths(out, t, sk);
        for (std::size_t j = 1; j < 24; ++j)
            ratios.push_back(lengths[j] / sk.canonical_lengths()[j]);
    }
    CHECK(std::fabs(mean_of(ratios) - 1.0) < 0.01);
    CHECK(std::fabs(std_of(ratios) - rel) < 0.1 * rel);
    // root stays put
    for (std::size_t t = 0; t < 300; ++t)
        for (int d = 0; d < 3; ++d) CHECK(out.joint(t, 0)[d] == seq.joint(t, 0)[d]);
}

TEST_CASE("temporal jitter hits the requested std and is positively autocorrelated") {
    const std::size_t T = 400;
    PoseSequence seq(T, 1);  // zeros: output equals the jitter track
    Rng rng(13);
    const double sigma = 0.02;
    const PoseSequence out = corrupt_temporal_filtered(seq, sigma, 7, rng);
    for (std::size_t d = 0; d < 3; ++d) {
        std::vector<double> track(T);
        for (std::size_t t = 0; t < T; ++t) track[t] = out.at(t, 0, d);
        // exact by construction: each track is rescaled to the target std
        CHECK(std_of(track) == doctest::Approx(sigma).epsilon(1e-9));
        // lag-1 autocorrelation of a 7-wide moving average is strongly positive
        const double m = mean_of(track);
        double c0 = 0, c1 = 0;
        for (std::size_t t = 0; t < T; ++t) c0 += (track[t] - m) * (track[t] - m);
        for (std::size_t t = 0; t + 1 < T; ++t) c1 += (track[t] - m) * (track[t + 1] - m);
        CHECK(c1 / c0 > 0.5);
    }
    CHECK_THROWS(corrupt_temporal_filtered(seq, sigma, 6, rng));
}

TEST_CASE("outlier corruption hits the requested rate and magnitude bound") {
    const std::size_t T = 500, J = 24;
    PoseSequence seq(T, J);  // zeros
    Rng rng(14);
    const double prob = 0.01, max_dev = 0.3;
    const PoseSequence out = corrupt_outliers(seq, prob, max_dev, rng);
    std::size_t hits = 0;
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t j = 0; j < J; ++j) {
            const double d = norm(out.joint(t, j));
            if (d > 0) {
                ++hits;
                CHECK(d <= max_dev + 1e-12);
            }
        }
    // 12000 Bernoulli(0.01) trials: expect 120 +- ~33 at 3 sigma
    const double expect = double(T * J) * prob;
    CHECK(std::fabs(double(hits) - expect) < 3.5 * std::sqrt(expect));
}

TEST_CASE("relative outlier range adds the bounding-box term") {
    // a unit segment swept nowhere: bbox diagonal is exactly 1
    PoseSequence seq(50, 2);
    for (std::size_t t = 0; t < 50; ++t) seq.set_joint(t, 1, {1, 0, 0});
    CHECK(bounding_box_diagonal(seq) == doctest::Approx(1.0));

    const SkeletonDefinition sk = make_chain({0, 1.0});
    NoiseProfile p;
    p.outlier_prob = 1.0;  // every joint-frame displaced
    p.outlier_max_dev = 0.1;
    p.outlier_rel_range = 0.25;
    p.seed = 15;
    const PoseSequence out = apply_profile(seq, sk, p);
    const double bound = 0.1 + 0.25 * 1.0;
    double largest = 0;
    for (std::size_t t = 0; t < 50; ++t)
        for (std::size_t j = 0; j < 2; ++j)
            largest = std::max(largest, norm(out.joint(t, j) - seq.joint(t, j)));
    CHECK(largest <= bound + 1e-12);
    CHECK(largest > 0.1);  // the relative term is actually in play
}
