#include <benchmark/benchmark.h>

#include <random>

#include "esfp/baselines.hpp"
#include "esfp/pose.hpp"
#include "esfp/model.hpp"
#include "esfp/pipeline.hpp"

using namespace esfp;

namespace {

PoseParameters random_pose(const SkeletonDefinition& sk, std::mt19937_64& rng) {
    std::normal_distribution<double> n(0, 1);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    PoseParameters p;
    p.root_translation = {u(rng), u(rng), u(rng)};
    p.root_orientation = Quaternion(n(rng), n(rng), n(rng), n(rng));
    p.bone_lengths = sk.canonical_lengths();
    for (std::size_t j = 0; j < sk.joint_count(); ++j)
        if (!sk.is_root(j)) p.local_rotations.push_back(Quaternion(n(rng), n(rng), n(rng), n(rng)));
    return p;
}

PoseSequence random_sequence(std::size_t frames, std::size_t joints, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    PoseSequence s(frames, joints);
    for (double& v : s.positions) v = u(rng);
    return s;
}

void bm_forward_kinematics(benchmark::State& state) {
    const SkeletonDefinition sk = default_skeleton24();
    std::mt19937_64 rng(1);
    const PoseParameters p = random_pose(sk, rng);
    for (auto _ : state) {
        auto out = forward_kinematics(sk, p);
        benchmark::DoNotOptimize(out);
    }
}
BENCHMARK(bm_forward_kinematics);

void bm_model_window_desk(benchmark::State& state) {
    const SkeletonDefinition sk = default_skeleton24();
    HpstmModel model(ModelConfig::desk(), sk, 2);
    const PoseSequence win = random_sequence(model.config().window, 24, 3);
    for (auto _ : state) {
        auto out = model.smooth_window(win);
        benchmark::DoNotOptimize(out);
    }
}
BENCHMARK(bm_model_window_desk)->Unit(benchmark::kMillisecond);

void bm_streaming_frame_desk(benchmark::State& state) {
    const SkeletonDefinition sk = default_skeleton24();
    HpstmModel model(ModelConfig::desk(), sk, 4);
    const std::size_t stride = static_cast<std::size_t>(state.range(0));
    const PoseSequence seq = random_sequence(512, 24, 5);
    StreamingSmoother sm(model, stride, true);
    std::vector<Vec3> frame(24);
    std::size_t t = 0;
    for (auto _ : state) {
        for (std::size_t j = 0; j < 24; ++j) frame[j] = seq.joint(t % seq.frames, j);
        auto out = sm.push(frame);
        benchmark::DoNotOptimize(out);
        ++t;
    }
}
BENCHMARK(bm_streaming_frame_desk)->Arg(1)->Arg(5)->Unit(benchmark::kMillisecond);

void bm_savgol(benchmark::State& state) {
    const PoseSequence seq = random_sequence(static_cast<std::size_t>(state.range(0)), 24, 6);
    for (auto _ : state) {
        auto out = savgol_smooth(seq);
        benchmark::DoNotOptimize(out);
    }
}
BENCHMARK(bm_savgol)->Arg(90)->Arg(900);

void bm_particle_filter(benchmark::State& state) {
    const PoseSequence seq = random_sequence(90, 24, 7);
    for (auto _ : state) {
        Rng rng(8);
        auto out = particle_filter_smooth(seq, 300, 0.02, 0.03, rng);
        benchmark::DoNotOptimize(out);
    }
}
BENCHMARK(bm_particle_filter)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
