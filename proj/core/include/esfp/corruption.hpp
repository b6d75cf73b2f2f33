#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "esfp/pose.hpp"

namespace esfp {

// Stochastic perturbation profile for curriculum training and evaluation.
// outlier displacement magnitude = outlier_max_dev (absolute, meters)
//   + outlier_rel_range * bounding-box diagonal of the clean sequence.
struct NoiseProfile {
    double gaussian_sigma = 0.0;    // m
    double bone_jitter_rel = 0.0;   // fraction
    double temporal_sigma = 0.0;    // m
    std::size_t temporal_window = 7;  // frames, odd
    double outlier_prob = 0.0;      // per joint-frame
    double outlier_max_dev = 0.0;   // m
    double outlier_rel_range = 0.0; // fraction of bbox diagonal
    std::uint64_t seed = 0;

    void validate() const;

    static NoiseProfile stage2();
    static NoiseProfile eval_hard();
    static NoiseProfile zero();

    // Named profile ("stage2", "eval-hard") or a JSON file path.
    static NoiseProfile named_or_file(const std::string& name);
    static NoiseProfile from_json_file(const std::string& path);
    std::string to_json() const;
};

using Rng = std::mt19937_64;

PoseSequence corrupt_gaussian(const PoseSequence& seq, double sigma, Rng& rng);
PoseSequence corrupt_bone_jitter(const PoseSequence& seq, const SkeletonDefinition& skeleton,
                                 double rel_sigma, Rng& rng);
PoseSequence corrupt_temporal_filtered(const PoseSequence& seq, double signal_sigma,
                                       std::size_t window, Rng& rng);
PoseSequence corrupt_outliers(const PoseSequence& seq, double prob, double max_dev, Rng& rng);

// Fixed application order: bone jitter -> temporal jitter -> Gaussian ->
// outliers; deterministic given profile.seed.
PoseSequence apply_profile(const PoseSequence& seq, const SkeletonDefinition& skeleton,
                           const NoiseProfile& profile);
PoseSequence apply_profile(const PoseSequence& seq, const SkeletonDefinition& skeleton,
                           const NoiseProfile& profile, Rng& rng);

// Bounding-box diagonal of all joint positions (the "typical joint range"
// proxy used by relative outlier magnitudes).
double bounding_box_diagonal(const PoseSequence& seq);

}  // namespace esfp
