#pragma once

#include <cstdint>
#include <vector>

#include "esfp/corruption.hpp"
#include "esfp/pose.hpp"

namespace esfp {

// Savitzky-Golay smoothing, applied independently to each joint-coordinate
// time series. Interior samples take the center value of the least-squares
// polynomial fit; edge samples evaluate the polynomial fitted on the first /
// last full window. If T < window the largest odd window <= T is used (with
// the order clamped below it).
PoseSequence savgol_smooth(const PoseSequence& seq, std::size_t window = 7,
                           std::size_t order = 2);

// Per-joint particle filter with a constant-velocity model: state (p, v) in
// R^6, Gaussian process/measurement noise, systematic resampling when the
// effective sample size drops below N/2. Output is the posterior mean
// position per frame.
struct ParticleFilterStats {
    std::size_t resample_events = 0;
    std::size_t degenerate_reinits = 0;  // all-zero weight recoveries
};
PoseSequence particle_filter_smooth(const PoseSequence& seq, std::size_t particles,
                                    double process_sigma, double meas_sigma, Rng& rng,
                                    ParticleFilterStats* stats = nullptr);

// One-euro filter over a 3-vector signal.
struct OneEuroState {
    bool initialized = false;
    double t = 0.0;
    Vec3 x{0, 0, 0};
    Vec3 dx{0, 0, 0};
};
// Returns the filtered sample; the state is advanced in place.
// Timestamps must be strictly increasing.
Vec3 one_euro_step(OneEuroState& state, const Vec3& sample, double t_seconds,
                   double min_cutoff = 1.0, double beta = 0.007, double d_cutoff = 1.0);

}  // namespace esfp
