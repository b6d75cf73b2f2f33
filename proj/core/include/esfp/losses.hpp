#pragma once

#include <optional>
#include <vector>

#include "esfp/graph.hpp"
#include "esfp/pose.hpp"

namespace esfp {

// Curriculum loss weights. Stage-2 defaults and the NLL coefficient follow the
// training schedule this model ships with.
struct LossWeights {
    double w_pos = 1.0;
    double w_bone = 0.3;
    double w_vel = 0.5;
    double w_accel = 0.5;
    double lambda_nll = 1e-4;
};

// Per frame-joint lower-triangular Cholesky factors of 3x3 position
// covariance, row-major 3x3 blocks. Diagonals are strictly positive.
struct CovarianceFactors {
    std::size_t frames = 0;
    std::size_t joints = 0;
    std::vector<double> chol;  // frames * joints * 9

    CovarianceFactors() = default;
    CovarianceFactors(std::size_t t, std::size_t j) : frames(t), joints(j), chol(t * j * 9, 0.0) {}

    double& at(std::size_t t, std::size_t j, std::size_t r, std::size_t c) {
        return chol[((t * joints + j) * 3 + r) * 3 + c];
    }
    double at(std::size_t t, std::size_t j, std::size_t r, std::size_t c) const {
        return chol[((t * joints + j) * 3 + r) * 3 + c];
    }
    // trace of Sigma = L L^T for one joint-frame
    double trace_sigma(std::size_t t, std::size_t j) const;
};

// raw: 6 reals per joint-frame (3 log-diagonal, 3 strict lower triangle).
// Diagonal = exp(raw) floored at 1e-6; Sigma = L L^T is SPD by construction.
CovarianceFactors assemble_cholesky(const std::vector<double>& raw, std::size_t frames,
                                    std::size_t joints);

namespace lossgraph {

using ad::Value;

// All tensors are (B, T, J, 3) positions unless noted; losses are scalars.
Value loss_position(const Value& pred, const Value& gt);
// pred_lengths: (B, T, J); canonical: (J,)
Value loss_bone(const Value& pred_lengths, const Value& canonical);
Value loss_velocity(const Value& pred, const Value& gt);
Value loss_acceleration(const Value& pred, const Value& gt);
// diag: (B, T, J, 3) positive; lower: (B, T, J, 3) = (l21, l31, l32)
Value loss_nll(const Value& pred, const Value& gt, const Value& diag, const Value& lower);

struct StageComponents {
    Value pos, bone, vel, accel;
    std::optional<Value> nll;
};
Value loss_total(int stage, const StageComponents& c, const LossWeights& w);

}  // namespace lossgraph

// Eager wrappers over PoseSequence (B = 1) for evaluation and tests.
double loss_position(const PoseSequence& pred, const PoseSequence& gt);
double loss_bone(const PoseSequence& pred, const SkeletonDefinition& skeleton);
double loss_velocity(const PoseSequence& pred, const PoseSequence& gt);
double loss_acceleration(const PoseSequence& pred, const PoseSequence& gt);
double loss_nll(const PoseSequence& pred, const PoseSequence& gt, const CovarianceFactors& f);

// Weighted combination on plain scalars. Stage 1: pos only; stage 2 adds
// bone/vel/accel; stage 3 adds lambda_nll * nll.
double loss_total(int stage, double pos, double bone, double vel, double accel, double nll,
                  const LossWeights& w);

}  // namespace esfp
