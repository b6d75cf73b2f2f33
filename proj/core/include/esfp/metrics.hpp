#pragma once

#include <string>

#include "esfp/pose.hpp"
#include "esfp/skeleton.hpp"

namespace esfp {

// Accuracy / smoothness / bone-consistency summary for one method.
struct MetricReport {
    double mpjpe_mm = 0;
    double pa_mpjpe_mm = 0;
    double rr_mpjpe_mm = 0;
    double mean_accel = 0;   // m / frame^2
    double mean_jerk = 0;    // m / frame^3
    double bone_mae_mm = 0;
    double bone_stddev_mm = 0;

    static std::string csv_header();
    std::string to_csv_row() const;   // 4-decimal fixed
    std::string to_json() const;
};

struct AccuracyMetrics {
    double mpjpe_mm = 0;
    double pa_mpjpe_mm = 0;   // per-frame similarity Procrustes (R, t, scale)
    double rr_mpjpe_mm = 0;   // root joint subtracted per frame
};
AccuracyMetrics compute_accuracy(const PoseSequence& pred, const PoseSequence& gt,
                                 const SkeletonDefinition& skeleton);

struct SmoothnessMetrics {
    double mean_accel = 0;
    double mean_jerk = 0;
};
// Mean Euclidean norm of second / third finite differences. Requires T >= 4.
SmoothnessMetrics compute_smoothness(const PoseSequence& pred);

struct BoneMetrics {
    double bone_mae_mm = 0;     // vs canonical lengths
    double bone_stddev_mm = 0;  // mean temporal std per non-root bone
};
BoneMetrics compute_bone_metrics(const PoseSequence& pred, const SkeletonDefinition& skeleton);

MetricReport compute_metrics(const PoseSequence& pred, const PoseSequence& gt,
                             const SkeletonDefinition& skeleton);

}  // namespace esfp
