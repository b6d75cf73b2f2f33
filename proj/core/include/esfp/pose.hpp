#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "esfp/quaternion.hpp"
#include "esfp/skeleton.hpp"

namespace esfp {

// T x J x 3 global joint positions in meters, frame-major.
struct PoseSequence {
    std::size_t frames = 0;
    std::size_t joints = 0;
    std::vector<double> positions;  // frames * joints * 3

    PoseSequence() = default;
    PoseSequence(std::size_t t, std::size_t j)
        : frames(t), joints(j), positions(t * j * 3, 0.0) {}

    double& at(std::size_t t, std::size_t j, std::size_t d) {
        return positions[(t * joints + j) * 3 + d];
    }
    double at(std::size_t t, std::size_t j, std::size_t d) const {
        return positions[(t * joints + j) * 3 + d];
    }
    Vec3 joint(std::size_t t, std::size_t j) const {
        return {at(t, j, 0), at(t, j, 1), at(t, j, 2)};
    }
    void set_joint(std::size_t t, std::size_t j, const Vec3& v) {
        at(t, j, 0) = v[0];
        at(t, j, 1) = v[1];
        at(t, j, 2) = v[2];
    }

    PoseSequence window(std::size_t start, std::size_t len) const;
    bool all_finite() const;
};

// Manifold coordinates for one frame: root pose, parent-relative joint
// rotations, per-joint bone lengths (root entry 0).
struct PoseParameters {
    Vec3 root_translation{0, 0, 0};
    Quaternion root_orientation;
    std::vector<Quaternion> local_rotations;  // one per non-root joint, joint order
    std::vector<double> bone_lengths;         // one per joint, root = 0

    // Rotation of joint j: the root slot holds root_orientation.
    const Quaternion& rotation_of(const SkeletonDefinition& s, std::size_t j) const;
};

// Differentiable-by-construction FK decode (this is the eager reference;
// the training path replays the same recursion inside the autodiff graph).
// Returns J x 3 positions (row-major, meters).
std::vector<Vec3> forward_kinematics(const SkeletonDefinition& skeleton,
                                     const PoseParameters& params);

// length[j] = ||pos_j - pos_parent(j)||, root length 0.
std::vector<double> extract_bone_lengths(const std::vector<Vec3>& positions,
                                         const SkeletonDefinition& skeleton);
std::vector<double> extract_bone_lengths(const PoseSequence& seq, std::size_t frame,
                                         const SkeletonDefinition& skeleton);

// Pose sequence files: <path>.json sidecar
// {joints, frames, layout:"frame-major TxJx3", dtype:"f32le"} plus <path>.bin
// raw little-endian float32 payload.
void save_pose_sequence(const PoseSequence& seq, const std::string& path_prefix);
PoseSequence load_pose_sequence(const std::string& path_prefix);

// Debug CSV: header frame,joint,x,y,z.
void export_pose_csv(const PoseSequence& seq, const std::string& path);

}  // namespace esfp
