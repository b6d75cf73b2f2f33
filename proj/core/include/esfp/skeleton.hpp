#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "esfp/quaternion.hpp"

namespace esfp {

inline constexpr int kNoParent = -1;

// Joint tree defining the kinematic manifold: parent indices, unit rest
// directions (parent -> joint) and canonical bone lengths in meters.
// Joints are stored in topological order (parent index < child index).
class SkeletonDefinition {
public:
    SkeletonDefinition(std::vector<std::string> joint_names, std::vector<int> parents,
                       std::vector<Vec3> rest_directions, std::vector<double> canonical_lengths);

    std::size_t joint_count() const { return names_.size(); }
    const std::vector<std::string>& joint_names() const { return names_; }
    const std::vector<int>& parents() const { return parents_; }
    const std::vector<Vec3>& rest_directions() const { return rest_; }
    const std::vector<double>& canonical_lengths() const { return lengths_; }

    int parent(std::size_t j) const { return parents_[j]; }
    bool is_root(std::size_t j) const { return parents_[j] == kNoParent; }
    std::size_t root() const { return root_; }

private:
    std::vector<std::string> names_;
    std::vector<int> parents_;
    std::vector<Vec3> rest_;
    std::vector<double> lengths_;
    std::size_t root_ = 0;
};

// JSON file with exactly the keys {names, parents, rest_directions,
// canonical_lengths}; parent of the root is encoded as -1.
SkeletonDefinition load_skeleton(const std::string& path);
void save_skeleton(const SkeletonDefinition& skeleton, const std::string& path);

// Default 24-joint skeleton with SMPL-like topology and plausible canonical
// lengths. Configuration defaults, not measured ground truth.
SkeletonDefinition default_skeleton24();

// Small straight chain along +x; joint 0 is the root with length 0.
SkeletonDefinition make_chain(const std::vector<double>& lengths);

}  // namespace esfp
