#include "esfp/skeleton.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace esfp {

SkeletonDefinition::SkeletonDefinition(std::vector<std::string> joint_names,
                                       std::vector<int> parents, std::vector<Vec3> rest_directions,
                                       std::vector<double> canonical_lengths)
    : names_(std::move(joint_names)),
      parents_(std::move(parents)),
      rest_(std::move(rest_directions)),
      lengths_(std::move(canonical_lengths)) {
    const std::size_t j = names_.size();
    if (parents_.size() != j || rest_.size() != j || lengths_.size() != j || j == 0)
        throw std::invalid_argument("skeleton: field sizes disagree");
    std::size_t roots = 0;
    for (std::size_t i = 0; i < j; ++i) {
        if (parents_[i] == kNoParent) {
            roots++;
            root_ = i;
            if (lengths_[i] != 0.0)
                throw std::invalid_argument("skeleton: root bone length must be 0");
        } else {
            if (parents_[i] < 0 || static_cast<std::size_t>(parents_[i]) >= j)
                throw std::invalid_argument("skeleton: parent index out of range");
            if (static_cast<std::size_t>(parents_[i]) >= i)
                throw std::invalid_argument("skeleton: joints must be topologically ordered");
            const double n = norm(rest_[i]);
            if (std::fabs(n - 1.0) > 1e-9)
                throw std::invalid_argument("skeleton: rest_direction of joint " +
                                            std::to_string(i) + " is not unit norm");
            if (lengths_[i] < 0) throw std::invalid_argument("skeleton: negative bone length");
        }
    }
    if (roots != 1) throw std::invalid_argument("skeleton: expected exactly one root");
}

SkeletonDefinition load_skeleton(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("skeleton: cannot read " + path);
    nlohmann::json j = nlohmann::json::parse(is);
    auto names = j.at("names").get<std::vector<std::string>>();
    auto parents = j.at("parents").get<std::vector<int>>();
    auto dirs = j.at("rest_directions").get<std::vector<std::array<double, 3>>>();
    auto lengths = j.at("canonical_lengths").get<std::vector<double>>();
    std::vector<Vec3> rest(dirs.begin(), dirs.end());
    return SkeletonDefinition(std::move(names), std::move(parents), std::move(rest),
                              std::move(lengths));
}

void save_skeleton(const SkeletonDefinition& s, const std::string& path) {
    nlohmann::json j;
    j["names"] = s.joint_names();
    j["parents"] = s.parents();
    j["rest_directions"] = s.rest_directions();
    j["canonical_lengths"] = s.canonical_lengths();
    std::ofstream os(path);
    if (!os) throw std::runtime_error("skeleton: cannot write " + path);
    os << j.dump(2) << "\n";
}

namespace {

Vec3 unit(Vec3 v) {
    const double n = norm(v);
    return {v[0] / n, v[1] / n, v[2] / n};
}

}  // namespace

SkeletonDefinition default_skeleton24() {
    // SMPL-like topology; human frame: +X forward, +Y left, +Z up.
    std::vector<std::string> names = {
        "pelvis",     "left_hip",      "right_hip",      "spine1",     "left_knee",
        "right_knee", "spine2",        "left_ankle",     "right_ankle", "spine3",
        "left_foot",  "right_foot",    "neck",           "left_collar", "right_collar",
        "head",       "left_shoulder", "right_shoulder", "left_elbow",  "right_elbow",
        "left_wrist", "right_wrist",   "left_hand",      "right_hand"};
    std::vector<int> parents = {-1, 0,  0,  0,  1,  2,  3,  4,  5,  6,  7,  8,
                                9,  9,  9,  12, 13, 14, 16, 17, 18, 19, 20, 21};
    std::vector<Vec3> rest = {
        {1, 0, 0},                 // pelvis (unused)
        unit({0, 0.8, -0.6}),      // left_hip
        unit({0, -0.8, -0.6}),     // right_hip
        {0, 0, 1},                 // spine1
        {0, 0, -1},                // left_knee
        {0, 0, -1},                // right_knee
        {0, 0, 1},                 // spine2
        {0, 0, -1},                // left_ankle
        {0, 0, -1},                // right_ankle
        {0, 0, 1},                 // spine3
        unit({1, 0, -0.25}),       // left_foot
        unit({1, 0, -0.25}),       // right_foot
        {0, 0, 1},                 // neck
        unit({0, 1, 0.25}),        // left_collar
        unit({0, -1, 0.25}),       // right_collar
        {0, 0, 1},                 // head
        {0, 1, 0},                 // left_shoulder
        {0, -1, 0},                // right_shoulder
        {0, 1, 0},                 // left_elbow
        {0, -1, 0},                // right_elbow
        {0, 1, 0},                 // left_wrist
        {0, -1, 0},                // right_wrist
        {0, 1, 0},                 // left_hand
        {0, -1, 0}};               // right_hand
    std::vector<double> lengths = {0.0,  0.10, 0.10, 0.12, 0.38, 0.38, 0.12, 0.40,
                                   0.40, 0.12, 0.15, 0.15, 0.10, 0.12, 0.12, 0.12,
                                   0.10, 0.10, 0.26, 0.26, 0.25, 0.25, 0.08, 0.08};
    return SkeletonDefinition(std::move(names), std::move(parents), std::move(rest),
                              std::move(lengths));
}

SkeletonDefinition make_chain(const std::vector<double>& lengths) {
    if (lengths.empty() || lengths[0] != 0.0)
        throw std::invalid_argument("make_chain: lengths[0] must be 0 (root)");
    std::vector<std::string> names;
    std::vector<int> parents;
    std::vector<Vec3> rest;
    for (std::size_t i = 0; i < lengths.size(); ++i) {
        names.push_back("joint" + std::to_string(i));
        parents.push_back(i == 0 ? kNoParent : static_cast<int>(i) - 1);
        rest.push_back({1, 0, 0});
    }
    return SkeletonDefinition(std::move(names), std::move(parents), std::move(rest), lengths);
}

}  // namespace esfp
