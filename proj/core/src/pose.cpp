#include "esfp/pose.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace esfp {

PoseSequence PoseSequence::window(std::size_t start, std::size_t len) const {
    if (start + len > frames) throw std::out_of_range("PoseSequence::window out of range");
    PoseSequence out(len, joints);
    std::copy(positions.begin() + static_cast<std::ptrdiff_t>(start * joints * 3),
              positions.begin() + static_cast<std::ptrdiff_t>((start + len) * joints * 3),
              out.positions.begin());
    return out;
}

bool PoseSequence::all_finite() const {
    for (double v : positions)
        if (!std::isfinite(v)) return false;
    return true;
}

const Quaternion& PoseParameters::rotation_of(const SkeletonDefinition& s, std::size_t j) const {
    if (s.is_root(j)) return root_orientation;
    // local_rotations holds non-root joints in joint order
    std::size_t idx = 0;
    for (std::size_t k = 0; k < j; ++k)
        if (!s.is_root(k)) ++idx;
    return local_rotations[idx];
}

std::vector<Vec3> forward_kinematics(const SkeletonDefinition& skeleton,
                                     const PoseParameters& params) {
    const std::size_t j = skeleton.joint_count();
    if (params.bone_lengths.size() != j)
        throw std::invalid_argument("forward_kinematics: bone_lengths count mismatch");
    if (params.local_rotations.size() != j - 1)
        throw std::invalid_argument("forward_kinematics: local_rotations count mismatch");

    std::vector<Vec3> pos(j);
    std::vector<Quaternion> global(j);
    std::size_t local_idx = 0;
    for (std::size_t i = 0; i < j; ++i) {
        if (skeleton.is_root(i)) {
            pos[i] = params.root_translation;
            global[i] = params.root_orientation;
        } else {
            const std::size_t p = static_cast<std::size_t>(skeleton.parent(i));
            const Vec3 offset = params.bone_lengths[i] * skeleton.rest_directions()[i];
            pos[i] = pos[p] + rotate_by_quaternion(global[p], offset);
            global[i] = compose_quaternions(global[p], params.local_rotations[local_idx]);
            ++local_idx;
        }
    }
    return pos;
}

std::vector<double> extract_bone_lengths(const std::vector<Vec3>& positions,
                                         const SkeletonDefinition& skeleton) {
    const std::size_t j = skeleton.joint_count();
    if (positions.size() != j)
        throw std::invalid_argument("extract_bone_lengths: joint count mismatch");
    std::vector<double> out(j, 0.0);
    for (std::size_t i = 0; i < j; ++i) {
        if (skeleton.is_root(i)) continue;
        out[i] = norm(positions[i] - positions[static_cast<std::size_t>(skeleton.parent(i))]);
    }
    return out;
}

std::vector<double> extract_bone_lengths(const PoseSequence& seq, std::size_t frame,
                                         const SkeletonDefinition& skeleton) {
    std::vector<Vec3> pos(seq.joints);
    for (std::size_t j = 0; j < seq.joints; ++j) pos[j] = seq.joint(frame, j);
    return extract_bone_lengths(pos, skeleton);
}

namespace {

static_assert(sizeof(float) == 4);

void write_f32le(std::ofstream& os, const std::vector<double>& data) {
    std::vector<float> buf(data.begin(), data.end());
    if constexpr (std::endian::native != std::endian::little) {
        for (float& f : buf) {
            char b[4];
            std::memcpy(b, &f, 4);
            std::swap(b[0], b[3]);
            std::swap(b[1], b[2]);
            std::memcpy(&f, b, 4);
        }
    }
    os.write(reinterpret_cast<const char*>(buf.data()),
             static_cast<std::streamsize>(buf.size() * 4));
}

std::vector<double> read_f32le(std::ifstream& is, std::size_t n) {
    std::vector<float> buf(n);
    is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n * 4));
    if (!is) throw std::runtime_error("pose sequence: truncated payload");
    if constexpr (std::endian::native != std::endian::little) {
        for (float& f : buf) {
            char b[4];
            std::memcpy(b, &f, 4);
            std::swap(b[0], b[3]);
            std::swap(b[1], b[2]);
            std::memcpy(&f, b, 4);
        }
    }
    return std::vector<double>(buf.begin(), buf.end());
}

}  // namespace

void save_pose_sequence(const PoseSequence& seq, const std::string& path_prefix) {
    nlohmann::json sidecar = {{"joints", seq.joints},
                              {"frames", seq.frames},
                              {"layout", "frame-major TxJx3"},
                              {"dtype", "f32le"}};
    {
        std::ofstream js(path_prefix + ".json");
        if (!js) throw std::runtime_error("pose sequence: cannot write " + path_prefix + ".json");
        js << sidecar.dump(2) << "\n";
    }
    std::ofstream bin(path_prefix + ".bin", std::ios::binary);
    if (!bin) throw std::runtime_error("pose sequence: cannot write " + path_prefix + ".bin");
    write_f32le(bin, seq.positions);
}

PoseSequence load_pose_sequence(const std::string& path_prefix) {
    std::ifstream js(path_prefix + ".json");
    if (!js) throw std::runtime_error("pose sequence: cannot read " + path_prefix + ".json");
    nlohmann::json sidecar = nlohmann::json::parse(js);
    if (sidecar.at("dtype").get<std::string>() != "f32le" ||
        sidecar.at("layout").get<std::string>() != "frame-major TxJx3")
        throw std::runtime_error("pose sequence: unsupported layout/dtype in " + path_prefix);
    PoseSequence seq(sidecar.at("frames").get<std::size_t>(),
                     sidecar.at("joints").get<std::size_t>());
    std::ifstream bin(path_prefix + ".bin", std::ios::binary);
    if (!bin) throw std::runtime_error("pose sequence: cannot read " + path_prefix + ".bin");
    seq.positions = read_f32le(bin, seq.frames * seq.joints * 3);
    return seq;
}

void export_pose_csv(const PoseSequence& seq, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("pose sequence: cannot write " + path);
    os << "frame,joint,x,y,z\n";
    os.precision(17);
    for (std::size_t t = 0; t < seq.frames; ++t)
        for (std::size_t j = 0; j < seq.joints; ++j)
            os << t << "," << j << "," << seq.at(t, j, 0) << "," << seq.at(t, j, 1) << ","
               << seq.at(t, j, 2) << "\n";
}

}  // namespace esfp
