#include "esfp/corruption.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace esfp {

void NoiseProfile::validate() const {
    if (gaussian_sigma < 0 || bone_jitter_rel < 0 || temporal_sigma < 0 || outlier_max_dev < 0 ||
        outlier_rel_range < 0)
        throw std::invalid_argument("NoiseProfile: magnitudes must be >= 0");
    if (temporal_window % 2 == 0 || temporal_window < 1)
        throw std::invalid_argument("NoiseProfile: temporal_window must be odd and >= 1");
    if (outlier_prob < 0 || outlier_prob > 1)
        throw std::invalid_argument("NoiseProfile: outlier_prob must be in [0, 1]");
}

NoiseProfile NoiseProfile::stage2() {
    NoiseProfile p;
    p.gaussian_sigma = 0.01;
    p.bone_jitter_rel = 0.03;
    p.temporal_sigma = 0.015;
    p.temporal_window = 7;
    p.outlier_prob = 0.005;
    p.outlier_max_dev = 0.0;
    p.outlier_rel_range = 0.25;
    return p;
}

NoiseProfile NoiseProfile::eval_hard() {
    NoiseProfile p;
    p.gaussian_sigma = 0.03;
    p.bone_jitter_rel = 0.08;
    p.temporal_sigma = 0.03;
    p.temporal_window = 7;
    p.outlier_prob = 0.0025;
    p.outlier_max_dev = 0.25;
    return p;
}

NoiseProfile NoiseProfile::zero() { return NoiseProfile{}; }

NoiseProfile NoiseProfile::named_or_file(const std::string& name) {
    if (name == "stage2") return stage2();
    if (name == "eval-hard") return eval_hard();
    if (name == "zero") return zero();
    return from_json_file(name);
}

NoiseProfile NoiseProfile::from_json_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("NoiseProfile: cannot read " + path);
    nlohmann::json j = nlohmann::json::parse(is);
    NoiseProfile p;
    p.gaussian_sigma = j.value("gaussian_sigma", 0.0);
    p.bone_jitter_rel = j.value("bone_jitter_rel", 0.0);
    p.temporal_sigma = j.value("temporal_sigma", 0.0);
    p.temporal_window = j.value("temporal_window", std::size_t{7});
    p.outlier_prob = j.value("outlier_prob", 0.0);
    p.outlier_max_dev = j.value("outlier_max_dev", 0.0);
    p.outlier_rel_range = j.value("outlier_rel_range", 0.0);
    p.seed = j.value("seed", std::uint64_t{0});
    p.validate();
    return p;
}

std::string NoiseProfile::to_json() const {
    nlohmann::json j = {{"gaussian_sigma", gaussian_sigma},
                        {"bone_jitter_rel", bone_jitter_rel},
                        {"temporal_sigma", temporal_sigma},
                        {"temporal_window", temporal_window},
                        {"outlier_prob", outlier_prob},
                        {"outlier_max_dev", outlier_max_dev},
                        {"outlier_rel_range", outlier_rel_range},
                        {"seed", seed}};
    return j.dump(2);
}

PoseSequence corrupt_gaussian(const PoseSequence& seq, double sigma, Rng& rng) {
    if (sigma < 0) throw std::invalid_argument("corrupt_gaussian: sigma < 0");
    if (sigma == 0) return seq;
    PoseSequence out = seq;
    std::normal_distribution<double> n(0.0, sigma);
    for (double& v : out.positions) v += n(rng);
    return out;
}

PoseSequence corrupt_bone_jitter(const PoseSequence& seq, const SkeletonDefinition& skeleton,
                                 double rel_sigma, Rng& rng) {
    if (seq.joints != skeleton.joint_count())
        throw std::invalid_argument("corrupt_bone_jitter: joint count mismatch");
    if (rel_sigma == 0) return seq;
    PoseSequence out(seq.frames, seq.joints);
    std::normal_distribution<double> n(0.0, rel_sigma);
    for (std::size_t t = 0; t < seq.frames; ++t) {
        // sample per-bone scales, then re-chain root to leaf so descendants follow
        std::vector<double> scales(seq.joints, 1.0);
        for (std::size_t j = 0; j < seq.joints; ++j) {
            if (skeleton.is_root(j)) continue;
            double s = 0.0;
            for (int attempt = 0; attempt < 16; ++attempt) {
                s = 1.0 + n(rng);
                if (s > 0) break;
            }
            scales[j] = s > 0 ? s : 0.01;
        }
        for (std::size_t j = 0; j < seq.joints; ++j) {
            if (skeleton.is_root(j)) {
                out.set_joint(t, j, seq.joint(t, j));
            } else {
                const std::size_t p = static_cast<std::size_t>(skeleton.parent(j));
                const Vec3 offset = seq.joint(t, j) - seq.joint(t, p);
                out.set_joint(t, j, out.joint(t, p) + scales[j] * offset);
            }
        }
    }
    return out;
}

PoseSequence corrupt_temporal_filtered(const PoseSequence& seq, double signal_sigma,
                                       std::size_t window, Rng& rng) {
    if (window % 2 == 0 || window < 1)
        throw std::invalid_argument("corrupt_temporal_filtered: window must be odd");
    if (signal_sigma == 0) return seq;
    PoseSequence out = seq;
    const std::size_t t_len = seq.frames;
    const std::size_t half = window / 2;
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<double> white(t_len), smooth(t_len);
    for (std::size_t j = 0; j < seq.joints; ++j) {
        for (std::size_t d = 0; d < 3; ++d) {
            for (std::size_t t = 0; t < t_len; ++t) white[t] = n(rng);
            // centered moving average, truncated at the edges
            for (std::size_t t = 0; t < t_len; ++t) {
                const std::size_t lo = t >= half ? t - half : 0;
                const std::size_t hi = std::min(t + half, t_len - 1);
                double s = 0;
                for (std::size_t k = lo; k <= hi; ++k) s += white[k];
                smooth[t] = s / static_cast<double>(hi - lo + 1);
            }
            // rescale the smoothed track to the requested empirical std
            double mean = 0;
            for (double v : smooth) mean += v;
            mean /= static_cast<double>(t_len);
            double var = 0;
            for (double v : smooth) var += (v - mean) * (v - mean);
            var /= static_cast<double>(t_len);
            const double std_dev = std::sqrt(var);
            const double gain = std_dev > 1e-12 ? signal_sigma / std_dev : 0.0;
            for (std::size_t t = 0; t < t_len; ++t) out.at(t, j, d) += gain * smooth[t];
        }
    }
    return out;
}

PoseSequence corrupt_outliers(const PoseSequence& seq, double prob, double max_dev, Rng& rng) {
    if (prob < 0 || prob > 1) throw std::invalid_argument("corrupt_outliers: prob out of [0,1]");
    if (max_dev < 0) throw std::invalid_argument("corrupt_outliers: max_dev < 0");
    if (prob == 0 || max_dev == 0) return seq;
    PoseSequence out = seq;
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::normal_distribution<double> n(0.0, 1.0);
    for (std::size_t t = 0; t < seq.frames; ++t)
        for (std::size_t j = 0; j < seq.joints; ++j) {
            if (u01(rng) >= prob) continue;
            // uniform direction on the sphere via normalized Gaussian triple
            Vec3 dir{n(rng), n(rng), n(rng)};
            const double len = norm(dir);
            if (len < 1e-12) continue;
            const double mag = u01(rng) * max_dev;
            out.set_joint(t, j, out.joint(t, j) + (mag / len) * dir);
        }
    return out;
}

double bounding_box_diagonal(const PoseSequence& seq) {
    if (seq.positions.empty()) return 0.0;
    Vec3 lo{seq.positions[0], seq.positions[1], seq.positions[2]};
    Vec3 hi = lo;
    for (std::size_t t = 0; t < seq.frames; ++t)
        for (std::size_t j = 0; j < seq.joints; ++j)
            for (std::size_t d = 0; d < 3; ++d) {
                lo[d] = std::min(lo[d], seq.at(t, j, d));
                hi[d] = std::max(hi[d], seq.at(t, j, d));
            }
    return norm(hi - lo);
}

PoseSequence apply_profile(const PoseSequence& seq, const SkeletonDefinition& skeleton,
                           const NoiseProfile& profile, Rng& rng) {
    profile.validate();
    double max_dev = profile.outlier_max_dev;
    if (profile.outlier_rel_range > 0)
        max_dev += profile.outlier_rel_range * bounding_box_diagonal(seq);
    PoseSequence out = corrupt_bone_jitter(seq, skeleton, profile.bone_jitter_rel, rng);
    out = corrupt_temporal_filtered(out, profile.temporal_sigma, profile.temporal_window, rng);
    out = corrupt_gaussian(out, profile.gaussian_sigma, rng);
    out = corrupt_outliers(out, profile.outlier_prob, max_dev, rng);
    return out;
}

PoseSequence apply_profile(const PoseSequence& seq, const SkeletonDefinition& skeleton,
                           const NoiseProfile& profile) {
    Rng rng(profile.seed);
    return apply_profile(seq, skeleton, profile, rng);
}

}  // namespace esfp
