#include "esfp/metrics.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>
#include <json.hpp>

namespace esfp {

namespace {

void require_matching(const PoseSequence& a, const PoseSequence& b) {
    if (a.frames != b.frames || a.joints != b.joints)
        throw std::invalid_argument("metrics: sequence shapes must match");
}

Eigen::MatrixXd frame_matrix(const PoseSequence& seq, std::size_t t) {
    Eigen::MatrixXd m(3, static_cast<Eigen::Index>(seq.joints));
    for (std::size_t j = 0; j < seq.joints; ++j)
        for (std::size_t d = 0; d < 3; ++d)
            m(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(j)) = seq.at(t, j, d);
    return m;
}

// Similarity Procrustes (rotation, translation, uniform scale) of src onto
// dst, then the mean residual joint distance.
double aligned_frame_error(const Eigen::MatrixXd& src, const Eigen::MatrixXd& dst) {
    const Eigen::Index n = src.cols();
    const Eigen::Vector3d mu_s = src.rowwise().mean();
    const Eigen::Vector3d mu_d = dst.rowwise().mean();
    const Eigen::MatrixXd xs = src.colwise() - mu_s;
    const Eigen::MatrixXd xd = dst.colwise() - mu_d;
    const double var_s = xs.squaredNorm() / static_cast<double>(n);
    const Eigen::Matrix3d cov = xd * xs.transpose() / static_cast<double>(n);
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Vector3d s = Eigen::Vector3d::Ones();
    if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0) s(2) = -1;
    const Eigen::Matrix3d r = svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
    double scale = 1.0;
    if (var_s > 1e-18) scale = svd.singularValues().dot(s) / var_s;
    const Eigen::Vector3d t = mu_d - scale * r * mu_s;
    const Eigen::MatrixXd aligned = (scale * r * src).colwise() + t;
    return (aligned - dst).colwise().norm().mean();
}

}  // namespace

AccuracyMetrics compute_accuracy(const PoseSequence& pred, const PoseSequence& gt,
                                 const SkeletonDefinition& skeleton) {
    require_matching(pred, gt);
    if (pred.joints != skeleton.joint_count())
        throw std::invalid_argument("compute_accuracy: skeleton joint count mismatch");
    const std::size_t root = skeleton.root();
    AccuracyMetrics out;
    double sum_raw = 0, sum_pa = 0, sum_rr = 0;
    for (std::size_t t = 0; t < pred.frames; ++t) {
        const Eigen::MatrixXd p = frame_matrix(pred, t);
        const Eigen::MatrixXd g = frame_matrix(gt, t);
        sum_raw += (p - g).colwise().norm().mean();
        sum_pa += aligned_frame_error(p, g);
        const Eigen::MatrixXd pr = p.colwise() - Eigen::Vector3d(p.col(static_cast<Eigen::Index>(root)));
        const Eigen::MatrixXd gr = g.colwise() - Eigen::Vector3d(g.col(static_cast<Eigen::Index>(root)));
        sum_rr += (pr - gr).colwise().norm().mean();
    }
    const double frames = static_cast<double>(pred.frames);
    out.mpjpe_mm = sum_raw / frames * 1000.0;
    out.pa_mpjpe_mm = sum_pa / frames * 1000.0;
    out.rr_mpjpe_mm = sum_rr / frames * 1000.0;
    return out;
}

SmoothnessMetrics compute_smoothness(const PoseSequence& pred) {
    if (pred.frames < 4)
        throw std::invalid_argument("compute_smoothness: need at least 4 frames");
    SmoothnessMetrics out;
    double accel_sum = 0, jerk_sum = 0;
    std::size_t accel_n = 0, jerk_n = 0;
    for (std::size_t j = 0; j < pred.joints; ++j) {
        for (std::size_t t = 0; t + 2 < pred.frames; ++t) {
            const Vec3 a =
                pred.joint(t + 2, j) - 2.0 * pred.joint(t + 1, j) + pred.joint(t, j);
            accel_sum += norm(a);
            ++accel_n;
            if (t + 3 < pred.frames) {
                const Vec3 jv = pred.joint(t + 3, j) - 3.0 * pred.joint(t + 2, j) +
                                3.0 * pred.joint(t + 1, j) - pred.joint(t, j);
                jerk_sum += norm(jv);
                ++jerk_n;
            }
        }
    }
    out.mean_accel = accel_sum / static_cast<double>(accel_n);
    out.mean_jerk = jerk_sum / static_cast<double>(jerk_n);
    return out;
}

BoneMetrics compute_bone_metrics(const PoseSequence& pred, const SkeletonDefinition& skeleton) {
    if (pred.joints != skeleton.joint_count())
        throw std::invalid_argument("compute_bone_metrics: skeleton joint count mismatch");
    BoneMetrics out;
    double mae_sum = 0;
    std::size_t mae_n = 0;
    double std_sum = 0;
    std::size_t bones = 0;
    std::vector<double> lengths(pred.frames);
    for (std::size_t j = 0; j < pred.joints; ++j) {
        if (skeleton.is_root(j)) continue;
        const std::size_t p = static_cast<std::size_t>(skeleton.parent(j));
        double mean = 0;
        for (std::size_t t = 0; t < pred.frames; ++t) {
            lengths[t] = norm(pred.joint(t, j) - pred.joint(t, p));
            mae_sum += std::fabs(lengths[t] - skeleton.canonical_lengths()[j]);
            ++mae_n;
            mean += lengths[t];
        }
        mean /= static_cast<double>(pred.frames);
        double var = 0;
        for (double l : lengths) var += (l - mean) * (l - mean);
        var /= static_cast<double>(pred.frames);
        std_sum += std::sqrt(var);
        ++bones;
    }
    out.bone_mae_mm = mae_n ? mae_sum / static_cast<double>(mae_n) * 1000.0 : 0.0;
    out.bone_stddev_mm = bones ? std_sum / static_cast<double>(bones) * 1000.0 : 0.0;
    return out;
}

MetricReport compute_metrics(const PoseSequence& pred, const PoseSequence& gt,
                             const SkeletonDefinition& skeleton) {
    const AccuracyMetrics acc = compute_accuracy(pred, gt, skeleton);
    const SmoothnessMetrics sm = compute_smoothness(pred);
    const BoneMetrics bm = compute_bone_metrics(pred, skeleton);
    MetricReport r;
    r.mpjpe_mm = acc.mpjpe_mm;
    r.pa_mpjpe_mm = acc.pa_mpjpe_mm;
    r.rr_mpjpe_mm = acc.rr_mpjpe_mm;
    r.mean_accel = sm.mean_accel;
    r.mean_jerk = sm.mean_jerk;
    r.bone_mae_mm = bm.bone_mae_mm;
    r.bone_stddev_mm = bm.bone_stddev_mm;
    return r;
}

std::string MetricReport::csv_header() {
    return "mpjpe_mm,pa_mpjpe_mm,rr_mpjpe_mm,mean_accel,mean_jerk,bone_mae_mm,bone_stddev_mm";
}

std::string MetricReport::to_csv_row() const {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(4);
    os << mpjpe_mm << ',' << pa_mpjpe_mm << ',' << rr_mpjpe_mm << ',' << mean_accel << ','
       << mean_jerk << ',' << bone_mae_mm << ',' << bone_stddev_mm;
    return os.str();
}

std::string MetricReport::to_json() const {
    nlohmann::json j = {{"mpjpe_mm", mpjpe_mm},
                        {"pa_mpjpe_mm", pa_mpjpe_mm},
                        {"rr_mpjpe_mm", rr_mpjpe_mm},
                        {"mean_accel", mean_accel},
                        {"mean_jerk", mean_jerk},
                        {"bone_mae_mm", bone_mae_mm},
                        {"bone_stddev_mm", bone_stddev_mm}};
    return j.dump(2);
}

}  // namespace esfp
