#include "esfp/losses.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace esfp {

double CovarianceFactors::trace_sigma(std::size_t t, std::size_t j) const {
    double tr = 0;
    for (std::size_t r = 0; r < 3; ++r)
        for (std::size_t c = 0; c <= r; ++c) {
            const double v = at(t, j, r, c);
            tr += v * v;
        }
    return tr;
}

CovarianceFactors assemble_cholesky(const std::vector<double>& raw, std::size_t frames,
                                    std::size_t joints) {
    if (raw.size() != frames * joints * 6)
        throw std::invalid_argument("assemble_cholesky: expected 6 raw values per joint-frame");
    CovarianceFactors f(frames, joints);
    for (std::size_t t = 0; t < frames; ++t)
        for (std::size_t j = 0; j < joints; ++j) {
            const double* r = raw.data() + (t * joints + j) * 6;
            f.at(t, j, 0, 0) = std::max(std::exp(r[0]), 1e-6);
            f.at(t, j, 1, 1) = std::max(std::exp(r[1]), 1e-6);
            f.at(t, j, 2, 2) = std::max(std::exp(r[2]), 1e-6);
            f.at(t, j, 1, 0) = r[3];
            f.at(t, j, 2, 0) = r[4];
            f.at(t, j, 2, 1) = r[5];
        }
    return f;
}

namespace lossgraph {

namespace {

void require_same_shape(const Value& a, const Value& b, const char* what) {
    if (a.val().shape() != b.val().shape())
        throw std::invalid_argument(std::string(what) + ": shape mismatch " +
                                    a.val().shape_str() + " vs " + b.val().shape_str());
}

Value time_diff(const Value& x) {
    const std::size_t t = x.val().shape()[1];
    if (t < 2) throw std::invalid_argument("temporal loss: sequence too short");
    return ad::sub(ad::slice(x, 1, 1, t - 1), ad::slice(x, 1, 0, t - 1));
}

}  // namespace

Value loss_position(const Value& pred, const Value& gt) {
    require_same_shape(pred, gt, "loss_position");
    Value d = pred - gt;
    return ad::mean_all(d * d);
}

Value loss_bone(const Value& pred_lengths, const Value& canonical) {
    if (pred_lengths.val().shape().back() != canonical.val().size())
        throw std::invalid_argument("loss_bone: canonical length count mismatch");
    Value d = ad::sub(pred_lengths, canonical);
    return ad::mean_all(d * d);
}

Value loss_velocity(const Value& pred, const Value& gt) {
    require_same_shape(pred, gt, "loss_velocity");
    return ad::mean_all(ad::abs_(time_diff(pred) - time_diff(gt)));
}

Value loss_acceleration(const Value& pred, const Value& gt) {
    require_same_shape(pred, gt, "loss_acceleration");
    if (pred.val().shape()[1] < 3)
        throw std::invalid_argument("loss_acceleration: needs T >= 3");
    return ad::mean_all(ad::abs_(time_diff(time_diff(pred)) - time_diff(time_diff(gt))));
}

Value loss_nll(const Value& pred, const Value& gt, const Value& diag, const Value& lower) {
    require_same_shape(pred, gt, "loss_nll");
    const std::size_t last = pred.val().rank() - 1;
    Value e = gt - pred;
    Value e1 = ad::slice(e, last, 0, 1), e2 = ad::slice(e, last, 1, 1),
          e3 = ad::slice(e, last, 2, 1);
    Value d1 = ad::slice(diag, last, 0, 1), d2 = ad::slice(diag, last, 1, 1),
          d3 = ad::slice(diag, last, 2, 1);
    Value l21 = ad::slice(lower, last, 0, 1), l31 = ad::slice(lower, last, 1, 1),
          l32 = ad::slice(lower, last, 2, 1);
    // exact triangular solve y = L^-1 e
    Value y1 = e1 / d1;
    Value y2 = (e2 - l21 * y1) / d2;
    Value y3 = (e3 - l31 * y1 - l32 * y2) / d3;
    Value mahal = y1 * y1 + y2 * y2 + y3 * y3;
    Value logdet = ad::log_(d1) + ad::log_(d2) + ad::log_(d3);
    const double c = 1.5 * std::log(2.0 * std::numbers::pi);
    return ad::mean_all(ad::add_const(ad::scale(mahal, 0.5) + logdet, c));
}

Value loss_total(int stage, const StageComponents& c, const LossWeights& w) {
    if (stage == 1) return c.pos;
    Value total = ad::scale(c.pos, w.w_pos) + ad::scale(c.bone, w.w_bone) +
                  ad::scale(c.vel, w.w_vel) + ad::scale(c.accel, w.w_accel);
    if (stage == 2) return total;
    if (stage == 3) {
        if (!c.nll.has_value())
            throw std::invalid_argument("loss_total: stage 3 requires covariance factors");
        return total + ad::scale(*c.nll, w.lambda_nll);
    }
    throw std::invalid_argument("loss_total: stage must be 1, 2 or 3");
}

}  // namespace lossgraph

namespace {

ad::Value seq_const(const PoseSequence& s) {
    return ad::Value::constant(
        ad::Tensor({1, s.frames, s.joints, 3}, s.positions));
}

}  // namespace

double loss_position(const PoseSequence& pred, const PoseSequence& gt) {
    return lossgraph::loss_position(seq_const(pred), seq_const(gt)).val().item();
}

double loss_bone(const PoseSequence& pred, const SkeletonDefinition& skeleton) {
    std::vector<double> lengths;
    lengths.reserve(pred.frames * pred.joints);
    for (std::size_t t = 0; t < pred.frames; ++t) {
        auto l = extract_bone_lengths(pred, t, skeleton);
        lengths.insert(lengths.end(), l.begin(), l.end());
    }
    ad::Value pl = ad::Value::constant(ad::Tensor({1, pred.frames, pred.joints}, lengths));
    ad::Value canon = ad::Value::constant(
        ad::Tensor({pred.joints}, skeleton.canonical_lengths()));
    return lossgraph::loss_bone(pl, canon).val().item();
}

double loss_velocity(const PoseSequence& pred, const PoseSequence& gt) {
    return lossgraph::loss_velocity(seq_const(pred), seq_const(gt)).val().item();
}

double loss_acceleration(const PoseSequence& pred, const PoseSequence& gt) {
    return lossgraph::loss_acceleration(seq_const(pred), seq_const(gt)).val().item();
}

double loss_nll(const PoseSequence& pred, const PoseSequence& gt, const CovarianceFactors& f) {
    if (f.frames != pred.frames || f.joints != pred.joints)
        throw std::invalid_argument("loss_nll: factor shape mismatch");
    std::vector<double> diag, lower;
    diag.reserve(f.frames * f.joints * 3);
    lower.reserve(f.frames * f.joints * 3);
    for (std::size_t t = 0; t < f.frames; ++t)
        for (std::size_t j = 0; j < f.joints; ++j) {
            for (std::size_t k = 0; k < 3; ++k) {
                const double d = f.at(t, j, k, k);
                if (d <= 0) throw std::invalid_argument("loss_nll: non-positive diagonal");
                diag.push_back(d);
            }
            lower.push_back(f.at(t, j, 1, 0));
            lower.push_back(f.at(t, j, 2, 0));
            lower.push_back(f.at(t, j, 2, 1));
        }
    ad::Value dv = ad::Value::constant(ad::Tensor({1, f.frames, f.joints, 3}, diag));
    ad::Value lv = ad::Value::constant(ad::Tensor({1, f.frames, f.joints, 3}, lower));
    return lossgraph::loss_nll(seq_const(pred), seq_const(gt), dv, lv).val().item();
}

double loss_total(int stage, double pos, double bone, double vel, double accel, double nll,
                  const LossWeights& w) {
    if (stage == 1) return pos;
    const double total = w.w_pos * pos + w.w_bone * bone + w.w_vel * vel + w.w_accel * accel;
    if (stage == 2) return total;
    if (stage == 3) return total + w.lambda_nll * nll;
    throw std::invalid_argument("loss_total: stage must be 1, 2 or 3");
}

}  // namespace esfp
