#include "esfp/pipeline.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

namespace esfp {

void WeakPerspectiveCamera::validate() const {
    if (!(s > 0)) throw std::invalid_argument("camera: scale must be > 0");
    Eigen::Matrix3d m;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) m(r, c) = k[r][c];
    if (std::fabs(m.determinant()) < 1e-12)
        throw std::invalid_argument("camera: singular intrinsics");
}

std::vector<Vec3> unproject_weak_perspective(const std::vector<Vec3>& joints,
                                             const WeakPerspectiveCamera& cam) {
    cam.validate();
    Eigen::Matrix3d m;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) m(r, c) = cam.k[r][c];
    const Eigen::Matrix3d kinv = m.inverse();
    std::vector<Vec3> out(joints.size());
    for (std::size_t j = 0; j < joints.size(); ++j) {
        const Eigen::Vector3d img(joints[j][0] + cam.tx, joints[j][1] + cam.ty, 1.0);
        const Eigen::Vector3d lifted = kinv * img;
        out[j] = {lifted.x() / cam.s, lifted.y() / cam.s, joints[j][2] / cam.s};
    }
    return out;
}

StreamingSmoother::StreamingSmoother(const HpstmModel& model, std::size_t stride,
                                     bool use_covariance)
    : model_(&model),
      stride_(stride),
      use_covariance_(use_covariance),
      window_(model.config().window),
      joints_(model.config().joints) {
    if (stride_ == 0 || stride_ > window_)
        throw std::invalid_argument("StreamingSmoother: stride must be in [1, W]");
}

void StreamingSmoother::run_window(std::size_t start) {
    PoseSequence win(window_, joints_);
    // buffer_ holds frames [count_ - buffer_.size(), count_); the requested
    // window always ends at the newest frame
    const std::size_t buf_base = count_ - buffer_.size();
    for (std::size_t t = 0; t < window_; ++t) {
        const auto& frame = buffer_[start + t - buf_base];
        for (std::size_t j = 0; j < joints_; ++j) win.set_joint(t, j, frame[j]);
    }
    SmoothedWindow sw = model_->smooth_window(win);
    if (!use_covariance_) sw.cov.reset();

    while (accum_.size() + next_emit_ < start + window_) {
        Accum a;
        a.rel_sum.assign(joints_, Vec3{0, 0, 0});
        a.rel_wsum.assign(joints_, 0.0);
        accum_.push_back(std::move(a));
    }
    const std::size_t root = model_->skeleton().root();
    for (std::size_t t = 0; t < window_; ++t) {
        // the flush window may reach back over frames already emitted
        if (start + t < next_emit_) continue;
        Accum& a = accum_[start + t - next_emit_];
        const Vec3 r = sw.positions.joint(t, root);
        const double w_root =
            sw.cov ? 1.0 / (sw.cov->trace_sigma(t, root) + 1e-9) : 1.0;
        a.root_sum = a.root_sum + w_root * r;
        a.root_wsum += w_root;
        a.root_weights.push_back(w_root);
        for (std::size_t j = 0; j < joints_; ++j) {
            const double w = sw.cov ? 1.0 / (sw.cov->trace_sigma(t, j) + 1e-9) : 1.0;
            a.rel_sum[j] = a.rel_sum[j] + w * (sw.positions.joint(t, j) - r);
            a.rel_wsum[j] += w;
        }
        a.contributors++;
    }
    last_window_start_ = start;
    any_window_ = true;
}

FusedFrame StreamingSmoother::finalize(std::size_t index) {
    const Accum& a = accum_.front();
    if (a.contributors == 0)
        throw std::logic_error("StreamingSmoother: frame finalized without coverage");
    FusedFrame f;
    f.index = index;
    f.contributors = a.contributors;
    const Vec3 root = (1.0 / a.root_wsum) * a.root_sum;
    f.positions.resize(joints_);
    for (std::size_t j = 0; j < joints_; ++j)
        f.positions[j] = root + (1.0 / a.rel_wsum[j]) * a.rel_sum[j];
    // normalized fusion weights of every contributor must sum to 1
    f.weight_checksum = 0;
    for (double w : a.root_weights) f.weight_checksum += w / a.root_wsum;
    return f;
}

std::vector<FusedFrame> StreamingSmoother::drain(std::size_t upto_exclusive,
                                                 std::size_t emit_input) {
    std::vector<FusedFrame> out;
    while (next_emit_ < upto_exclusive && !accum_.empty()) {
        out.push_back(finalize(next_emit_));
        max_latency_ = std::max(max_latency_, emit_input - next_emit_);
        accum_.pop_front();
        ++next_emit_;
    }
    return out;
}

std::vector<FusedFrame> StreamingSmoother::push(const std::vector<Vec3>& frame) {
    if (frame.size() != joints_)
        throw std::invalid_argument("StreamingSmoother: frame joint count mismatch");
    buffer_.push_back(frame);
    if (buffer_.size() > window_) buffer_.pop_front();
    const std::size_t n = count_;
    ++count_;
    if (n + 1 >= window_ && (n - (window_ - 1)) % stride_ == 0) run_window(n - (window_ - 1));
    if (n + 1 >= window_) return drain(n + 2 - window_, n);
    return {};
}

std::vector<FusedFrame> StreamingSmoother::flush() {
    if (count_ < window_)
        throw std::runtime_error("StreamingSmoother: fewer frames than one window");
    const std::size_t final_start = count_ - window_;
    if (!any_window_ || last_window_start_ < final_start) run_window(final_start);
    return drain(count_, count_ - 1);
}

PoseSequence run_offline(const PoseSequence& seq, const HpstmModel& model, std::size_t stride,
                         bool use_covariance) {
    if (seq.frames < model.config().window)
        throw std::invalid_argument("run_offline: sequence shorter than window");
    StreamingSmoother sm(model, stride, use_covariance);
    PoseSequence out(seq.frames, seq.joints);
    auto take = [&](const std::vector<FusedFrame>& frames) {
        for (const auto& f : frames)
            for (std::size_t j = 0; j < seq.joints; ++j) out.set_joint(f.index, j, f.positions[j]);
    };
    std::vector<Vec3> frame(seq.joints);
    for (std::size_t t = 0; t < seq.frames; ++t) {
        for (std::size_t j = 0; j < seq.joints; ++j) frame[j] = seq.joint(t, j);
        take(sm.push(frame));
    }
    take(sm.flush());
    return out;
}

}  // namespace esfp
