#pragma once

#include <array>
#include <deque>
#include <optional>
#include <vector>

#include "esfp/model.hpp"
#include "esfp/pose.hpp"

namespace esfp {

// Scaled-orthographic camera used to lift canonical joint predictions into
// the camera frame.
struct WeakPerspectiveCamera {
    double s = 1.0;
    double tx = 0.0;
    double ty = 0.0;
    std::array<std::array<double, 3>, 3> k{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};  // intrinsics

    void validate() const;  // s > 0, K invertible
};

// x,y pass through K^{-1} after adding the image-plane translation, then all
// three coordinates divide by s (1/s supplies the approximate depth scale).
std::vector<Vec3> unproject_weak_perspective(const std::vector<Vec3>& joints,
                                             const WeakPerspectiveCamera& cam);

// One finalized output frame of the streaming smoother.
struct FusedFrame {
    std::size_t index = 0;
    std::vector<Vec3> positions;
    std::size_t contributors = 0;    // windows merged into this frame
    double weight_checksum = 0;      // normalized fusion weights, should be 1
};

// Sliding-window smoother: buffers the W most recent frames, runs the model
// every `stride` inputs once the buffer is full, and merges overlapping
// window outputs by inverse-covariance-trace weighting (unit weights when the
// covariance head is off). Root-relative coordinates and the root translation
// are fused separately. Frame f is finalized once input f + W - 1 has been
// consumed; flush() runs one last window ending at the final frame and emits
// the tail.
class StreamingSmoother {
public:
    // use_covariance=false forces unit fusion weights even when the model
    // emits covariance factors.
    StreamingSmoother(const HpstmModel& model, std::size_t stride = 5,
                      bool use_covariance = true);

    std::vector<FusedFrame> push(const std::vector<Vec3>& frame);
    std::vector<FusedFrame> flush();

    std::size_t window() const { return window_; }
    std::size_t stride() const { return stride_; }
    // max over emitted frames of (input index at emission - frame index)
    std::size_t max_latency() const { return max_latency_; }

private:
    struct Accum {
        std::vector<Vec3> rel_sum;
        std::vector<double> rel_wsum;
        Vec3 root_sum{0, 0, 0};
        double root_wsum = 0;
        std::vector<double> root_weights;  // per contributor, for the checksum
        std::size_t contributors = 0;
    };

    void run_window(std::size_t start);
    std::vector<FusedFrame> drain(std::size_t upto_exclusive, std::size_t emit_input);
    FusedFrame finalize(std::size_t index);

    const HpstmModel* model_;
    std::size_t stride_;
    bool use_covariance_;
    std::size_t window_;
    std::size_t joints_;
    std::deque<std::vector<Vec3>> buffer_;   // last W raw frames
    std::deque<Accum> accum_;                // frames next_emit_, next_emit_+1, ...
    std::size_t count_ = 0;                  // frames consumed
    std::size_t next_emit_ = 0;
    std::size_t last_window_start_ = 0;
    bool any_window_ = false;
    std::size_t max_latency_ = 0;
};

// Batch equivalent of push-all + flush; byte-identical to streaming.
PoseSequence run_offline(const PoseSequence& seq, const HpstmModel& model, std::size_t stride,
                         bool use_covariance = true);

}  // namespace esfp
