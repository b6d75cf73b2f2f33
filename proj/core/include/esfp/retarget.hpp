#pragma once

#include <array>
#include <string>
#include <vector>

#include "esfp/baselines.hpp"
#include "esfp/pose.hpp"

namespace esfp {

// Mapping from smoothed human arm triples to clipped robot workspace
// commands. Human coordinates are meters; robot coordinates millimeters.
struct RetargetConfig {
    // Frame change human -> robot. The default maps human (+X fwd, +Y left,
    // +Z up) onto robot (+X reach, +Y up, +Z right): (x, y, z) -> (x, z, -y).
    std::array<std::array<double, 3>, 3> rotation_map{{{1, 0, 0}, {0, 0, 1}, {0, -1, 0}}};
    double target_reach_mm = 275.0;            // L_r
    Vec3 shoulder_offset_mm{0, 0, 0};          // o_R
    std::array<std::array<double, 2>, 3> clip_box_mm{
        {{100.0, 300.0}, {0.0, 250.0}, {-150.0, 150.0}}};
    double tau_min_m = 0.05;    // minimum usable human arm length
    double lambda_0 = 0.5;      // fallback scale when L_h < tau_min
    double command_rate_hz = 20.0;
    double input_rate_hz = 30.0;
    double speed = 100.0;

    void validate() const;

    static RetargetConfig from_json_file(const std::string& path);
    std::string to_json() const;
};

struct ArmTriple {
    Vec3 shoulder{0, 0, 0};
    Vec3 elbow{0, 0, 0};
    Vec3 wrist{0, 0, 0};
};

struct RobotCommand {
    double t_ms = 0;
    double x_mm = 0, y_mm = 0, z_mm = 0;
    double wrist_deg = 90.0;
    double speed = 0;
};

// v_h = p_w - p_s, meters in the human frame.
Vec3 relative_wrist_vector(const ArmTriple& triple);

// lambda = L_r / L_h with L_h = |elbow-shoulder| + |wrist-elbow| converted to
// mm; returns lambda_0 when L_h < tau_min.
double compute_scale(const ArmTriple& triple, const RetargetConfig& config);

// p_cmd = o_R + lambda * R * v_h (mm), clamped per axis to the clip box.
// Fills the position part of the command only.
RobotCommand map_command(const ArmTriple& triple, const RetargetConfig& config);

// Forearm heading in the robot horizontal plane, degrees in [0, 180] with
// 90 = straight ahead. Returns `previous_deg` when the forearm degenerates.
double wrist_angle(const ArmTriple& triple, const RetargetConfig& config,
                   double previous_deg = 90.0);

// Stateful mapper: one-euro filtering of the wrist vector at the input rate,
// command emission by sampling the newest filtered state at the command rate.
class Retargeter {
public:
    explicit Retargeter(RetargetConfig config);

    const RetargetConfig& config() const { return config_; }

    // Feed one input frame (called at input_rate_hz). Returns the commands
    // due since the previous call (0 or 1 at the default 30 -> 20 Hz ratio).
    std::vector<RobotCommand> push(const ArmTriple& triple);

    const std::vector<RobotCommand>& log() const { return log_; }
    void write_log_jsonl(const std::string& path) const;

private:
    RetargetConfig config_;
    OneEuroState filter_;
    std::size_t frame_ = 0;
    double last_wrist_deg_ = 90.0;
    double emitted_ = 0;  // commands emitted so far
    ArmTriple latest_;
    bool have_latest_ = false;
    std::vector<RobotCommand> log_;
};

}  // namespace esfp
