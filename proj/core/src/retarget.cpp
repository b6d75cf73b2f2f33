#include "esfp/retarget.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include <json.hpp>

namespace esfp {

namespace {

Vec3 apply_rotation(const std::array<std::array<double, 3>, 3>& r, const Vec3& v) {
    return {r[0][0] * v[0] + r[0][1] * v[1] + r[0][2] * v[2],
            r[1][0] * v[0] + r[1][1] * v[1] + r[1][2] * v[2],
            r[2][0] * v[0] + r[2][1] * v[1] + r[2][2] * v[2]};
}

}  // namespace

void RetargetConfig::validate() const {
    if (target_reach_mm <= 0) throw std::invalid_argument("retarget: target_reach_mm <= 0");
    if (tau_min_m <= 0) throw std::invalid_argument("retarget: tau_min_m <= 0");
    for (const auto& axis : clip_box_mm)
        if (!(axis[0] < axis[1])) throw std::invalid_argument("retarget: clip box min >= max");
    if (command_rate_hz <= 0 || input_rate_hz <= 0)
        throw std::invalid_argument("retarget: rates must be > 0");
    // orthonormality of the frame change
    for (int i = 0; i < 3; ++i)
        for (int k = 0; k < 3; ++k) {
            double d = 0;
            for (int j = 0; j < 3; ++j) d += rotation_map[i][j] * rotation_map[k][j];
            if (std::fabs(d - (i == k ? 1.0 : 0.0)) > 1e-9)
                throw std::invalid_argument("retarget: rotation_map not orthonormal");
        }
}

RetargetConfig RetargetConfig::from_json_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("retarget: cannot read " + path);
    nlohmann::json j = nlohmann::json::parse(is);
    RetargetConfig c;
    if (j.contains("rotation_map")) {
        for (int r = 0; r < 3; ++r)
            for (int k = 0; k < 3; ++k) c.rotation_map[r][k] = j["rotation_map"][r][k];
    }
    c.target_reach_mm = j.value("target_reach_mm", c.target_reach_mm);
    if (j.contains("shoulder_offset_mm"))
        for (int k = 0; k < 3; ++k) c.shoulder_offset_mm[k] = j["shoulder_offset_mm"][k];
    if (j.contains("clip_box_mm"))
        for (int a = 0; a < 3; ++a)
            for (int k = 0; k < 2; ++k) c.clip_box_mm[a][k] = j["clip_box_mm"][a][k];
    c.tau_min_m = j.value("tau_min_m", c.tau_min_m);
    c.lambda_0 = j.value("lambda_0", c.lambda_0);
    c.command_rate_hz = j.value("command_rate_hz", c.command_rate_hz);
    c.input_rate_hz = j.value("input_rate_hz", c.input_rate_hz);
    c.speed = j.value("speed", c.speed);
    c.validate();
    return c;
}

std::string RetargetConfig::to_json() const {
    nlohmann::json j;
    j["rotation_map"] = rotation_map;
    j["target_reach_mm"] = target_reach_mm;
    j["shoulder_offset_mm"] = shoulder_offset_mm;
    j["clip_box_mm"] = clip_box_mm;
    j["tau_min_m"] = tau_min_m;
    j["lambda_0"] = lambda_0;
    j["command_rate_hz"] = command_rate_hz;
    j["input_rate_hz"] = input_rate_hz;
    j["speed"] = speed;
    return j.dump(2);
}

Vec3 relative_wrist_vector(const ArmTriple& triple) { return triple.wrist - triple.shoulder; }

double compute_scale(const ArmTriple& triple, const RetargetConfig& config) {
    const double arm_m =
        norm(triple.elbow - triple.shoulder) + norm(triple.wrist - triple.elbow);
    if (arm_m < config.tau_min_m) return config.lambda_0;
    return config.target_reach_mm / (arm_m * 1000.0);
}

RobotCommand map_command(const ArmTriple& triple, const RetargetConfig& config) {
    const double lambda = compute_scale(triple, config);
    const Vec3 v = apply_rotation(config.rotation_map, relative_wrist_vector(triple));
    RobotCommand cmd;
    Vec3 p = config.shoulder_offset_mm + (lambda * 1000.0) * v;
    for (int a = 0; a < 3; ++a)
        p[a] = std::clamp(p[a], config.clip_box_mm[a][0], config.clip_box_mm[a][1]);
    cmd.x_mm = p[0];
    cmd.y_mm = p[1];
    cmd.z_mm = p[2];
    cmd.speed = config.speed;
    return cmd;
}

double wrist_angle(const ArmTriple& triple, const RetargetConfig& config, double previous_deg) {
    const Vec3 forearm = triple.wrist - triple.elbow;
    if (norm(forearm) <= 1e-6) return previous_deg;
    const Vec3 r = apply_rotation(config.rotation_map, forearm);
    // heading in the robot horizontal (x, z) plane, 90 = straight ahead (+X)
    const double deg =
        90.0 - std::atan2(r[2], r[0]) * 180.0 / std::numbers::pi;
    return std::clamp(deg, 0.0, 180.0);
}

Retargeter::Retargeter(RetargetConfig config) : config_(std::move(config)) {
    config_.validate();
}

std::vector<RobotCommand> Retargeter::push(const ArmTriple& triple) {
    const double t = static_cast<double>(frame_) / config_.input_rate_hz;
    ++frame_;
    // smooth the wrist vector before mapping; shoulder/elbow pass through
    const Vec3 filtered_wrist =
        one_euro_step(filter_, relative_wrist_vector(triple), t) + triple.shoulder;
    latest_ = triple;
    latest_.wrist = filtered_wrist;
    have_latest_ = true;

    std::vector<RobotCommand> due;
    // emit while the command clock lags the input clock
    while ((emitted_ + 1.0) / config_.command_rate_hz <=
           static_cast<double>(frame_) / config_.input_rate_hz + 1e-12) {
        RobotCommand cmd = map_command(latest_, config_);
        cmd.wrist_deg = wrist_angle(latest_, config_, last_wrist_deg_);
        last_wrist_deg_ = cmd.wrist_deg;
        cmd.t_ms = (emitted_ + 1.0) / config_.command_rate_hz * 1000.0;
        emitted_ += 1.0;
        log_.push_back(cmd);
        due.push_back(cmd);
    }
    return due;
}

void Retargeter::write_log_jsonl(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("retarget: cannot write " + path);
    for (const auto& c : log_) {
        nlohmann::json j = {{"t_ms", c.t_ms},         {"x_mm", c.x_mm},   {"y_mm", c.y_mm},
                            {"z_mm", c.z_mm},         {"wrist_deg", c.wrist_deg},
                            {"speed", c.speed}};
        os << j.dump() << '\n';
    }
}

}  // namespace esfp
