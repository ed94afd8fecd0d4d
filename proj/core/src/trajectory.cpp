#include "sandbox3d/trajectory.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <stdexcept>

namespace sandbox3d {

std::string_view to_string(AbstractMotion motion) {
    switch (motion) {
        case AbstractMotion::left: return "left";
        case AbstractMotion::fwd_left: return "fwd-left";
        case AbstractMotion::forward: return "forward";
        case AbstractMotion::fwd_right: return "fwd-right";
        case AbstractMotion::right: return "right";
    }
    return "forward";
}

MotionChoice parse_motion(std::string_view vlm_text) {
    std::string norm(vlm_text);
    for (auto& c : norm) {
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        if (c == '_' || c == ' ') c = '-';
    }
    // Longest first so that "fwd-left" shadows "left" at the same position.
    static constexpr std::array<std::pair<std::string_view, AbstractMotion>, 5> tokens = {{
        {"fwd-right", AbstractMotion::fwd_right},
        {"fwd-left", AbstractMotion::fwd_left},
        {"forward", AbstractMotion::forward},
        {"right", AbstractMotion::right},
        {"left", AbstractMotion::left},
    }};
    std::size_t best_pos = std::string::npos;
    AbstractMotion best = AbstractMotion::forward;
    for (const auto& [tok, motion] : tokens) {
        const auto pos = norm.find(tok);
        if (pos != std::string::npos && (best_pos == std::string::npos || pos < best_pos)) {
            best_pos = pos;
            best = motion;
        }
    }
    if (best_pos == std::string::npos) return {AbstractMotion::forward, true};
    return {best, false};
}

HeadingRange heading_range(AbstractMotion motion, double sweep_deg) {
    switch (motion) {
        case AbstractMotion::left: return {-90.0, -45.0};
        case AbstractMotion::fwd_left: return {-sweep_deg, 0.0};
        case AbstractMotion::forward: return {0.0, 0.0};
        case AbstractMotion::fwd_right: return {sweep_deg, 0.0};
        case AbstractMotion::right: return {90.0, 45.0};
    }
    return {0.0, 0.0};
}

std::vector<TrajectorySpec> instantiate_trajectories(AbstractMotion motion, const TrajectoryParams& params) {
    if (params.count < 1 || params.length < 1 || !(params.step_m > 0.0))
        throw std::invalid_argument("trajectory params: need M >= 1, T >= 1, step > 0");
    const auto range = heading_range(motion, params.sweep_deg);
    std::vector<TrajectorySpec> out;
    out.reserve(params.count);
    for (int m = 0; m < params.count; ++m) {
        double heading = 0.0;
        if (params.count == 1) {
            heading = 0.5 * (range.first_deg + range.last_deg);
        } else {
            const double a = static_cast<double>(m) / (params.count - 1);
            heading = range.first_deg + a * (range.last_deg - range.first_deg);
        }
        TrajectorySpec spec;
        spec.index = m;
        spec.motion = motion;
        spec.heading_deg = heading;
        const Mat3 rot = yaw_rotation(heading);
        const Vec3 dir = rot.col(2);
        for (int t = 1; t <= params.length; ++t)
            spec.poses.push_back({rot, (t * params.step_m) * dir});
        out.push_back(std::move(spec));
    }
    return out;
}

}  // namespace sandbox3d
