#pragma once

#include "sandbox3d/geometry.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace sandbox3d {

enum class AbstractMotion { left, fwd_left, forward, fwd_right, right };

std::string_view to_string(AbstractMotion motion);

struct MotionChoice {
    AbstractMotion motion = AbstractMotion::forward;
    bool defaulted = false;  // no motion token found in the reply
};

// Case-insensitive; '-', '_' and ' ' are interchangeable. The earliest match in
// the text wins, longer tokens winning at equal positions ("fwd-left" over "left").
MotionChoice parse_motion(std::string_view vlm_text);

struct TrajectoryParams {
    int count = 3;          // M
    int length = 4;         // T
    double step_m = 0.25;
    double sweep_deg = 60.0;
};

struct TrajectorySpec {
    AbstractMotion motion = AbstractMotion::forward;
    int index = 0;
    double heading_deg = 0.0;
    std::vector<CameraPose> poses;  // relative to the input camera
};

struct HeadingRange {
    double first_deg;
    double last_deg;
};

// Heading range swept by the M candidate trajectories of a motion. Negative
// headings turn left. `sweep_deg` sets the width of the diagonal motions.
HeadingRange heading_range(AbstractMotion motion, double sweep_deg);

// Trajectory m has heading h_m; its pose t (1-based offset) is yawed by h_m and
// translated t * step_m along the yawed forward axis.
std::vector<TrajectorySpec> instantiate_trajectories(AbstractMotion motion, const TrajectoryParams& params);

}  // namespace sandbox3d
