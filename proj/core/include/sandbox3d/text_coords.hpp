#pragma once

// Box coordinates as a compact JSON text prompt.

#include "sandbox3d/geometry.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace sandbox3d {

// One box as it appears in the text: origin-camera frame, rounded to 2 decimals.
struct TextBox {
    std::string label;
    int instance_id = 0;
    Vec3 center = Vec3::Zero();
    Vec3 size = Vec3::Zero();  // 2 * half extents, box-axis order
    double yaw_deg = 0.0;      // first axis about the up axis, in (-90, 90]
};

// Yaw of `axis` about `up`, both in the origin-camera frame; 0 along camera
// x, positive toward camera z. Folded into (-90, 90].
double yaw_about_up(const Vec3& axis, const Vec3& up_cam);

std::vector<TextBox> to_text_boxes(const SandboxScene& scene);

// Deterministic JSON: header fields, then boxes sorted by instance id.
std::string serialize_text_coords(const SandboxScene& scene);

// Throws std::invalid_argument on malformed text.
std::vector<TextBox> parse_text_coords(std::string_view text);

}  // namespace sandbox3d
