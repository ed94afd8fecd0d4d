#include "sandbox3d/text_coords.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sandbox3d {

namespace {

double round2(double v) {
    return std::round(v * 100.0) / 100.0 + 0.0;  // + 0.0 turns -0 into 0
}

nlohmann::ordered_json vec_json(const Vec3& v) { return {round2(v.x()), round2(v.y()), round2(v.z())}; }

Vec3 vec_from(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != 3) throw std::invalid_argument("expected a 3-element array");
    return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

}  // namespace

double yaw_about_up(const Vec3& axis, const Vec3& up_cam) {
    const Vec3 up = up_cam.normalized();
    Vec3 e1 = Vec3::UnitX() - up.x() * up;
    if (e1.norm() < 1e-9) e1 = Vec3::UnitZ() - up.z() * up;
    e1.normalize();
    const Vec3 e3 = up.cross(e1);
    double yaw = rad_to_deg(std::atan2(axis.dot(e3), axis.dot(e1)));
    while (yaw > 90.0) yaw -= 180.0;
    while (yaw <= -90.0) yaw += 180.0;
    return yaw;
}

std::vector<TextBox> to_text_boxes(const SandboxScene& scene) {
    const Mat3 rt = scene.origin_pose.rotation.transpose();
    const Vec3 up_cam = rt * scene.up_axis;
    std::vector<TextBox> out;
    for (const auto& b : scene.boxes) {
        TextBox t;
        t.label = b.label;
        t.instance_id = b.instance_id;
        t.center = scene.origin_pose.to_camera(b.center);
        t.size = 2.0 * b.half_extents;
        t.yaw_deg = yaw_about_up(rt * b.axes.col(0), up_cam);
        out.push_back(std::move(t));
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const TextBox& a, const TextBox& b) { return a.instance_id < b.instance_id; });
    return out;
}

std::string serialize_text_coords(const SandboxScene& scene) {
    nlohmann::ordered_json j;
    j["frame"] = "origin_camera";
    j["units"] = "m";
    j["axes"] = {{"x", "right"}, {"y", "down"}, {"z", "forward"}};
    j["yaw"] = "degrees of the first box axis about the up axis, 0 along +x, positive toward +z";
    j["boxes"] = nlohmann::ordered_json::array();
    for (const auto& t : to_text_boxes(scene)) {
        nlohmann::ordered_json b;
        b["label"] = t.label;
        b["instance_id"] = t.instance_id;
        b["center"] = vec_json(t.center);
        b["size"] = vec_json(t.size);
        b["yaw_deg"] = std::round(t.yaw_deg * 10.0) / 10.0 + 0.0;
        j["boxes"].push_back(std::move(b));
    }
    return j.dump();
}

std::vector<TextBox> parse_text_coords(std::string_view text) {
    try {
        const auto j = nlohmann::json::parse(text);
        if (j.value("frame", std::string()) != "origin_camera")
            throw std::invalid_argument("coordinates are not in the origin-camera frame");
        std::vector<TextBox> out;
        for (const auto& b : j.at("boxes")) {
            TextBox t;
            t.label = b.at("label").get<std::string>();
            t.instance_id = b.at("instance_id").get<int>();
            t.center = vec_from(b.at("center"));
            t.size = vec_from(b.at("size"));
            t.yaw_deg = b.at("yaw_deg").get<double>();
            out.push_back(std::move(t));
        }
        return out;
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("malformed coordinate text: ") + e.what());
    }
}

}  // namespace sandbox3d
