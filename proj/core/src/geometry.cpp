#include "sandbox3d/geometry.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace sandbox3d {

bool CameraIntrinsics::is_valid() const {
    return std::isfinite(fx) && std::isfinite(fy) && fx > 0.0 && fy > 0.0 && width > 0 && height > 0 &&
           cx >= 0.0 && cx < width && cy >= 0.0 && cy < height;
}

void CameraIntrinsics::validate() const {
    if (!(fx > 0.0) || !(fy > 0.0)) throw std::invalid_argument("intrinsics: focal lengths must be positive");
    if (width <= 0 || height <= 0) throw std::invalid_argument("intrinsics: image size must be positive");
    if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height))
        throw std::invalid_argument("intrinsics: principal point outside the image");
}

CameraIntrinsics CameraIntrinsics::from_horizontal_fov(int width, int height, double hfov_deg) {
    CameraIntrinsics k;
    k.width = width;
    k.height = height;
    k.fx = (width / 2.0) / std::tan(deg_to_rad(hfov_deg) / 2.0);
    k.fy = k.fx;
    k.cx = width / 2.0;
    k.cy = height / 2.0;
    return k;
}

CameraIntrinsics CameraIntrinsics::rescaled(int new_width, int new_height) const {
    const double sx = static_cast<double>(new_width) / width;
    const double sy = static_cast<double>(new_height) / height;
    return {fx * sx, fy * sy, cx * sx, cy * sy, new_width, new_height};
}

CameraPose CameraPose::compose(const CameraPose& local) const {
    return {rotation * local.rotation, rotation * local.translation + translation};
}

CameraPose CameraPose::inverse() const {
    const Mat3 rt = rotation.transpose();
    return {rt, -(rt * translation)};
}

bool CameraPose::is_valid(double tol) const {
    if (!rotation.allFinite() || !translation.allFinite()) return false;
    const Mat3 gram = rotation.transpose() * rotation;
    if ((gram - Mat3::Identity()).cwiseAbs().maxCoeff() > tol) return false;
    return std::abs(rotation.determinant() - 1.0) <= tol;
}

DepthGrid::DepthGrid(int w, int h)
    : width(w), height(h),
      values(static_cast<std::size_t>(w) * h, std::numeric_limits<float>::quiet_NaN()) {}

bool DepthGrid::valid_at(int x, int y) const {
    const float d = at(x, y);
    return std::isfinite(d) && d > 0.0f;
}

RgbImage::RgbImage(int w, int h, std::array<std::uint8_t, 3> fill)
    : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3) {
    for (std::size_t i = 0; i < data.size(); i += 3) {
        data[i] = fill[0];
        data[i + 1] = fill[1];
        data[i + 2] = fill[2];
    }
}

void RgbImage::set(int x, int y, std::array<std::uint8_t, 3> c) {
    if (x < 0 || y < 0 || x >= width || y >= height) return;
    auto* p = px(x, y);
    p[0] = c[0];
    p[1] = c[1];
    p[2] = c[2];
}

std::string ViewId::to_string() const {
    if (is_input()) return "input";
    return std::to_string(trajectory) + "_" + std::to_string(timestep);
}

void ViewFrame::validate() const {
    intrinsics.validate();
    if (image.width != intrinsics.width || image.height != intrinsics.height)
        throw std::invalid_argument("view " + view_id.to_string() + ": image size differs from intrinsics");
    if (depth.width != intrinsics.width || depth.height != intrinsics.height)
        throw std::invalid_argument("view " + view_id.to_string() + ": depth size differs from intrinsics");
    if (depth.values.size() != static_cast<std::size_t>(depth.width) * depth.height)
        throw std::invalid_argument("view " + view_id.to_string() + ": depth length mismatch");
}

InstanceMask::InstanceMask(int w, int h, int id, std::string lbl)
    : width(w), height(h), bits(static_cast<std::size_t>(w) * h, 0), object_id(id), label(std::move(lbl)) {}

std::size_t InstanceMask::count() const {
    std::size_t n = 0;
    for (auto b : bits) n += b != 0;
    return n;
}

void ProxyCloud::append(const ProxyCloud& other) {
    points.insert(points.end(), other.points.begin(), other.points.end());
}

bool OrientedBox3::contains(const Vec3& p, double inflate) const {
    const Vec3 local = to_local(p);
    for (int i = 0; i < 3; ++i)
        if (std::abs(local[i]) > half_extents[i] + inflate) return false;
    return true;
}

const OrientedBox3* SandboxScene::find(int instance_id) const {
    for (const auto& b : boxes)
        if (b.instance_id == instance_id) return &b;
    return nullptr;
}

std::optional<Vec3> backproject(const Pixel& u, double depth, const CameraIntrinsics& intr,
                                const CameraPose& pose) {
    if (!std::isfinite(depth) || depth <= 0.0) return std::nullopt;
    const Vec3 p_cam((u.x - intr.cx) / intr.fx * depth, (u.y - intr.cy) / intr.fy * depth, depth);
    return pose.to_world(p_cam);
}

std::optional<Projection> project(const Vec3& p_world, const CameraIntrinsics& intr, const CameraPose& pose) {
    const Vec3 p = pose.to_camera(p_world);
    if (!(p.z() > 0.0)) return std::nullopt;
    return Projection{{intr.fx * p.x() / p.z() + intr.cx, intr.fy * p.y() / p.z() + intr.cy}, p.z()};
}

std::array<Vec3, 8> box_corners(const OrientedBox3& box) {
    std::array<Vec3, 8> out;
    for (int c = 0; c < 8; ++c) {
        Vec3 p = box.center;
        for (int i = 0; i < 3; ++i) {
            const double s = (c >> i) & 1 ? 1.0 : -1.0;
            p += s * box.half_extents[i] * box.axes.col(i);
        }
        out[c] = p;
    }
    return out;
}

const std::array<std::array<int, 2>, 12>& box_edges() {
    // Corner pairs that differ in exactly one bit.
    static const std::array<std::array<int, 2>, 12> edges = {{
        {0, 1}, {2, 3}, {4, 5}, {6, 7},  // axis 0
        {0, 2}, {1, 3}, {4, 6}, {5, 7},  // axis 1
        {0, 4}, {1, 5}, {2, 6}, {3, 7},  // axis 2
    }};
    return edges;
}

Mat3 yaw_rotation(double degrees) {
    const double r = deg_to_rad(degrees);
    const double c = std::cos(r);
    const double s = std::sin(r);
    Mat3 m;
    m << c, 0.0, s,
         0.0, 1.0, 0.0,
         -s, 0.0, c;
    return m;
}

double deg_to_rad(double deg) { return deg * (std::numbers::pi / 180.0); }
double rad_to_deg(double rad) { return rad * (180.0 / std::numbers::pi); }

}  // namespace sandbox3d
