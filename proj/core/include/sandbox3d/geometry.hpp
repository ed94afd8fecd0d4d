#pragma once

// Core value types and pinhole camera math.
//
// Camera convention: x right, y down, z forward. Poses are camera-to-world,
// p_world = R * p_cam + t. Depth is the camera-frame Z of a point, not the
// length of the viewing ray. Invalid depth samples are non-finite.

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace sandbox3d {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

struct CameraIntrinsics {
    double fx = 1.0;
    double fy = 1.0;
    double cx = 0.0;
    double cy = 0.0;
    int width = 1;
    int height = 1;

    bool is_valid() const;
    // Throws std::invalid_argument naming the violated invariant.
    void validate() const;

    // Square pixels, principal point at the image center.
    static CameraIntrinsics from_horizontal_fov(int width, int height, double hfov_deg);
    // Same field of view, different raster size.
    CameraIntrinsics rescaled(int new_width, int new_height) const;

    bool operator==(const CameraIntrinsics&) const = default;
};

struct CameraPose {
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();

    static CameraPose identity() { return {}; }

    Vec3 to_world(const Vec3& p_cam) const { return rotation * p_cam + translation; }
    Vec3 to_camera(const Vec3& p_world) const { return rotation.transpose() * (p_world - translation); }

    Vec3 right() const { return rotation.col(0); }
    Vec3 down() const { return rotation.col(1); }
    Vec3 forward() const { return rotation.col(2); }

    // this ∘ local: `local` is expressed in this camera's frame.
    CameraPose compose(const CameraPose& local) const;
    CameraPose inverse() const;

    // Orthonormal with det +1 within `tol`.
    bool is_valid(double tol = 1e-6) const;

    bool operator==(const CameraPose& o) const {
        return rotation == o.rotation && translation == o.translation;
    }
};

struct Pixel {
    double x = 0.0;
    double y = 0.0;
};

struct Projection {
    Pixel pixel;
    double depth = 0.0;  // camera-frame z
};

struct DepthGrid {
    int width = 0;
    int height = 0;
    std::vector<float> values;  // row-major, metres

    DepthGrid() = default;
    DepthGrid(int w, int h);

    float at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
    float& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
    bool valid_at(int x, int y) const;
};

struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;  // row-major RGB triplets

    RgbImage() = default;
    RgbImage(int w, int h, std::array<std::uint8_t, 3> fill = {0, 0, 0});

    std::uint8_t* px(int x, int y) { return data.data() + 3 * (static_cast<std::size_t>(y) * width + x); }
    const std::uint8_t* px(int x, int y) const {
        return data.data() + 3 * (static_cast<std::size_t>(y) * width + x);
    }
    void set(int x, int y, std::array<std::uint8_t, 3> c);

    bool operator==(const RgbImage&) const = default;
};

// trajectory == kInputTrajectory marks the original input view.
struct ViewId {
    static constexpr int kInputTrajectory = -1;

    int trajectory = kInputTrajectory;
    int timestep = 0;

    static ViewId input() { return {}; }
    bool is_input() const { return trajectory == kInputTrajectory; }
    std::string to_string() const;

    auto operator<=>(const ViewId&) const = default;
};

struct ViewFrame {
    RgbImage image;
    DepthGrid depth;
    CameraIntrinsics intrinsics;
    CameraPose pose;
    ViewId view_id;

    // Throws std::invalid_argument if image/depth/intrinsics disagree on size.
    void validate() const;
};

struct InstanceMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> bits;  // 0 or 1, row-major
    int object_id = -1;
    std::string label;

    InstanceMask() = default;
    InstanceMask(int w, int h, int id = -1, std::string lbl = {});

    bool test(int x, int y) const { return bits[static_cast<std::size_t>(y) * width + x] != 0; }
    void set(int x, int y, bool on = true) { bits[static_cast<std::size_t>(y) * width + x] = on ? 1 : 0; }
    std::size_t count() const;
    bool empty() const { return count() == 0; }
};

struct ProxyPoint {
    Vec3 xyz = Vec3::Zero();
    int object_id = -1;
    std::string label;  // object category
    ViewId view_id;
};

struct ProxyCloud {
    std::vector<ProxyPoint> points;

    bool empty() const { return points.empty(); }
    std::size_t size() const { return points.size(); }
    void append(const ProxyCloud& other);
};

struct OrientedBox3 {
    Vec3 center = Vec3::Zero();
    Mat3 axes = Mat3::Identity();  // columns are the box axes
    Vec3 half_extents = Vec3::Constant(0.5);
    std::string label;
    int instance_id = 0;

    // Local box coordinates of a world point.
    Vec3 to_local(const Vec3& p) const { return axes.transpose() * (p - center); }
    bool contains(const Vec3& p, double inflate = 0.0) const;
};

struct SandboxScene {
    std::vector<OrientedBox3> boxes;
    CameraPose origin_pose;
    CameraIntrinsics origin_intrinsics;
    Vec3 up_axis = Vec3(0.0, -1.0, 0.0);

    const OrientedBox3* find(int instance_id) const;
};

// Returns nullopt for non-finite or non-positive depth.
std::optional<Vec3> backproject(const Pixel& u, double depth, const CameraIntrinsics& intr,
                                const CameraPose& pose);

// Returns nullopt when the point is at or behind the camera plane (z <= 0).
std::optional<Projection> project(const Vec3& p_world, const CameraIntrinsics& intr,
                                  const CameraPose& pose);

// Corners are center + sum_i s_i * h_i * axis_i with s_i = -1 when bit i of the
// corner index is clear and +1 when it is set (axis 0 is the least significant bit).
std::array<Vec3, 8> box_corners(const OrientedBox3& box);

// The 12 edges of a box as index pairs into box_corners().
const std::array<std::array<int, 2>, 12>& box_edges();

// Rotation about the camera y axis; positive angles turn the forward axis toward +x.
Mat3 yaw_rotation(double degrees);

double deg_to_rad(double deg);
double rad_to_deg(double rad);

}  // namespace sandbox3d
