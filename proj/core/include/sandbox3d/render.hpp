#pragma once

// Deterministic wireframe / splat rendering of the sandbox.

#include "sandbox3d/geometry.hpp"

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sandbox3d {

using Rgb = std::array<std::uint8_t, 3>;

struct PaletteEntry {
    std::string_view name;
    Rgb color;
};

// 12 fixed colours; instance i uses entry i % 12.
std::span<const PaletteEntry> palette();
const PaletteEntry& palette_for(int index);

inline constexpr Rgb kMarkerColor = {0, 0, 0};
inline constexpr Rgb kGridColor = {200, 200, 200};

struct RenderStyle {
    int width = 512;
    int height = 512;
    Rgb background = {255, 255, 255};
    int line_width = 2;
    bool draw_axes = true;  // ground grid, 1 m spacing
    double grid_spacing_m = 1.0;
};

enum class ProjectionKind { perspective, orthographic };

// Orthographic cameras reuse the intrinsics: u = fx * x + cx, v = fy * y + cy,
// with fx = fy = pixels per metre.
struct RenderCamera {
    CameraPose pose;
    CameraIntrinsics intrinsics;
    ProjectionKind projection = ProjectionKind::perspective;
    CameraPose origin;          // input camera; anchors the ground grid and the marker
    bool show_marker = false;   // draw the input camera as a triangle on the ground
    Vec3 up_axis = Vec3(0.0, -1.0, 0.0);
    double ground_level = 0.0;  // up-coordinate of the ground plane

    double meters_per_pixel() const { return 1.0 / intrinsics.fx; }
};

struct LegendEntry {
    std::string color_name;
    std::string label;
    int instance_id = 0;
};

struct RenderedView {
    RgbImage image;
    RenderCamera camera;
    std::vector<LegendEntry> legend;
};

inline constexpr double kNearPlane = 0.05;

// Same rotation, moved `distance` metres back along the camera's own forward axis.
CameraPose stepback_camera(const CameraPose& origin, double distance);

struct TopDownView {
    CameraPose pose;
    double half_width = 1.0;   // metres covered either side of the centre
    double half_height = 1.0;
};

// Looks straight down from above the boxes; image up is the origin camera's
// forward direction on the ground plane (world +x if degenerate). The
// footprint covers every box corner and the origin camera with 10% padding.
// Throws EmptySandboxError on an empty scene.
TopDownView topdown_camera(const SandboxScene& scene, double margin);
TopDownView topdown_camera(std::span<const Vec3> points, const CameraPose& origin, const Vec3& up_axis,
                           double margin);

// Input-camera intrinsics rescaled to the style raster.
RenderCamera perspective_camera(const CameraPose& pose, const CameraIntrinsics& origin_intrinsics,
                                const RenderStyle& style, const CameraPose& origin, const Vec3& up_axis,
                                double ground_level);
// Square pixels; the footprint is widened to match the raster aspect ratio.
RenderCamera orthographic_camera(const TopDownView& view, const RenderStyle& style, const CameraPose& origin,
                                 const Vec3& up_axis, double ground_level);

// Up-coordinate of the lowest box corner (0 for an empty scene).
double scene_ground_level(const SandboxScene& scene);

RenderedView render_boxes(const SandboxScene& scene, const RenderCamera& camera, const RenderStyle& style);

// 2x2 splats, far to near, coloured per category (categories numbered in
// sorted label order).
RenderedView render_points(const ProxyCloud& cloud, const RenderCamera& camera, const RenderStyle& style);

// Same, with an explicit colour per point (dense point-cloud renders).
RenderedView render_colored_points(std::span<const Vec3> points, std::span<const Rgb> colors,
                                   const RenderCamera& camera, const RenderStyle& style);

struct ProjectedPoint {
    double u = 0.0;
    double v = 0.0;
    double depth = 0.0;
};

// Shared by renderer and tests; nullopt behind the near plane (perspective only).
std::optional<ProjectedPoint> project_for_render(const Vec3& p, const RenderCamera& camera);

}  // namespace sandbox3d
