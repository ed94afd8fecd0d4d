#include "sandbox3d/render.hpp"

#include "sandbox3d/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

namespace sandbox3d {

namespace {

constexpr std::array<PaletteEntry, 12> kPalette = {{
    {"red", {230, 25, 75}},
    {"green", {60, 180, 75}},
    {"blue", {0, 130, 200}},
    {"orange", {245, 130, 48}},
    {"purple", {145, 30, 180}},
    {"cyan", {70, 200, 220}},
    {"magenta", {240, 50, 230}},
    {"lime", {170, 210, 60}},
    {"brown", {170, 110, 40}},
    {"navy", {0, 0, 128}},
    {"teal", {0, 128, 128}},
    {"maroon", {128, 0, 0}},
}};

class Raster {
public:
    Raster(RgbImage& img, int line_width) : img_(img), lw_(std::max(1, line_width)) {}

    // Returns the number of in-bounds pixels written.
    std::size_t line(double x0, double y0, double x1, double y1, Rgb c) {
        if (!clip_to_image(x0, y0, x1, y1)) return 0;
        long ix0 = std::lround(x0), iy0 = std::lround(y0);
        const long ix1 = std::lround(x1), iy1 = std::lround(y1);
        const long dx = std::labs(ix1 - ix0), dy = -std::labs(iy1 - iy0);
        const long sx = ix0 < ix1 ? 1 : -1, sy = iy0 < iy1 ? 1 : -1;
        long err = dx + dy;
        std::size_t n = 0;
        for (;;) {
            n += stamp(ix0, iy0, c);
            if (ix0 == ix1 && iy0 == iy1) break;
            const long e2 = 2 * err;
            if (e2 >= dy) {
                err += dy;
                ix0 += sx;
            }
            if (e2 <= dx) {
                err += dx;
                iy0 += sy;
            }
        }
        return n;
    }

    std::size_t block(long x0, long y0, int size, Rgb c) {
        std::size_t n = 0;
        for (long y = y0; y < y0 + size; ++y)
            for (long x = x0; x < x0 + size; ++x) n += put(x, y, c);
        return n;
    }

private:
    std::size_t stamp(long x, long y, Rgb c) {
        const long o = -(lw_ - 1) / 2;
        std::size_t n = 0;
        for (long yy = y + o; yy < y + o + lw_; ++yy)
            for (long xx = x + o; xx < x + o + lw_; ++xx) n += put(xx, yy, c);
        return n;
    }

    std::size_t put(long x, long y, Rgb c) {
        if (x < 0 || y < 0 || x >= img_.width || y >= img_.height) return 0;
        img_.set(static_cast<int>(x), static_cast<int>(y), c);
        return 1;
    }

    // Liang-Barsky against the raster rectangle grown by the brush size.
    bool clip_to_image(double& x0, double& y0, double& x1, double& y1) const {
        const double pad = lw_ + 1.0;
        const double xmin = -pad, ymin = -pad, xmax = img_.width - 1 + pad, ymax = img_.height - 1 + pad;
        const double dx = x1 - x0, dy = y1 - y0;
        double t0 = 0.0, t1 = 1.0;
        const double p[4] = {-dx, dx, -dy, dy};
        const double q[4] = {x0 - xmin, xmax - x0, y0 - ymin, ymax - y0};
        for (int i = 0; i < 4; ++i) {
            if (p[i] == 0.0) {
                if (q[i] < 0.0) return false;
                continue;
            }
            const double r = q[i] / p[i];
            if (p[i] < 0.0) {
                if (r > t1) return false;
                t0 = std::max(t0, r);
            } else {
                if (r < t0) return false;
                t1 = std::min(t1, r);
            }
        }
        const double nx0 = x0 + t0 * dx, ny0 = y0 + t0 * dy;
        x1 = x0 + t1 * dx;
        y1 = y0 + t1 * dy;
        x0 = nx0;
        y0 = ny0;
        return true;
    }

    RgbImage& img_;
    int lw_;
};

// Draws a world-space segment with near-plane clipping for perspective cameras.
std::size_t draw_segment(Raster& raster, const Vec3& a, const Vec3& b, const RenderCamera& cam, Rgb color) {
    Vec3 ca = cam.pose.to_camera(a);
    Vec3 cb = cam.pose.to_camera(b);
    if (cam.projection == ProjectionKind::perspective) {
        if (ca.z() < kNearPlane && cb.z() < kNearPlane) return 0;
        if (ca.z() < kNearPlane || cb.z() < kNearPlane) {
            const double t = (kNearPlane - ca.z()) / (cb.z() - ca.z());
            const Vec3 hit = ca + t * (cb - ca);
            (ca.z() < kNearPlane ? ca : cb) = hit;
        }
    }
    auto to_px = [&](const Vec3& p) -> Vec2 {
        const auto& k = cam.intrinsics;
        if (cam.projection == ProjectionKind::perspective)
            return {k.fx * p.x() / p.z() + k.cx, k.fy * p.y() / p.z() + k.cy};
        return {k.fx * p.x() + k.cx, k.fy * p.y() + k.cy};
    };
    const Vec2 pa = to_px(ca), pb = to_px(cb);
    return raster.line(pa.x(), pa.y(), pb.x(), pb.y(), color);
}

struct GroundFrame {
    Vec3 up;
    Vec3 forward;  // origin forward projected on the ground
    Vec3 right;
};

GroundFrame ground_frame(const CameraPose& origin, const Vec3& up_axis) {
    GroundFrame g;
    g.up = up_axis.normalized();
    Vec3 f = origin.forward() - origin.forward().dot(g.up) * g.up;
    if (f.norm() < 1e-6) {
        f = Vec3::UnitX() - Vec3::UnitX().dot(g.up) * g.up;
        if (f.norm() < 1e-6) f = Vec3::UnitZ() - Vec3::UnitZ().dot(g.up) * g.up;
    }
    g.forward = f.normalized();
    // Right-handed with y down: right = forward x up.
    g.right = g.forward.cross(g.up);
    return g;
}

Vec3 on_ground(const Vec3& p, const GroundFrame& g, double level) { return p + (level - p.dot(g.up)) * g.up; }

void draw_grid(Raster& raster, const RenderCamera& cam, const RenderStyle& style) {
    const auto g = ground_frame(cam.origin, cam.up_axis);
    const Vec3 o = on_ground(cam.origin.translation, g, cam.ground_level);
    const int n = 12;
    const double s = style.grid_spacing_m;
    for (int k = -n; k <= n; ++k) {
        draw_segment(raster, o + k * s * g.right - n * s * g.forward, o + k * s * g.right + n * s * g.forward, cam,
                     kGridColor);
        draw_segment(raster, o + k * s * g.forward - n * s * g.right, o + k * s * g.forward + n * s * g.right, cam,
                     kGridColor);
    }
}

void draw_marker(Raster& raster, const RenderCamera& cam) {
    const auto g = ground_frame(cam.origin, cam.up_axis);
    const Vec3 c = on_ground(cam.origin.translation, g, cam.ground_level);
    const double side = cam.projection == ProjectionKind::orthographic ? 14.0 * cam.meters_per_pixel() : 0.3;
    const double h = side * std::sqrt(3.0) / 2.0;
    // Equilateral, vertex centroid at the camera position, apex pointing forward.
    const Vec3 apex = c + (2.0 / 3.0) * h * g.forward;
    const Vec3 bl = c - (1.0 / 3.0) * h * g.forward - 0.5 * side * g.right;
    const Vec3 br = c - (1.0 / 3.0) * h * g.forward + 0.5 * side * g.right;
    draw_segment(raster, apex, bl, cam, kMarkerColor);
    draw_segment(raster, bl, br, cam, kMarkerColor);
    draw_segment(raster, br, apex, cam, kMarkerColor);
}

}  // namespace

std::span<const PaletteEntry> palette() { return kPalette; }

const PaletteEntry& palette_for(int index) {
    const int n = static_cast<int>(kPalette.size());
    return kPalette[static_cast<std::size_t>(((index % n) + n) % n)];
}

CameraPose stepback_camera(const CameraPose& origin, double distance) {
    if (distance == 0.0) return origin;
    return {origin.rotation, origin.translation - distance * origin.forward()};
}

TopDownView topdown_camera(std::span<const Vec3> points, const CameraPose& origin, const Vec3& up_axis,
                           double margin) {
    if (points.empty()) throw EmptySandboxError();
    const auto g = ground_frame(origin, up_axis);
    Mat3 rot;
    rot.col(0) = g.right;
    rot.col(1) = -g.forward;
    rot.col(2) = -g.up;

    const Vec3 down_img = rot.col(1);
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
    double top = -std::numeric_limits<double>::infinity();
    for (const auto& p : points) {
        const double x = p.dot(g.right), y = p.dot(down_img);
        xmin = std::min(xmin, x);
        xmax = std::max(xmax, x);
        ymin = std::min(ymin, y);
        ymax = std::max(ymax, y);
        top = std::max(top, p.dot(g.up));
    }
    // Centred over the content; the footprint also reaches the origin camera.
    const double cx = 0.5 * (xmin + xmax), cy = 0.5 * (ymin + ymax);
    const double ox = origin.translation.dot(g.right), oy = origin.translation.dot(down_img);
    const double reach_x = std::max({xmax - cx, cx - xmin, std::abs(ox - cx)});
    const double reach_y = std::max({ymax - cy, cy - ymin, std::abs(oy - cy)});
    TopDownView v;
    v.half_width = std::max(0.5, reach_x * 1.1);
    v.half_height = std::max(0.5, reach_y * 1.1);
    v.pose.rotation = rot;
    v.pose.translation = cx * rot.col(0) + cy * down_img + (top + margin) * g.up;
    return v;
}

TopDownView topdown_camera(const SandboxScene& scene, double margin) {
    std::vector<Vec3> pts;
    for (const auto& b : scene.boxes) {
        const auto c = box_corners(b);
        pts.insert(pts.end(), c.begin(), c.end());
    }
    if (pts.empty()) throw EmptySandboxError();
    return topdown_camera(pts, scene.origin_pose, scene.up_axis, margin);
}

RenderCamera perspective_camera(const CameraPose& pose, const CameraIntrinsics& origin_intrinsics,
                                const RenderStyle& style, const CameraPose& origin, const Vec3& up_axis,
                                double ground_level) {
    RenderCamera cam;
    cam.pose = pose;
    cam.intrinsics = origin_intrinsics.rescaled(style.width, style.height);
    cam.projection = ProjectionKind::perspective;
    cam.origin = origin;
    cam.up_axis = up_axis;
    cam.ground_level = ground_level;
    return cam;
}

RenderCamera orthographic_camera(const TopDownView& view, const RenderStyle& style, const CameraPose& origin,
                                 const Vec3& up_axis, double ground_level) {
    RenderCamera cam;
    cam.pose = view.pose;
    const double ppm = std::min(style.width / (2.0 * view.half_width), style.height / (2.0 * view.half_height));
    cam.intrinsics = {ppm, ppm, style.width / 2.0, style.height / 2.0, style.width, style.height};
    cam.projection = ProjectionKind::orthographic;
    cam.origin = origin;
    cam.show_marker = true;
    cam.up_axis = up_axis;
    cam.ground_level = ground_level;
    return cam;
}

double scene_ground_level(const SandboxScene& scene) {
    if (scene.boxes.empty()) return 0.0;
    double lo = std::numeric_limits<double>::infinity();
    const Vec3 up = scene.up_axis.normalized();
    for (const auto& b : scene.boxes)
        for (const auto& c : box_corners(b)) lo = std::min(lo, c.dot(up));
    return lo;
}

std::optional<ProjectedPoint> project_for_render(const Vec3& p, const RenderCamera& camera) {
    const Vec3 c = camera.pose.to_camera(p);
    const auto& k = camera.intrinsics;
    if (camera.projection == ProjectionKind::perspective) {
        if (c.z() < kNearPlane) return std::nullopt;
        return ProjectedPoint{k.fx * c.x() / c.z() + k.cx, k.fy * c.y() / c.z() + k.cy, c.z()};
    }
    return ProjectedPoint{k.fx * c.x() + k.cx, k.fy * c.y() + k.cy, c.z()};
}

RenderedView render_boxes(const SandboxScene& scene, const RenderCamera& camera, const RenderStyle& style) {
    RenderedView out{RgbImage(style.width, style.height, style.background), camera, {}};
    Raster raster(out.image, style.line_width);
    if (style.draw_axes) draw_grid(raster, camera, style);

    std::vector<std::size_t> order(scene.boxes.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> depth(scene.boxes.size());
    for (std::size_t i = 0; i < scene.boxes.size(); ++i) depth[i] = camera.pose.to_camera(scene.boxes[i].center).z();
    std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) {
        if (depth[l] != depth[r]) return depth[l] > depth[r];
        return scene.boxes[l].instance_id < scene.boxes[r].instance_id;
    });

    for (auto i : order) {
        const auto& box = scene.boxes[i];
        const auto& pal = palette_for(box.instance_id);
        const auto corners = box_corners(box);
        std::size_t drawn = 0;
        for (const auto& e : box_edges()) drawn += draw_segment(raster, corners[e[0]], corners[e[1]], camera, pal.color);
        if (drawn > 0) out.legend.push_back({std::string(pal.name), box.label, box.instance_id});
    }
    if (camera.show_marker) draw_marker(raster, camera);
    std::sort(out.legend.begin(), out.legend.end(),
              [](const LegendEntry& l, const LegendEntry& r) { return l.instance_id < r.instance_id; });
    return out;
}

namespace {

RenderedView splat(std::span<const Vec3> points, const std::vector<Rgb>& colors, const RenderCamera& camera,
                   const RenderStyle& style) {
    RenderedView out{RgbImage(style.width, style.height, style.background), camera, {}};
    Raster raster(out.image, 1);
    if (style.draw_axes) {
        Raster grid(out.image, style.line_width);
        draw_grid(grid, camera, style);
    }
    std::vector<std::pair<ProjectedPoint, std::size_t>> proj;
    for (std::size_t i = 0; i < points.size(); ++i)
        if (auto p = project_for_render(points[i], camera)) proj.push_back({*p, i});
    std::stable_sort(proj.begin(), proj.end(), [](const auto& l, const auto& r) { return l.first.depth > r.first.depth; });
    for (const auto& [p, i] : proj) raster.block(std::lround(p.u) - 1, std::lround(p.v) - 1, 2, colors[i]);
    if (camera.show_marker) {
        Raster m(out.image, style.line_width);
        draw_marker(m, camera);
    }
    return out;
}

}  // namespace

RenderedView render_points(const ProxyCloud& cloud, const RenderCamera& camera, const RenderStyle& style) {
    std::set<std::string> labels;
    for (const auto& p : cloud.points) labels.insert(p.label);
    std::map<std::string, int> index;
    for (const auto& l : labels) index.emplace(l, static_cast<int>(index.size()));
    std::vector<Vec3> pts;
    std::vector<Rgb> colors;
    for (const auto& p : cloud.points) {
        pts.push_back(p.xyz);
        colors.push_back(palette_for(index[p.label]).color);
    }
    auto out = splat(pts, colors, camera, style);
    for (const auto& [label, i] : index) out.legend.push_back({std::string(palette_for(i).name), label, i});
    return out;
}

RenderedView render_colored_points(std::span<const Vec3> points, std::span<const Rgb> colors,
                                   const RenderCamera& camera, const RenderStyle& style) {
    return splat(points, std::vector<Rgb>(colors.begin(), colors.end()), camera, style);
}

}  // namespace sandbox3d
