#include "sandbox3d/errors.hpp"
#include "sandbox3d/image_io.hpp"
#include "sandbox3d/render.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <set>

using namespace sandbox3d;
using namespace sandbox3d::test;

namespace {

RenderStyle plain(int w = 512, int h = 512) {
    RenderStyle s;
    s.width = w;
    s.height = h;
    s.draw_axes = false;
    s.line_width = 1;
    return s;
}

bool is_color(const RgbImage& img, int x, int y, Rgb c) {
    if (x < 0 || y < 0 || x >= img.width || y >= img.height) return false;
    const auto* p = img.px(x, y);
    return p[0] == c[0] && p[1] == c[1] && p[2] == c[2];
}

// Some pixel within r of (x, y) has colour c.
bool color_near(const RgbImage& img, double x, double y, Rgb c, int r = 1) {
    for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx)
            if (is_color(img, static_cast<int>(std::lround(x)) + dx, static_cast<int>(std::lround(y)) + dy, c)) return true;
    return false;
}

std::size_t count_color(const RgbImage& img, Rgb c) {
    std::size_t n = 0;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) n += is_color(img, x, y, c);
    return n;
}

SandboxScene one_box(const Vec3& centre, int id = 0) {
    SandboxScene s;
    OrientedBox3 b;
    b.center = centre;
    b.label = "box";
    b.instance_id = id;
    s.boxes.push_back(b);
    s.origin_intrinsics = CameraIntrinsics::from_horizontal_fov(512, 512, 90);
    return s;
}

}  // namespace

TEST_SUITE("sandbox_render") {
    TEST_CASE("step-back camera") {
        const auto p = stepback_camera(CameraPose::identity(), 2.0);
        CHECK((p.translation - Vec3(0, 0, -2)).norm() < 1e-15);
        CHECK(p.rotation == Mat3::Identity());
        std::mt19937_64 rng(51);
        const auto origin = random_pose(rng);
        CHECK(stepback_camera(origin, 0.0) == origin);
        CameraPose yawed;
        yawed.rotation = yaw_rotation(37.0);
        yawed.translation = Vec3(1, 2, 3);
        const auto s = stepback_camera(yawed, 2.0);
        const Vec3 d = s.translation - yawed.translation;
        CHECK(std::abs(d.norm() - 2.0) < 1e-9);
        CHECK((d.normalized() + yawed.forward()).norm() < 1e-9);
        CHECK(s.rotation == yawed.rotation);
    }

    TEST_CASE("top-down camera looks straight down over the content") {
        SandboxScene s = one_box(Vec3::Zero());
        s.origin_pose.translation = Vec3(0, 0, -3);
        s.up_axis = Vec3(0, -1, 0);
        const auto v = topdown_camera(s, 0.1);
        CHECK(std::abs(v.pose.translation.x()) < 1e-9);
        CHECK(std::abs(v.pose.translation.z()) < 1e-9);
        CHECK(v.half_width >= 0.5);
        CHECK(v.half_height >= 3.0);  // reaches the camera marker
        CHECK(v.pose.forward().dot(s.up_axis) == doctest::Approx(-1.0).epsilon(1e-12));
        // Image up is the camera's ground-projected forward direction.
        CHECK((-v.pose.down() - Vec3(0, 0, 1)).norm() < 1e-9);
    }

    TEST_CASE("property: top-down coverage and orientation for random scenes") {
        std::mt19937_64 rng(52);
        for (int trial = 0; trial < 100; ++trial) {
            SandboxScene s;
            s.up_axis = Vec3(0, -1, 0);
            s.origin_pose.rotation = yaw_rotation(uniform(rng, -180, 180));
            s.origin_pose.translation = Vec3(uniform(rng, -3, 3), -1.5, uniform(rng, -3, 3));
            const int n = uniform_int(rng, 1, 6);
            for (int i = 0; i < n; ++i) {
                OrientedBox3 b;
                b.center = Vec3(uniform(rng, -4, 4), -0.5, uniform(rng, -4, 4));
                b.axes = Eigen::AngleAxisd(uniform(rng, 0, 3), Vec3::UnitY()).toRotationMatrix();
                b.half_extents = Vec3(uniform(rng, 0.1, 1), 0.5, uniform(rng, 0.1, 1));
                b.instance_id = i;
                s.boxes.push_back(b);
            }
            const auto view = topdown_camera(s, 0.1);
            CHECK(view.pose.forward().dot(s.up_axis) == doctest::Approx(-1.0).epsilon(1e-9));
            const auto cam = orthographic_camera(view, plain(), s.origin_pose, s.up_axis, 0.0);
            for (const auto& b : s.boxes)
                for (const auto& c : box_corners(b)) {
                    const auto p = project_for_render(c, cam);
                    REQUIRE(p);
                    CHECK(p->u >= 0);
                    CHECK(p->u <= 512);
                    CHECK(p->v >= 0);
                    CHECK(p->v <= 512);
                    CHECK(p->depth > 0);
                }
            const auto o = project_for_render(s.origin_pose.translation, cam);
            CHECK(o->u >= 0);
            CHECK(o->u <= 512);
        }
        CHECK_THROWS_AS(topdown_camera(SandboxScene{}, 0.1), EmptySandboxError);
    }

    TEST_CASE("two boxes 4 m apart both fit the top-down footprint") {
        SandboxScene s = one_box(Vec3(-2, -0.5, 5));
        auto b = s.boxes[0];
        b.center = Vec3(2, -0.5, 5);
        b.instance_id = 1;
        s.boxes.push_back(b);
        const auto v = topdown_camera(s, 0.1);
        const auto cam = orthographic_camera(v, plain(), s.origin_pose, s.up_axis, 0.0);
        const auto r = render_boxes(s, cam, plain());
        CHECK(r.legend.size() == 2);
        CHECK(count_color(r.image, palette_for(0).color) > 0);
        CHECK(count_color(r.image, palette_for(1).color) > 0);
    }

    TEST_CASE("empty scene renders background and marker only") {
        SandboxScene s;
        TopDownView v;
        v.pose.rotation << 1, 0, 0, 0, 0, 1, 0, -1, 0;  // looking along +y, i.e. down
        v.pose.translation = Vec3(0, -3, 0);
        v.half_width = v.half_height = 2;
        const auto cam = orthographic_camera(v, plain(128, 128), CameraPose::identity(), Vec3(0, -1, 0), 0.0);
        const auto r = render_boxes(s, cam, plain(128, 128));
        CHECK(r.legend.empty());
        const auto marker = count_color(r.image, kMarkerColor);
        CHECK(marker > 0);
        CHECK(marker + count_color(r.image, plain().background) == 128u * 128u);
    }

    TEST_CASE("box on the optical axis projects to the analytic corners") {
        const auto s = one_box(Vec3(0, 0, 3));
        const auto cam = perspective_camera(CameraPose::identity(), s.origin_intrinsics, plain(), {}, Vec3(0, -1, 0), 0.5);
        const auto r = render_boxes(s, cam, plain());
        const auto col = palette_for(0).color;
        // Front face at z = 2.5, back face at z = 3.5; f = 256 px.
        for (double z : {2.5, 3.5}) {
            const double off = 256.0 * 0.5 / z;
            for (double sx : {-1.0, 1.0})
                for (double sy : {-1.0, 1.0}) CHECK(color_near(r.image, 256 + sx * off, 256 + sy * off, col));
        }
        CHECK_FALSE(color_near(r.image, 256, 256, col, 3));
    }

    TEST_CASE("rendering is byte-deterministic") {
        std::mt19937_64 rng(53);
        SandboxScene s;
        s.origin_intrinsics = CameraIntrinsics::from_horizontal_fov(256, 256, 70);
        for (int i = 0; i < 8; ++i) {
            OrientedBox3 b;
            b.center = Vec3(uniform(rng, -2, 2), -0.4, uniform(rng, 2, 6));
            b.axes = Eigen::AngleAxisd(uniform(rng, 0, 3), Vec3::UnitY()).toRotationMatrix();
            b.half_extents = Vec3(0.3, 0.4, 0.2);
            b.instance_id = i;
            b.label = "x";
            s.boxes.push_back(b);
        }
        RenderStyle st;
        const auto cam = perspective_camera(stepback_camera(s.origin_pose, 2), s.origin_intrinsics, st, s.origin_pose,
                                            s.up_axis, 0.0);
        const auto a = render_boxes(s, cam, st);
        const auto b = render_boxes(s, cam, st);
        CHECK(a.image == b.image);
        CHECK(encode_png(a.image) == encode_png(b.image));
    }

    TEST_CASE("legend is a bijection onto drawn boxes; off-screen boxes are not listed") {
        auto s = one_box(Vec3(0, 0, 3), 4);
        OrientedBox3 behind = s.boxes[0];
        behind.center = Vec3(0, 0, -5);
        behind.instance_id = 7;
        s.boxes.push_back(behind);
        const auto cam = perspective_camera(CameraPose::identity(), s.origin_intrinsics, plain(), {}, Vec3(0, -1, 0), 0.5);
        const auto r = render_boxes(s, cam, plain());
        REQUIRE(r.legend.size() == 1);
        CHECK(r.legend[0].instance_id == 4);
        CHECK(r.legend[0].color_name == palette_for(4).name);
        CHECK(count_color(r.image, palette_for(7).color) == 0);
    }

    TEST_CASE("property: every box in front of the camera leaves visible pixels") {
        std::mt19937_64 rng(54);
        for (int trial = 0; trial < 100; ++trial) {
            const auto s = one_box(Vec3(uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, 2.5, 8)), trial % 12);
            const auto cam = perspective_camera(CameraPose::identity(), s.origin_intrinsics, plain(), {}, Vec3(0, -1, 0), 0.5);
            const auto r = render_boxes(s, cam, plain());
            CHECK(count_color(r.image, palette_for(trial % 12).color) > 0);
        }
    }

    TEST_CASE("palette is stable per instance id") {
        CHECK(palette().size() == 12);
        CHECK(palette_for(0).name == palette_for(12).name);
        std::set<std::string_view> names;
        for (const auto& p : palette()) names.insert(p.name);
        CHECK(names.size() == 12);
        auto s = one_box(Vec3(-1, 0, 4), 0);
        const auto cam = perspective_camera(CameraPose::identity(), s.origin_intrinsics, plain(), {}, Vec3(0, -1, 0), 0.5);
        const auto before = render_boxes(s, cam, plain()).legend;
        auto extra = s.boxes[0];
        extra.center = Vec3(1, 0, 4);
        extra.instance_id = 1;
        s.boxes.push_back(extra);
        const auto after = render_boxes(s, cam, plain()).legend;
        CHECK(after[0].color_name == before[0].color_name);
    }

    TEST_CASE("point splats") {
        ProxyCloud c;
        ProxyPoint p;
        p.xyz = Vec3(0, 0, 2);
        p.label = "cup";
        c.points.push_back(p);
        const auto k = CameraIntrinsics::from_horizontal_fov(64, 64, 90);
        const auto cam = perspective_camera(CameraPose::identity(), k, plain(64, 64), {}, Vec3(0, -1, 0), 0);
        const auto r = render_points(c, cam, plain(64, 64));
        CHECK(color_near(r.image, 32, 32, palette_for(0).color));
        CHECK(r.legend.size() == 1);
        const auto empty = render_points(ProxyCloud{}, cam, plain(64, 64));
        CHECK(count_color(empty.image, plain().background) == 64u * 64u);
    }

    TEST_CASE("property: splats land on the projection of their points") {
        std::mt19937_64 rng(55);
        const auto k = CameraIntrinsics::from_horizontal_fov(128, 128, 70);
        const auto cam = perspective_camera(CameraPose::identity(), k, plain(128, 128), {}, Vec3(0, -1, 0), 0);
        for (int trial = 0; trial < 100; ++trial) {
            ProxyCloud c;
            ProxyPoint p;
            p.xyz = Vec3(uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, 2, 6));
            p.label = "a";
            c.points.push_back(p);
            const auto r = render_points(c, cam, plain(128, 128));
            const auto proj = project(p.xyz, cam.intrinsics, cam.pose);
            REQUIRE(proj);
            CHECK(color_near(r.image, proj->pixel.x, proj->pixel.y, palette_for(0).color));
        }
    }

    TEST_CASE("image codecs round trip") {
        std::mt19937_64 rng(56);
        RgbImage img(17, 9);
        for (auto& b : img.data) b = static_cast<std::uint8_t>(uniform_int(rng, 0, 255));
        CHECK(decode_ppm(encode_ppm(img)) == img);
        if (png_supported()) CHECK(decode_png(encode_png(img)) == img);
        ScratchDir dir("codec");
        write_image(dir / ("a" + default_image_extension()), img);
        CHECK(read_image(dir / ("a" + default_image_extension())) == img);
    }
}
