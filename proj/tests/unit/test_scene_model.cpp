#include "sandbox3d/geometry.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <set>

using namespace sandbox3d;
using namespace sandbox3d::test;

namespace {

CameraIntrinsics k640() {
    CameraIntrinsics k;
    k.fx = 500;
    k.fy = 480;
    k.cx = 320;
    k.cy = 240;
    k.width = 640;
    k.height = 480;
    return k;
}

}  // namespace

TEST_SUITE("scene_model") {
    TEST_CASE("backproject at the principal point lies on the optical axis") {
        const auto p = backproject({320, 240}, 2.0, k640(), CameraPose::identity());
        REQUIRE(p);
        CHECK((*p - Vec3(0, 0, 2)).norm() < 1e-12);
    }

    TEST_CASE("backproject one focal length off centre at unit depth") {
        const auto k = k640();
        const auto p = backproject({k.cx + k.fx, k.cy}, 1.0, k, CameraPose::identity());
        REQUIRE(p);
        CHECK((*p - Vec3(1, 0, 1)).norm() < 1e-12);
    }

    TEST_CASE("backproject rejects invalid depth") {
        const auto k = k640();
        CHECK_FALSE(backproject({10, 10}, 0.0, k, {}));
        CHECK_FALSE(backproject({10, 10}, -1.0, k, {}));
        CHECK_FALSE(backproject({10, 10}, std::nan(""), k, {}));
        CHECK_FALSE(backproject({10, 10}, std::numeric_limits<double>::infinity(), k, {}));
    }

    TEST_CASE("round trip with a translated pose") {
        CameraPose pose;
        pose.translation = Vec3(0.5, 0, -2);
        const auto p = backproject({100, 80}, 1.7, k640(), pose);
        REQUIRE(p);
        const auto q = project(*p, k640(), pose);
        REQUIRE(q);
        CHECK(std::abs(q->pixel.x - 100) < 1e-6);
        CHECK(std::abs(q->pixel.y - 80) < 1e-6);
        CHECK(std::abs(q->depth - 1.7) < 1e-9);
    }

    TEST_CASE("project on axis and behind the camera") {
        const auto q = project({0, 0, 2}, k640(), {});
        REQUIRE(q);
        CHECK(q->pixel.x == doctest::Approx(320));
        CHECK(q->pixel.y == doctest::Approx(240));
        CHECK(q->depth == doctest::Approx(2.0));
        CHECK_FALSE(project({0, 0, -1}, k640(), {}));
        CHECK_FALSE(project({0.3, 0.1, 0.0}, k640(), {}));
    }

    TEST_CASE("property: project inverts backproject for random cameras") {
        std::mt19937_64 rng(11);
        for (int i = 0; i < 2000; ++i) {
            const auto k = random_intrinsics(rng);
            const auto pose = random_pose(rng);
            const Pixel u{uniform(rng, 0, k.width - 1), uniform(rng, 0, k.height - 1)};
            const double d = uniform(rng, 0.05, 50.0);
            const auto p = backproject(u, d, k, pose);
            REQUIRE(p);
            const auto q = project(*p, k, pose);
            REQUIRE(q);
            CHECK(std::hypot(q->pixel.x - u.x, q->pixel.y - u.y) < 1e-6);
            CHECK(std::abs(q->depth - d) < 1e-9);
        }
    }

    TEST_CASE("property: backproject is equivariant under the camera pose") {
        std::mt19937_64 rng(12);
        for (int i = 0; i < 1000; ++i) {
            const auto k = random_intrinsics(rng);
            const auto pose = random_pose(rng);
            const Pixel u{uniform(rng, 0, k.width - 1), uniform(rng, 0, k.height - 1)};
            const double d = uniform(rng, 0.1, 20.0);
            const auto local = backproject(u, d, k, CameraPose::identity());
            const auto world = backproject(u, d, k, pose);
            REQUIRE(local);
            REQUIRE(world);
            CHECK((pose.to_world(*local) - *world).norm() < 1e-9);
        }
    }

    TEST_CASE("unit box corners follow the binary enumeration") {
        OrientedBox3 b;
        const auto c = box_corners(b);
        for (int i = 0; i < 8; ++i) {
            const Vec3 expected((i & 1) ? 0.5 : -0.5, (i & 2) ? 0.5 : -0.5, (i & 4) ? 0.5 : -0.5);
            CHECK((c[i] - expected).norm() < 1e-15);
        }
    }

    TEST_CASE("box rotated about z has rotated corners") {
        OrientedBox3 a;
        a.half_extents = Vec3(0.5, 0.3, 0.2);
        OrientedBox3 b = a;
        const Mat3 rz = Eigen::AngleAxisd(M_PI / 2, Vec3::UnitZ()).toRotationMatrix();
        b.axes = rz;
        const auto ca = box_corners(a), cb = box_corners(b);
        for (int i = 0; i < 8; ++i) CHECK((rz * ca[i] - cb[i]).norm() < 1e-12);
    }

    TEST_CASE("property: corner centroid and edge lengths") {
        std::mt19937_64 rng(13);
        for (int i = 0; i < 500; ++i) {
            OrientedBox3 b;
            b.center = Vec3(uniform(rng, -5, 5), uniform(rng, -5, 5), uniform(rng, -5, 5));
            b.axes = random_rotation(rng);
            b.half_extents = Vec3(uniform(rng, 0.01, 2), uniform(rng, 0.01, 2), uniform(rng, 0.01, 2));
            const auto c = box_corners(b);
            Vec3 m = Vec3::Zero();
            for (const auto& p : c) m += p;
            CHECK((m / 8.0 - b.center).norm() < 1e-9);
            for (const auto& e : box_edges()) {
                const int diff = e[0] ^ e[1];
                REQUIRE((diff == 1 || diff == 2 || diff == 4));
                const int axis = diff == 1 ? 0 : diff == 2 ? 1 : 2;
                CHECK(std::abs((c[e[0]] - c[e[1]]).norm() - 2 * b.half_extents[axis]) < 1e-9);
            }
        }
    }

    TEST_CASE("box edges are the 12 distinct unit-hamming pairs") {
        std::set<std::pair<int, int>> seen;
        for (const auto& e : box_edges()) seen.insert({std::min(e[0], e[1]), std::max(e[0], e[1])});
        CHECK(seen.size() == 12);
    }

    TEST_CASE("pose compose and inverse") {
        std::mt19937_64 rng(14);
        for (int i = 0; i < 100; ++i) {
            const auto a = random_pose(rng), b = random_pose(rng);
            const Vec3 p(uniform(rng, -3, 3), uniform(rng, -3, 3), uniform(rng, -3, 3));
            CHECK((a.compose(b).to_world(p) - a.to_world(b.to_world(p))).norm() < 1e-9);
            CHECK((a.inverse().to_world(a.to_world(p)) - p).norm() < 1e-9);
            CHECK(a.is_valid());
        }
        CameraPose bad;
        bad.rotation(0, 0) = 2.0;
        CHECK_FALSE(bad.is_valid());
        bad.rotation = -Mat3::Identity();
        CHECK_FALSE(bad.is_valid());
    }

    TEST_CASE("intrinsics invariants") {
        CHECK(k640().is_valid());
        auto k = k640();
        k.fx = 0;
        CHECK_FALSE(k.is_valid());
        CHECK_THROWS_AS(k.validate(), std::invalid_argument);
        k = k640();
        k.cx = 640;
        CHECK_FALSE(k.is_valid());
        const auto f = CameraIntrinsics::from_horizontal_fov(256, 256, 90.0);
        CHECK(f.fx == doctest::Approx(128.0));
        CHECK(f.fx == f.fy);
        const auto r = f.rescaled(512, 512);
        CHECK(r.fx == doctest::Approx(256.0));
        CHECK(r.width == 512);
    }

    TEST_CASE("yaw rotation turns forward toward +x") {
        const Vec3 f = yaw_rotation(90.0) * Vec3::UnitZ();
        CHECK((f - Vec3::UnitX()).norm() < 1e-12);
    }

    TEST_CASE("view frame validation") {
        ViewFrame f;
        f.intrinsics = CameraIntrinsics::from_horizontal_fov(8, 6, 60);
        f.image = RgbImage(8, 6);
        f.depth = DepthGrid(8, 6);
        CHECK_NOTHROW(f.validate());
        f.depth = DepthGrid(8, 5);
        CHECK_THROWS_AS(f.validate(), std::invalid_argument);
    }

    TEST_CASE("depth grid starts invalid") {
        DepthGrid g(3, 2);
        CHECK(g.values.size() == 6);
        CHECK_FALSE(g.valid_at(1, 1));
        g.at(1, 1) = 2.0f;
        CHECK(g.valid_at(1, 1));
    }
}
