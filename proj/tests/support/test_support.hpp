#pragma once

// Shared helpers: scratch directories, random generators, brute-force oracles.

#include "sandbox3d/geometry.hpp"
#include "sandbox3d/proxy_elevation.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

namespace sandbox3d::test {

// Fresh directory under the system temp dir, removed on destruction.
class ScratchDir {
public:
    explicit ScratchDir(const std::string& tag) {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("sandbox3d_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~ScratchDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    ScratchDir(const ScratchDir&) = delete;
    ScratchDir& operator=(const ScratchDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

private:
    std::filesystem::path path_;
};

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline int uniform_int(std::mt19937_64& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

inline Mat3 random_rotation(std::mt19937_64& rng) {
    Eigen::Quaterniond q(uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1));
    while (q.norm() < 1e-3) q = Eigen::Quaterniond(uniform(rng, -1, 1), uniform(rng, -1, 1), 0.5, 0.5);
    return q.normalized().toRotationMatrix();
}

inline CameraPose random_pose(std::mt19937_64& rng, double spread = 5.0) {
    CameraPose p;
    p.rotation = random_rotation(rng);
    p.translation = Vec3(uniform(rng, -spread, spread), uniform(rng, -spread, spread), uniform(rng, -spread, spread));
    return p;
}

inline CameraIntrinsics random_intrinsics(std::mt19937_64& rng) {
    CameraIntrinsics k;
    k.width = uniform_int(rng, 32, 640);
    k.height = uniform_int(rng, 32, 480);
    k.fx = uniform(rng, 50, 800);
    k.fy = uniform(rng, 50, 800);
    k.cx = uniform(rng, 0, k.width - 1);
    k.cy = uniform(rng, 0, k.height - 1);
    return k;
}

// Random blob: union of a few discs, optionally sparse noise.
inline InstanceMask random_blob_mask(std::mt19937_64& rng, int w, int h, double density_noise = 0.0) {
    InstanceMask m(w, h, 0, "blob");
    const int discs = uniform_int(rng, 1, 4);
    for (int d = 0; d < discs; ++d) {
        const double cx = uniform(rng, 0, w), cy = uniform(rng, 0, h), r = uniform(rng, 1.5, std::min(w, h) / 3.0);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r) m.set(x, y);
    }
    if (density_noise > 0.0)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                if (uniform(rng, 0, 1) < density_noise) m.set(x, y);
    if (m.empty()) m.set(uniform_int(rng, 0, w - 1), uniform_int(rng, 0, h - 1));
    return m;
}

// One 3x3-min pass per iteration, out-of-raster pixels unset.
inline InstanceMask reference_erode(const InstanceMask& in, int iterations) {
    InstanceMask cur = in;
    for (int it = 0; it < iterations; ++it) {
        InstanceMask next = cur;
        for (int y = 0; y < cur.height; ++y)
            for (int x = 0; x < cur.width; ++x) {
                int lo = 1;
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int xx = x + dx, yy = y + dy;
                        const int v = (xx < 0 || yy < 0 || xx >= cur.width || yy >= cur.height) ? 0 : cur.test(xx, yy);
                        lo = std::min(lo, v);
                    }
                next.set(x, y, lo == 1);
            }
        cur = next;
    }
    if (cur.empty()) return in;
    return cur;
}

// Textbook greedy FPS over set pixels with the documented seed and tie-break.
inline std::vector<PixelCoord> reference_fps(const InstanceMask& m, int n) {
    std::vector<PixelCoord> px;
    for (int y = 0; y < m.height; ++y)
        for (int x = 0; x < m.width; ++x)
            if (m.test(x, y)) px.push_back({x, y});
    if (static_cast<int>(px.size()) <= n) return px;
    double mx = 0, my = 0;
    for (auto p : px) mx += p.x, my += p.y;
    mx /= px.size();
    my /= px.size();
    auto d2 = [](double ax, double ay, double bx, double by) { return (ax - bx) * (ax - bx) + (ay - by) * (ay - by); };
    std::size_t seed = 0;
    for (std::size_t i = 1; i < px.size(); ++i)
        if (d2(px[i].x, px[i].y, mx, my) < d2(px[seed].x, px[seed].y, mx, my)) seed = i;
    std::vector<PixelCoord> out{px[seed]};
    while (static_cast<int>(out.size()) < n) {
        std::size_t best = 0;
        double best_d = -1;
        for (std::size_t i = 0; i < px.size(); ++i) {
            double dmin = std::numeric_limits<double>::infinity();
            for (auto s : out) dmin = std::min(dmin, d2(px[i].x, px[i].y, s.x, s.y));
            if (dmin > best_d) {
                best_d = dmin;
                best = i;
            }
        }
        out.push_back(px[best]);
    }
    return out;
}

// O(n^2) DBSCAN in plain ascending-index order.
inline std::vector<int> reference_dbscan(const std::vector<Vec3>& pts, double eps, int min_pts) {
    const std::size_t n = pts.size();
    auto nb = [&](std::size_t i) {
        std::vector<std::size_t> out;
        for (std::size_t j = 0; j < n; ++j)
            if ((pts[i] - pts[j]).norm() <= eps) out.push_back(j);
        return out;
    };
    std::vector<int> label(n, -2);  // -2 unvisited
    int cluster = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (label[i] != -2) continue;
        auto ni = nb(i);
        if (static_cast<int>(ni.size()) < min_pts) {
            label[i] = -1;
            continue;
        }
        label[i] = cluster;
        std::vector<std::size_t> queue(ni.begin(), ni.end());
        for (std::size_t q = 0; q < queue.size(); ++q) {
            const std::size_t j = queue[q];
            if (label[j] == -1) label[j] = cluster;
            if (label[j] != -2) continue;
            label[j] = cluster;
            auto nj = nb(j);
            if (static_cast<int>(nj.size()) >= min_pts) queue.insert(queue.end(), nj.begin(), nj.end());
        }
        ++cluster;
    }
    return label;
}

// Points on the surface of an axis-aligned box of half extents h, on a regular grid.
inline std::vector<Vec3> box_surface_samples(const Vec3& h, int per_edge) {
    std::vector<Vec3> out;
    for (int face = 0; face < 6; ++face) {
        const int axis = face / 2;
        const double sign = face % 2 == 0 ? -1.0 : 1.0;
        const int a1 = (axis + 1) % 3, a2 = (axis + 2) % 3;
        for (int i = 0; i < per_edge; ++i)
            for (int j = 0; j < per_edge; ++j) {
                Vec3 p;
                p[axis] = sign * h[axis];
                p[a1] = -h[a1] + 2 * h[a1] * i / (per_edge - 1);
                p[a2] = -h[a2] + 2 * h[a2] * j / (per_edge - 1);
                out.push_back(p);
            }
    }
    return out;
}

inline double angle_deg(const Vec3& a, const Vec3& b) {
    const double c = std::clamp(std::abs(a.normalized().dot(b.normalized())), 0.0, 1.0);
    return rad_to_deg(std::acos(c));
}

}  // namespace sandbox3d::test
