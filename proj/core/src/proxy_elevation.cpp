#include "sandbox3d/proxy_elevation.hpp"

#include "sandbox3d/errors.hpp"
#include "sandbox3d/providers.hpp"

#include <cstdint>
#include <limits>

namespace sandbox3d {

namespace {

// One pass: horizontal 3-min followed by vertical 3-min.
void erode_once(const std::vector<std::uint8_t>& in, std::vector<std::uint8_t>& out, int w, int h) {
    std::vector<std::uint8_t> row_min(in.size());
    for (int y = 0; y < h; ++y) {
        const std::uint8_t* r = in.data() + static_cast<std::size_t>(y) * w;
        std::uint8_t* o = row_min.data() + static_cast<std::size_t>(y) * w;
        for (int x = 0; x < w; ++x) {
            const bool l = x > 0 && r[x - 1];
            const bool rr = x + 1 < w && r[x + 1];
            o[x] = (r[x] && l && rr) ? 1 : 0;
        }
    }
    out.assign(in.size(), 0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const auto at = [&](int yy) { return row_min[static_cast<std::size_t>(yy) * w + x]; };
            const bool up = y > 0 && at(y - 1);
            const bool down = y + 1 < h && at(y + 1);
            out[static_cast<std::size_t>(y) * w + x] = (at(y) && up && down) ? 1 : 0;
        }
    }
}

}  // namespace

InstanceMask erode_mask(const InstanceMask& mask, int iterations) {
    InstanceMask out = mask;
    std::vector<std::uint8_t> scratch;
    for (int i = 0; i < iterations; ++i) {
        erode_once(out.bits, scratch, mask.width, mask.height);
        out.bits.swap(scratch);
    }
    if (iterations > 0 && out.empty()) return mask;
    return out;
}

std::vector<PixelCoord> fps_sample(const InstanceMask& mask, int n) {
    std::vector<PixelCoord> pts;
    for (int y = 0; y < mask.height; ++y)
        for (int x = 0; x < mask.width; ++x)
            if (mask.test(x, y)) pts.push_back({x, y});
    if (pts.empty()) throw EmptyMaskError();
    if (n <= 0) return {};
    if (pts.size() <= static_cast<std::size_t>(n)) return pts;

    // Exact centroid comparison: |N*p - sum|^2 in integers.
    const auto count = static_cast<std::int64_t>(pts.size());
    std::int64_t sx = 0, sy = 0;
    for (const auto& p : pts) {
        sx += p.x;
        sy += p.y;
    }
    std::size_t seed = 0;
    std::int64_t best = std::numeric_limits<std::int64_t>::max();
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const std::int64_t dx = count * pts[i].x - sx;
        const std::int64_t dy = count * pts[i].y - sy;
        const std::int64_t d = dx * dx + dy * dy;
        if (d < best) {
            best = d;
            seed = i;
        }
    }

    std::vector<PixelCoord> out;
    out.reserve(n);
    std::vector<std::int64_t> min_d2(pts.size(), std::numeric_limits<std::int64_t>::max());
    std::size_t current = seed;
    for (int k = 0; k < n; ++k) {
        out.push_back(pts[current]);
        const auto c = pts[current];
        std::int64_t far = -1;
        std::size_t next = 0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const std::int64_t dx = pts[i].x - c.x;
            const std::int64_t dy = pts[i].y - c.y;
            const std::int64_t d = dx * dx + dy * dy;
            if (d < min_d2[i]) min_d2[i] = d;
            if (min_d2[i] > far) {
                far = min_d2[i];
                next = i;
            }
        }
        current = next;
    }
    return out;
}

LiftResult lift_proxies(const ViewFrame& view, const std::vector<PixelCoord>& pixels, int object_id,
                        const std::string& label) {
    LiftResult res;
    for (const auto& px : pixels) {
        const double d = view.depth.at(px.x, px.y);
        auto p = backproject({static_cast<double>(px.x), static_cast<double>(px.y)}, d, view.intrinsics, view.pose);
        if (!p || !p->allFinite()) {
            ++res.skipped;
            continue;
        }
        res.cloud.points.push_back({*p, object_id, label, view.view_id});
    }
    if (res.cloud.empty()) throw EmptyProxyError(object_id);
    return res;
}

LiftResult elevate_object(const ViewFrame& view, const ObjectHint& hint, const Segmenter& segmenter,
                          const ElevationParams& params) {
    const InstanceMask mask = segmenter.segment(view, hint);
    if (mask.empty())
        throw ObjectNotFoundError(hint.label + " in view " + view.view_id.to_string());
    const InstanceMask eroded = erode_mask(mask, params.erosion_iterations);
    const auto pixels = fps_sample(eroded, params.n_pts);
    return lift_proxies(view, pixels, hint.object_id, hint.label);
}

}  // namespace sandbox3d
