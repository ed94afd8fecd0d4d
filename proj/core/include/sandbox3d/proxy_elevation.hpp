#pragma once

#include "sandbox3d/geometry.hpp"

#include <string>
#include <vector>

namespace sandbox3d {

class Segmenter;

struct ObjectHint {
    std::string label;
    Pixel center_px;
    int object_id = 0;
};

struct ElevationParams {
    int n_pts = 30;
    int erosion_iterations = 2;  // 3x3 square element
};

struct PixelCoord {
    int x = 0;
    int y = 0;
    auto operator<=>(const PixelCoord&) const = default;
};

// Binary erosion with the 3x3 square, pixels outside the raster count as
// unset. Returns the input unchanged when erosion would empty the mask.
InstanceMask erode_mask(const InstanceMask& mask, int iterations);

// Greedy farthest point sampling over set pixels. Seed: the set pixel nearest
// the mask centroid; ties go to the smallest row-major index. Output is in
// selection order. Throws EmptyMaskError.
std::vector<PixelCoord> fps_sample(const InstanceMask& mask, int n);

struct LiftResult {
    ProxyCloud cloud;
    int skipped = 0;  // pixels without valid depth
};

// Throws EmptyProxyError when no pixel has valid depth.
LiftResult lift_proxies(const ViewFrame& view, const std::vector<PixelCoord>& pixels, int object_id,
                        const std::string& label);

// segment -> erode -> FPS -> lift. Throws ObjectNotFoundError when the
// segmenter finds nothing, EmptyProxyError when nothing can be lifted.
LiftResult elevate_object(const ViewFrame& view, const ObjectHint& hint, const Segmenter& segmenter,
                          const ElevationParams& params);

}  // namespace sandbox3d
