#include "sandbox3d/synthetic_providers.hpp"

#include "sandbox3d/errors.hpp"

#include <cmath>

namespace sandbox3d {

std::vector<ViewFrame> SyntheticGenerator::generate(const ViewFrame& input, const TrajectorySpec& trajectory) const {
    std::vector<ViewFrame> out;
    out.reserve(trajectory.poses.size());
    for (std::size_t t = 0; t < trajectory.poses.size(); ++t)
        out.push_back(render_view(*world_, input.pose.compose(trajectory.poses[t]),
                                  ViewId{trajectory.index, static_cast<int>(t) + 1}));
    return out;
}

std::vector<DepthEstimate> SyntheticDepthEstimator::estimate(std::span<const ViewFrame> frames) const {
    std::vector<DepthEstimate> out;
    for (const auto& f : frames) {
        if (f.image.width != world_->intrinsics.width || f.image.height != world_->intrinsics.height)
            throw BundleFormatError("image size", "frame " + f.view_id.to_string() + " does not match the world camera");
        out.push_back({render_depth(*world_, f.pose, world_->intrinsics), world_->intrinsics, f.pose});
    }
    return out;
}

const std::vector<int>& SyntheticSegmenter::ids_for(const ViewFrame& frame) const {
    std::array<double, 12> pose{};
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) pose[static_cast<std::size_t>(3 * r + c)] = frame.pose.rotation(r, c);
        pose[static_cast<std::size_t>(9 + r)] = frame.pose.translation[r];
    }
    const auto key = std::make_pair(frame.view_id, pose);
    std::lock_guard lock(mu_);
    auto it = cache_.find(key);
    if (it == cache_.end()) it = cache_.emplace(key, render_instance_ids(*world_, frame.pose, world_->intrinsics)).first;
    return it->second;
}

InstanceMask SyntheticSegmenter::segment(const ViewFrame& frame, const ObjectHint& hint) const {
    const auto& intr = world_->intrinsics;
    const int hx = static_cast<int>(std::lround(hint.center_px.x));
    const int hy = static_cast<int>(std::lround(hint.center_px.y));
    if (hx < 0 || hy < 0 || hx >= intr.width || hy >= intr.height)
        throw ObjectNotFoundError(hint.label + " (hint outside the image)");
    ViewFrame input;
    input.pose = world_->input_pose;
    input.view_id = ViewId::input();
    const int id = ids_for(input)[static_cast<std::size_t>(hy) * intr.width + hx];
    if (id < 0) throw ObjectNotFoundError(hint.label + " (hint on background)");

    const auto& ids = ids_for(frame);
    InstanceMask m(intr.width, intr.height, hint.object_id, hint.label);
    for (std::size_t i = 0; i < ids.size(); ++i) m.bits[i] = ids[i] == id ? 1 : 0;
    if (m.empty()) throw ObjectNotFoundError(hint.label + " (not visible in view " + frame.view_id.to_string() + ")");
    return m;
}

}  // namespace sandbox3d
