#pragma once

// Providers backed by an analytic synthetic world.

#include "sandbox3d/providers.hpp"
#include "sandbox3d/synthetic_world.hpp"

#include <map>
#include <memory>
#include <mutex>

namespace sandbox3d {

class SyntheticGenerator : public MultiViewGenerator {
public:
    explicit SyntheticGenerator(std::shared_ptr<const WorldSpec> world) : world_(std::move(world)) {}
    // Frame t (1-based) has pose input.pose ∘ trajectory.poses[t-1] and view id (m, t).
    std::vector<ViewFrame> generate(const ViewFrame& input, const TrajectorySpec& trajectory) const override;

private:
    std::shared_ptr<const WorldSpec> world_;
};

class SyntheticDepthEstimator : public DepthEstimator {
public:
    explicit SyntheticDepthEstimator(std::shared_ptr<const WorldSpec> world) : world_(std::move(world)) {}
    std::vector<DepthEstimate> estimate(std::span<const ViewFrame> frames) const override;

private:
    std::shared_ptr<const WorldSpec> world_;
};

// The hint is read in the input view: the instance hit there is the one
// segmented in every frame, as a tracking segmenter would.
class SyntheticSegmenter : public Segmenter {
public:
    explicit SyntheticSegmenter(std::shared_ptr<const WorldSpec> world) : world_(std::move(world)) {}
    InstanceMask segment(const ViewFrame& frame, const ObjectHint& hint) const override;

private:
    const std::vector<int>& ids_for(const ViewFrame& frame) const;

    std::shared_ptr<const WorldSpec> world_;
    mutable std::mutex mu_;
    mutable std::map<std::pair<ViewId, std::array<double, 12>>, std::vector<int>> cache_;  // by view and pose
};

}  // namespace sandbox3d
