#pragma once

// On-disk scene bundles: manifest.json plus images, raw float32 depth and masks.

#include "sandbox3d/providers.hpp"
#include "sandbox3d/synthetic_world.hpp"
#include "sandbox3d/trajectory.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace sandbox3d {

struct BundleView {
    ViewFrame frame;
    std::optional<AbstractMotion> motion;  // trajectory family the frame belongs to
    std::string image_path;                // relative to the bundle root
    std::string depth_path;
};

struct BundleMask {
    std::size_t view = 0;  // index into Bundle::views
    int object_id = 0;
    std::string label;
    std::string path;
};

struct Bundle {
    std::filesystem::path root;
    std::string scene_id;
    Vec3 up_axis = Vec3(0.0, -1.0, 0.0);
    std::vector<BundleView> views;
    std::vector<BundleMask> masks;

    // First view with trajectory -1. Throws BundleFormatError.
    const BundleView& input() const;
    std::optional<std::size_t> find_view(const ViewFrame& frame) const;
};

// Validates every entry; throws BundleFormatError naming the field.
Bundle load_bundle(const std::filesystem::path& dir);

// Non-zero pixels are set.
InstanceMask load_mask(const Bundle& bundle, const BundleMask& mask);

std::vector<float> read_depth_file(const std::filesystem::path& path, int width, int height);
void write_depth_file(const std::filesystem::path& path, const DepthGrid& depth);

struct MaskToWrite {
    std::size_t view = 0;
    InstanceMask mask;
};

// Writes images, depth, masks and manifest.json. Paths in `views` are
// filled in when empty.
void write_bundle(const std::filesystem::path& dir, const std::string& scene_id, const Vec3& up_axis,
                  std::vector<BundleView> views, const std::vector<MaskToWrite>& masks);

// Input view plus every trajectory of every listed motion, with per-instance masks.
void write_world_bundle(const std::filesystem::path& dir, const WorldSpec& world,
                        const std::vector<AbstractMotion>& motions, const TrajectoryParams& params);

class BundleGenerator : public MultiViewGenerator {
public:
    explicit BundleGenerator(std::shared_ptr<const Bundle> bundle) : bundle_(std::move(bundle)) {}
    std::vector<ViewFrame> generate(const ViewFrame& input, const TrajectorySpec& trajectory) const override;

private:
    std::shared_ptr<const Bundle> bundle_;
};

// Stored depth, intrinsics and pose of each frame.
class BundleDepthEstimator : public DepthEstimator {
public:
    std::vector<DepthEstimate> estimate(std::span<const ViewFrame> frames) const override;
};

// Stored masks. The hint selects the input-view mask containing it (or the
// only input mask with its label); the mask with that object id is returned
// for the requested view.
class BundleSegmenter : public Segmenter {
public:
    explicit BundleSegmenter(std::shared_ptr<const Bundle> bundle) : bundle_(std::move(bundle)) {}
    InstanceMask segment(const ViewFrame& frame, const ObjectHint& hint) const override;

private:
    const InstanceMask& cached(std::size_t mask_index) const;

    std::shared_ptr<const Bundle> bundle_;
    mutable std::mutex mu_;
    mutable std::map<std::size_t, InstanceMask> cache_;
};

// Everything the pipeline needs to know about one scene.
struct SceneSource {
    std::string scene_id;
    ViewFrame input;
    Vec3 up_axis = Vec3(0.0, -1.0, 0.0);
    std::shared_ptr<const MultiViewGenerator> generator;
    std::shared_ptr<const DepthEstimator> depth;
    std::shared_ptr<const Segmenter> segmenter;
    std::shared_ptr<const WorldSpec> world;   // synthetic scenes only
    std::shared_ptr<const Bundle> bundle;     // bundle scenes only
};

// Ground-truth object hints for the input view: the visible objects of a
// synthetic world, or one per stored input-view mask of a bundle (the eroded
// pixel nearest the mask centroid). Empty when neither is available.
std::vector<ObjectHint> reference_hints(const SceneSource& scene);

SceneSource synthetic_scene(std::shared_ptr<const WorldSpec> world);
SceneSource bundle_scene(std::shared_ptr<const Bundle> bundle);

// "synthetic:<seed>:<k>" or a bundle directory, relative paths resolved
// against `base_dir`. Throws BundleFormatError or GenerationError.
SceneSource open_scene(const std::string& ref, const std::filesystem::path& base_dir = {});

}  // namespace sandbox3d
