#pragma once

// Procedural ground-truth scenes: cuboids resting on a ground plane, rendered
// analytically. World frame: y down (up axis -y), ground plane y = 0.

#include "sandbox3d/geometry.hpp"
#include "sandbox3d/proxy_elevation.hpp"
#include "sandbox3d/qa.hpp"

#include <optional>
#include <string>
#include <vector>

namespace sandbox3d {

struct CuboidSpec {
    Vec3 center = Vec3::Zero();
    double yaw_deg = 0.0;
    Vec3 size = Vec3::Ones();
    std::string label;
    int instance_id = 0;

    OrientedBox3 box() const;
};

struct WorldBounds {
    double x_min = -2.5;
    double x_max = 2.5;
    double z_min = 2.5;
    double z_max = 6.5;
    double min_size = 0.3;
    double max_size = 1.2;
    double min_gap = 0.5;  // footprint clearance between cuboids
    double camera_height = 1.5;
    int width = 256;
    int height = 256;
    double hfov_deg = 70.0;
    int attempts_per_object = 2000;
};

struct WorldSpec {
    std::vector<CuboidSpec> cuboids;
    CameraPose input_pose;
    CameraIntrinsics intrinsics;
    Vec3 up_axis = Vec3(0.0, -1.0, 0.0);
    unsigned seed = 0;

    const CuboidSpec* find(int instance_id) const;
    std::string scene_ref() const;
};

const std::vector<std::string>& label_vocabulary();

// Deterministic per (seed, k, bounds). Throws GenerationError, and
// std::invalid_argument unless 1 <= k <= 8.
WorldSpec generate_world(unsigned seed, int k, const WorldBounds& bounds = {});

// Parses "synthetic:<seed>:<k>"; nullopt for other references.
std::optional<std::pair<unsigned, int>> parse_synthetic_ref(const std::string& ref);

// Ray through pixel u, parameterised so that the ray parameter equals camera-frame depth.
struct PixelHit {
    double depth = 0.0;  // +inf when nothing is hit
    int instance_id = kNoHit;

    static constexpr int kNoHit = -2;
    static constexpr int kGround = -1;
};

// Camera-frame depth of the ray through u hitting `cuboid`, or nullopt.
std::optional<double> cuboid_hit_depth(const CuboidSpec& cuboid, const Pixel& u, const CameraIntrinsics& intr,
                                       const CameraPose& pose);

PixelHit trace_pixel(const WorldSpec& world, const Pixel& u, const CameraIntrinsics& intr, const CameraPose& pose);

// Nearest hit over cuboids and ground; background is NaN.
DepthGrid render_depth(const WorldSpec& world, const CameraPose& pose, const CameraIntrinsics& intr);

// Per-pixel nearest instance id (PixelHit::kGround / kNoHit elsewhere).
std::vector<int> render_instance_ids(const WorldSpec& world, const CameraPose& pose, const CameraIntrinsics& intr);

// Throws std::out_of_range for an unknown instance.
InstanceMask render_instance_mask(const WorldSpec& world, const CameraPose& pose, const CameraIntrinsics& intr,
                                  int instance_id);

// Flat-shaded: palette colour per instance, grey ground, pale sky.
RgbImage render_rgb(const WorldSpec& world, const CameraPose& pose, const CameraIntrinsics& intr);

ViewFrame render_view(const WorldSpec& world, const CameraPose& pose, const ViewId& id);

// One hint per instance visible from the pose: the eroded-mask pixel nearest
// the visible-mask centroid. Object ids follow instance ids.
std::vector<ObjectHint> visible_object_hints(const WorldSpec& world, const CameraPose& pose,
                                             const CameraIntrinsics& intr);

// Object centres in the input-camera frame, keyed by label (unique labels only).
Layout world_layout(const WorldSpec& world);

// Exact answer letter for a question generated from this world.
// Throws std::invalid_argument for malformed records.
char oracle_answer(const WorldSpec& world, const QARecord& question);

struct QuestionOptions {
    double min_margin_m = 0.3;
    int attempts = 400;
};

// Round-robin over the five templates; only objects with a unique label are
// referenced. Throws GenerationError when the world cannot support a template.
std::vector<QARecord> generate_questions(const WorldSpec& world, int n, unsigned seed,
                                         const QuestionOptions& options = {});

// Synthetic benchmark over consecutive world seeds starting at `base_seed`;
// `per_world` questions per world, worlds that cannot host them are skipped.
std::vector<QARecord> make_synthetic_benchmark(int n_questions, unsigned base_seed, int per_world = 5,
                                               int min_objects = 2, int max_objects = 5);

}  // namespace sandbox3d
