#pragma once

// Pipeline configuration and its key = value file format.
//
//   mode = full                 # or mv_only, text_coords, proxy_render, pointcloud_render
//   [trajectory]
//   count = 3
//
// Sections: trajectory, elevation, consensus, cluster, render, vlm, eval.
// '#' and ';' start comments. Unknown keys are errors.

#include "sandbox3d/http_vlm.hpp"
#include "sandbox3d/prompts.hpp"
#include "sandbox3d/proxy_elevation.hpp"
#include "sandbox3d/render.hpp"
#include "sandbox3d/trajectory.hpp"
#include "sandbox3d/voting.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sandbox3d {

enum class VlmKind { geometry, random, http };

std::string_view to_string(VlmKind kind);

struct PipelineConfig {
    PipelineMode mode = PipelineMode::full;
    std::vector<PipelineMode> eval_modes;  // empty: just `mode`
    TrajectoryParams trajectory;
    ElevationParams elevation;
    ConsensusParams consensus;
    ClusterParams cluster;
    RenderStyle style;
    double stepback_m = 2.0;
    double topdown_margin = 0.1;  // fraction of the footprint added on each side
    int pointcloud_stride = 4;    // pixel stride of dense point-cloud renders
    DecodeParams decode;

    VlmKind vlm = VlmKind::geometry;
    HttpVlmConfig http;
    unsigned seed = 0;

    std::optional<std::filesystem::path> prompt_dir;
    int parallel = 0;  // records in flight during eval; 0 = hardware threads
    bool write_artifacts = true;
    bool write_frames = true;

    std::vector<PipelineMode> modes_to_evaluate() const;
    // Throws ConfigError naming the offending value.
    void validate() const;
};

// Throws ConfigError with the line number.
PipelineConfig parse_config(std::string_view text);
PipelineConfig load_config(const std::filesystem::path& path);

}  // namespace sandbox3d
