#pragma once

// End-to-end run for one question: direction query, trajectories, views,
// depth, hints, elevation, voting, renders, prompt, answer.

#include "sandbox3d/bundle.hpp"
#include "sandbox3d/config.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace sandbox3d {

struct PipelineQuestion {
    std::string id;
    std::string question;
    std::vector<std::string> choices;
};

struct PipelineResult {
    std::optional<char> predicted;  // nullopt when the run failed or the answer did not parse
    std::string raw_answer;
    PipelineMode requested_mode = PipelineMode::full;
    PipelineMode used_mode = PipelineMode::full;
    std::vector<std::string> flags;          // degradations, in order
    std::optional<std::string> failed_stage;
    std::string error;
    int vlm_calls = 0;
    std::vector<std::string> artifacts;      // relative to the output directory
    std::optional<SandboxScene> sandbox;
    double wall_time_s = 0.0;

    bool failed() const { return failed_stage.has_value(); }
};

// Stage names used in failed_stage.
inline constexpr std::array<std::string_view, 10> kStageNames = {
    "direction", "trajectories", "views", "depth", "hints",
    "elevation", "sandbox", "render", "prompt", "answer"};

// Never throws for provider or data failures: the mode is downgraded or the
// result is marked failed. Artifacts go to `out_dir` unless it is empty or
// config.write_artifacts is false.
PipelineResult run_pipeline(const PipelineConfig& config, const SceneSource& scene, const PipelineQuestion& question,
                            ChatVlm& vlm, const std::filesystem::path& out_dir);

// Hex SHA-256 of the raw RGB bytes, prefixed with the raster size.
std::string image_digest(const RgbImage& image);

// sandbox.json content. The reader throws std::invalid_argument.
nlohmann::json sandbox_to_json(const SandboxScene& scene);
SandboxScene sandbox_from_json(const nlohmann::json& j);

// Chat turns as JSON with images replaced by digests.
nlohmann::json transcript_json(const std::vector<ChatTurn>& turns);

}  // namespace sandbox3d
