#pragma once

// Versioned instruction templates and composition of the chat turns sent to
// the VLM at each stage.

#include "sandbox3d/providers.hpp"
#include "sandbox3d/render.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sandbox3d {

enum class PromptStage { direction, hints, answer };

std::string_view to_string(PromptStage stage);

inline constexpr std::string_view kPromptVersion = "v1";

// Template text for a stage. Built-in unless a prompt directory is set and
// holds `<stage>.<version>.txt`. Trailing whitespace is stripped.
std::string prompt_template(PromptStage stage);
// Pass nullopt to go back to the built-in templates.
void set_prompt_directory(std::optional<std::filesystem::path> dir);

// Stage whose template equals the system turn, if any.
std::optional<PromptStage> detect_stage(const std::vector<ChatTurn>& turns);

enum class PipelineMode { full, mv_only, text_coords, proxy_render, pointcloud_render };

inline constexpr std::array<PipelineMode, 5> kAllModes = {PipelineMode::full, PipelineMode::mv_only,
                                                          PipelineMode::text_coords, PipelineMode::proxy_render,
                                                          PipelineMode::pointcloud_render};

std::string_view to_string(PipelineMode mode);
std::optional<PipelineMode> mode_from_string(std::string_view s);

// "Question: ...\nChoices:\nA. ...\nB. ..."
std::string question_block(const std::string& question, const std::vector<std::string>& choices);

std::vector<ChatTurn> compose_direction_prompt(const std::string& question, const std::vector<std::string>& choices,
                                               const RgbImage& original);
std::vector<ChatTurn> compose_hints_prompt(const std::string& question, const std::vector<std::string>& choices,
                                           const RgbImage& original);

// Mode-dependent context of the final question.
struct PromptContext {
    std::vector<RenderedView> renders;  // step-back, then top-down
    std::vector<RgbImage> frames;       // mv_only: synthesized views
    std::string coords_json;            // text_coords
    double stepback_m = 2.0;
};

// Description of the renders: viewpoints, scale of the top-down view, colour legend.
std::string legend_text(const PromptContext& context, PipelineMode mode);

// System turn: answer template. User turn: original image, context images,
// context text, question with lettered choices.
std::vector<ChatTurn> compose_prompt(const std::string& question, const std::vector<std::string>& choices,
                                     const RgbImage& original, const PromptContext& context, PipelineMode mode);

}  // namespace sandbox3d
