#include "sandbox3d/prompts.hpp"

#include "sandbox3d/embedded_prompts.hpp"
#include "sandbox3d/image_io.hpp"

#include <cstdio>
#include <mutex>

namespace sandbox3d {

namespace {

std::mutex g_prompt_mu;
std::optional<std::filesystem::path> g_prompt_dir;

std::string rstrip(std::string s) {
    while (!s.empty() && (s.back() == '\n' || s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.pop_back();
    return s;
}

std::string_view builtin(PromptStage stage) {
    switch (stage) {
        case PromptStage::direction: return embedded::kDirectionPrompt;
        case PromptStage::hints: return embedded::kHintsPrompt;
        case PromptStage::answer: return embedded::kAnswerPrompt;
    }
    return {};
}

ChatTurn system_turn(PromptStage stage) { return {ChatRole::system, {ChatPart::from_text(prompt_template(stage))}}; }

std::string fmt(const char* format, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), format, v);
    return buf;
}

}  // namespace

std::string_view to_string(PromptStage stage) {
    switch (stage) {
        case PromptStage::direction: return "direction";
        case PromptStage::hints: return "hints";
        case PromptStage::answer: return "answer";
    }
    return "answer";
}

std::string prompt_template(PromptStage stage) {
    std::optional<std::filesystem::path> dir;
    {
        std::lock_guard lock(g_prompt_mu);
        dir = g_prompt_dir;
    }
    if (dir) {
        const auto path = *dir / (std::string(to_string(stage)) + "." + std::string(kPromptVersion) + ".txt");
        if (std::filesystem::exists(path)) return rstrip(read_text_file(path));
    }
    return rstrip(std::string(builtin(stage)));
}

void set_prompt_directory(std::optional<std::filesystem::path> dir) {
    std::lock_guard lock(g_prompt_mu);
    g_prompt_dir = std::move(dir);
}

std::optional<PromptStage> detect_stage(const std::vector<ChatTurn>& turns) {
    for (const auto& t : turns) {
        if (t.role != ChatRole::system) continue;
        const auto text = t.joined_text();
        for (auto s : {PromptStage::direction, PromptStage::hints, PromptStage::answer})
            if (text == prompt_template(s)) return s;
    }
    return std::nullopt;
}

std::string_view to_string(PipelineMode mode) {
    switch (mode) {
        case PipelineMode::full: return "full";
        case PipelineMode::mv_only: return "mv_only";
        case PipelineMode::text_coords: return "text_coords";
        case PipelineMode::proxy_render: return "proxy_render";
        case PipelineMode::pointcloud_render: return "pointcloud_render";
    }
    return "full";
}

std::optional<PipelineMode> mode_from_string(std::string_view s) {
    for (auto m : kAllModes)
        if (to_string(m) == s) return m;
    return std::nullopt;
}

std::string question_block(const std::string& question, const std::vector<std::string>& choices) {
    std::string out = "Question: " + question + "\nChoices:";
    for (std::size_t i = 0; i < choices.size(); ++i) out += "\n" + std::string(1, choice_letter(i)) + ". " + choices[i];
    return out;
}

std::vector<ChatTurn> compose_direction_prompt(const std::string& question, const std::vector<std::string>& choices,
                                               const RgbImage& original) {
    return {system_turn(PromptStage::direction),
            {ChatRole::user, {ChatPart::from_image(original), ChatPart::from_text(question_block(question, choices))}}};
}

std::vector<ChatTurn> compose_hints_prompt(const std::string& question, const std::vector<std::string>& choices,
                                           const RgbImage& original) {
    return {system_turn(PromptStage::hints),
            {ChatRole::user,
             {ChatPart::from_image(original),
              ChatPart::from_text("Image size: " + std::to_string(original.width) + "x" +
                                  std::to_string(original.height) + " pixels.\n" + question_block(question, choices))}}};
}

std::string legend_text(const PromptContext& ctx, PipelineMode mode) {
    if (ctx.renders.size() < 2) return {};
    const auto& top = ctx.renders[1];
    std::string out = "Image 2 shows the scene from " + fmt("%.1f", ctx.stepback_m) +
                      " m behind the original camera, looking the same way.\n";
    out += "Image 3 is a top-down view at " + fmt("%.5f", top.camera.meters_per_pixel()) +
           " m per pixel. Up in the image is the camera's forward direction, right is the camera's right, "
           "and the black triangle marks the original camera.\n";
    switch (mode) {
        case PipelineMode::full: out += "Box colours:"; break;
        case PipelineMode::proxy_render: out += "Point colours:"; break;
        default: out += "Points carry the colours of the images they were seen in."; return out;
    }
    for (const auto& e : top.legend)
        out += "\n- " + e.color_name + ": " + e.label + " (id " + std::to_string(e.instance_id) + ")";
    return out;
}

std::vector<ChatTurn> compose_prompt(const std::string& question, const std::vector<std::string>& choices,
                                     const RgbImage& original, const PromptContext& ctx, PipelineMode mode) {
    ChatTurn user{ChatRole::user, {ChatPart::from_image(original)}};
    switch (mode) {
        case PipelineMode::full:
        case PipelineMode::proxy_render:
        case PipelineMode::pointcloud_render:
            for (const auto& r : ctx.renders) user.parts.push_back(ChatPart::from_image(r.image));
            user.parts.push_back(ChatPart::from_text(legend_text(ctx, mode)));
            break;
        case PipelineMode::mv_only:
            for (const auto& f : ctx.frames) user.parts.push_back(ChatPart::from_image(f));
            if (!ctx.frames.empty())
                user.parts.push_back(ChatPart::from_text("Images after the first are views from nearby camera positions."));
            break;
        case PipelineMode::text_coords:
            user.parts.push_back(ChatPart::from_text("3D bounding boxes of the objects:\n" + ctx.coords_json));
            break;
    }
    user.parts.push_back(ChatPart::from_text(question_block(question, choices)));
    return {system_turn(PromptStage::answer), std::move(user)};
}

}  // namespace sandbox3d
