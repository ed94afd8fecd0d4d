#include "sandbox3d/geometry_vlm.hpp"

#include "sandbox3d/prompts.hpp"
#include "sandbox3d/render.hpp"
#include "sandbox3d/text_coords.hpp"

#include <nlohmann/json.hpp>

#include <map>
#include <regex>

namespace sandbox3d {

namespace {

const ChatTurn* user_turn(const std::vector<ChatTurn>& turns) {
    for (auto it = turns.rbegin(); it != turns.rend(); ++it)
        if (it->role == ChatRole::user) return &*it;
    return nullptr;
}

std::string question_of(const std::string& text) {
    static const std::regex q(R"(Question: ([^\n]*)\nChoices:)");
    std::smatch m;
    return std::regex_search(text, m, q) ? m[1].str() : std::string();
}

std::vector<std::string> choices_of(const std::string& text) {
    std::vector<std::string> out;
    const auto at = text.find("\nChoices:");
    if (at == std::string::npos) return out;
    static const std::regex line(R"(\n([A-Z])\. ([^\n]*))");
    const std::string tail = text.substr(at);
    for (auto it = std::sregex_iterator(tail.begin(), tail.end(), line); it != std::sregex_iterator(); ++it)
        out.push_back((*it)[2].str());
    return out;
}

std::optional<Layout> layout_from_coords(const std::string& text) {
    const std::string marker = "3D bounding boxes of the objects:\n";
    const auto at = text.find(marker);
    if (at == std::string::npos) return std::nullopt;
    const auto start = at + marker.size();
    const auto end = text.find('\n', start);
    std::vector<TextBox> boxes;
    try {
        boxes = parse_text_coords(text.substr(start, end == std::string::npos ? std::string::npos : end - start));
    } catch (const std::exception&) {
        return std::nullopt;
    }
    std::map<std::string, std::pair<Vec3, int>> acc;
    for (const auto& b : boxes) {
        auto& [sum, n] = acc.try_emplace(b.label, Vec3::Zero(), 0).first->second;
        sum += b.center;
        ++n;
    }
    Layout out;
    for (const auto& [label, s] : acc) out[label] = s.first / s.second;
    return out;
}

std::optional<Layout> layout_from_topdown(const ChatTurn& user, const std::string& text) {
    static const std::regex scale(R"(([0-9.]+) m per pixel)");
    std::smatch m;
    if (!std::regex_search(text, m, scale)) return std::nullopt;
    const double mpp = std::stod(m[1].str());
    std::vector<const RgbImage*> images;
    for (const auto& p : user.parts)
        if (p.kind == ChatPart::Kind::image) images.push_back(&p.image);
    if (images.size() < 3) return std::nullopt;
    const RgbImage& top = *images[2];

    std::map<std::string, Rgb> colour_of;
    for (const auto& e : palette()) colour_of[std::string(e.name)] = e.color;
    std::map<std::string, std::vector<Rgb>> colours_for_label;
    static const std::regex entry(R"(\n- ([a-z]+): ([^\n]*) \(id [0-9]+\))");
    for (auto it = std::sregex_iterator(text.begin(), text.end(), entry); it != std::sregex_iterator(); ++it) {
        const auto c = colour_of.find((*it)[1].str());
        if (c != colour_of.end()) colours_for_label[(*it)[2].str()].push_back(c->second);
    }
    if (colours_for_label.empty()) return std::nullopt;

    auto centroid = [&](const std::vector<Rgb>& colours) -> std::optional<Vec2> {
        Vec2 sum = Vec2::Zero();
        long n = 0;
        for (int y = 0; y < top.height; ++y)
            for (int x = 0; x < top.width; ++x) {
                const auto* p = top.px(x, y);
                for (const auto& c : colours)
                    if (p[0] == c[0] && p[1] == c[1] && p[2] == c[2]) {
                        sum += Vec2(x, y);
                        ++n;
                        break;
                    }
            }
        if (n == 0) return std::nullopt;
        return sum / double(n);
    };
    const auto cam = centroid({kMarkerColor});
    if (!cam) return std::nullopt;
    Layout out;
    for (const auto& [label, colours] : colours_for_label)
        if (auto c = centroid(colours)) out[label] = Vec3((c->x() - cam->x()) * mpp, 0.0, (cam->y() - c->y()) * mpp);
    return out;
}

std::string answer_reply(char letter, const std::string& why) {
    return "<thinking> " + why + " </thinking> <answer> " + std::string(1, letter) + " </answer>";
}

}  // namespace

std::optional<Layout> read_layout_from_prompt(const std::vector<ChatTurn>& turns) {
    const auto* user = user_turn(turns);
    if (!user) return std::nullopt;
    const auto text = user->joined_text();
    if (auto l = layout_from_coords(text)) return l;
    return layout_from_topdown(*user, text);
}

std::string GeometryReadingVlm::complete(const std::vector<ChatTurn>& turns, const DecodeParams&) {
    const auto stage = detect_stage(turns);
    const auto* user = user_turn(turns);
    const std::string text = user ? user->joined_text() : std::string();

    if (stage == PromptStage::direction) {
        const auto q = question_of(text);
        auto count = [&](const std::string& w) {
            std::size_t n = 0;
            for (auto p = q.find(w); p != std::string::npos; p = q.find(w, p + 1)) ++n;
            return n;
        };
        const auto l = count("left"), r = count("right");
        return l > r ? "fwd-left" : r > l ? "fwd-right" : "forward";
    }
    if (stage == PromptStage::hints) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& h : hints_)
            arr.push_back({{"label", h.label}, {"x", h.center_px.x}, {"y", h.center_px.y}});
        return arr.dump();
    }

    const auto choices = choices_of(text);
    const auto intent = parse_question_text(question_of(text));
    if (!intent || choices.empty()) return answer_reply('A', "Question not understood.");
    const auto layout = read_layout_from_prompt(turns);
    if (!layout) return answer_reply('A', "No geometry in the context.");
    const auto truth = evaluate_intent(*intent, *layout);
    if (!truth) return answer_reply('A', "Objects missing from the context.");
    const auto letter = letter_of(choices, *truth);
    if (!letter) return answer_reply('A', "Derived answer is not a choice.");
    return answer_reply(*letter, "The layout gives: " + *truth + ".");
}

}  // namespace sandbox3d
