#include "sandbox3d/qa.hpp"

#include "sandbox3d/errors.hpp"
#include "sandbox3d/image_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <regex>
#include <sstream>
#include <stdexcept>

namespace sandbox3d {

void QARecord::validate() const {
    if (choices.empty()) throw std::invalid_argument("question " + id + ": no choices");
    const int idx = gold - 'A';
    if (idx < 0 || idx >= static_cast<int>(choices.size()))
        throw std::invalid_argument("question " + id + ": gold answer is not one of the choices");
}

nlohmann::json to_json(const QARecord& r) {
    nlohmann::json j = {
        {"id", r.id},
        {"scene", r.scene_ref},
        {"question", r.question},
        {"choices", r.choices},
        {"answer", std::string(1, r.gold)},
        {"category", r.category},
    };
    if (!r.spec.is_null()) j["spec"] = r.spec;
    return j;
}

QARecord qa_from_json(const nlohmann::json& j) {
    QARecord r;
    try {
        r.id = j.at("id").get<std::string>();
        r.scene_ref = j.at("scene").get<std::string>();
        r.question = j.at("question").get<std::string>();
        r.choices = j.at("choices").get<std::vector<std::string>>();
        const auto ans = j.at("answer").get<std::string>();
        if (ans.size() != 1) throw std::invalid_argument("answer must be a single letter");
        r.gold = ans[0];
        r.category = j.value("category", std::string("uncategorized"));
        if (j.contains("spec")) r.spec = j.at("spec");
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("malformed question record: ") + e.what());
    }
    r.validate();
    return r;
}

std::vector<QARecord> read_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open benchmark " + path);
    std::vector<QARecord> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(qa_from_json(nlohmann::json::parse(line)));
        } catch (const std::exception& e) {
            throw Error(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

void write_jsonl(const std::string& path, const std::vector<QARecord>& records) {
    std::string text;
    for (const auto& r : records) text += to_json(r).dump() + "\n";
    write_text_file(path, text);
}

std::string_view to_string(QuestionTemplate t) {
    switch (t) {
        case QuestionTemplate::left_right: return "left_right";
        case QuestionTemplate::closer_farther: return "closer_farther";
        case QuestionTemplate::ego_movement: return "ego_movement";
        case QuestionTemplate::object_movement: return "object_movement";
        case QuestionTemplate::perspective: return "perspective";
    }
    return "left_right";
}

std::optional<QuestionTemplate> template_from_string(std::string_view s) {
    for (auto t : kAllTemplates)
        if (to_string(t) == s) return t;
    return std::nullopt;
}

namespace {

std::string fmt_distance(double d) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", d);
    return buf;
}

}  // namespace

std::string question_text(const QuestionIntent& q) {
    switch (q.kind) {
        case QuestionTemplate::left_right:
            return "From the camera's viewpoint, is the " + q.a + " to the left or to the right of the " + q.b + "?";
        case QuestionTemplate::closer_farther:
            return "Which is closer to the camera, the " + q.a + " or the " + q.b + "?";
        case QuestionTemplate::ego_movement:
            return "If the camera moves " + fmt_distance(q.distance_m) + " m forward, which will be closer to it, the " +
                   q.a + " or the " + q.b + "?";
        case QuestionTemplate::object_movement:
            return "If the " + q.b + " is moved " + fmt_distance(std::abs(q.distance_m)) + " m to the camera's " +
                   (q.distance_m < 0 ? "left" : "right") + ", will it be to the left or to the right of the " + q.a +
                   "?";
        case QuestionTemplate::perspective:
            return "Imagine standing at the " + q.a + " and facing the camera. Is the " + q.b +
                   " on your left or on your right?";
    }
    return {};
}

std::optional<QuestionIntent> parse_question_text(std::string_view text) {
    const std::string s(text);
    std::smatch m;
    static const std::regex lr(R"(is the (.+?) to the left or to the right of the (.+?)\?)");
    static const std::regex ego(R"(If the camera moves ([0-9.]+) m forward, which will be closer to it, the (.+?) or the (.+?)\?)");
    static const std::regex cf(R"(Which is closer to the camera, the (.+?) or the (.+?)\?)");
    static const std::regex om(R"(If the (.+?) is moved ([0-9.]+) m to the camera's (left|right), will it be to the left or to the right of the (.+?)\?)");
    static const std::regex pt(R"(Imagine standing at the (.+?) and facing the camera\. Is the (.+?) on your left or on your right\?)");
    if (std::regex_search(s, m, om))
        return QuestionIntent{QuestionTemplate::object_movement, m[4], m[1],
                              (m[3] == "left" ? -1.0 : 1.0) * std::stod(m[2])};
    if (std::regex_search(s, m, ego))
        return QuestionIntent{QuestionTemplate::ego_movement, m[2], m[3], std::stod(m[1])};
    if (std::regex_search(s, m, pt)) return QuestionIntent{QuestionTemplate::perspective, m[1], m[2], 0.0};
    if (std::regex_search(s, m, lr)) return QuestionIntent{QuestionTemplate::left_right, m[1], m[2], 0.0};
    if (std::regex_search(s, m, cf)) return QuestionIntent{QuestionTemplate::closer_farther, m[1], m[2], 0.0};
    return std::nullopt;
}

namespace {

// Signed quantity whose sign decides the answer: positive means "left" /
// "the a" depending on template.
std::optional<double> decisive_value(const QuestionIntent& q, const Layout& layout) {
    const auto ia = layout.find(q.a);
    const auto ib = layout.find(q.b);
    if (ia == layout.end() || ib == layout.end()) return std::nullopt;
    const Vec3 a = ia->second;
    const Vec3 b = ib->second;
    switch (q.kind) {
        case QuestionTemplate::left_right:
            return b.x() - a.x();  // > 0: a is left of b
        case QuestionTemplate::closer_farther:
            return b.norm() - a.norm();  // > 0: a closer
        case QuestionTemplate::ego_movement: {
            const Vec3 cam(0.0, 0.0, q.distance_m);
            return (b - cam).norm() - (a - cam).norm();
        }
        case QuestionTemplate::object_movement:
            return a.x() - (b.x() + q.distance_m);  // > 0: moved b is left of a
        case QuestionTemplate::perspective: {
            // Standing at a, facing the camera origin, on the ground plane.
            Vec2 f(-a.x(), -a.z());
            if (f.norm() < 1e-12) return std::nullopt;
            f.normalize();
            const Vec2 right(f.y(), -f.x());
            const Vec2 rel(b.x() - a.x(), b.z() - a.z());
            return -rel.dot(right);  // > 0: b on the left
        }
    }
    return std::nullopt;
}

}  // namespace

std::optional<std::string> evaluate_intent(const QuestionIntent& q, const Layout& layout) {
    const auto v = decisive_value(q, layout);
    if (!v) return std::nullopt;
    switch (q.kind) {
        case QuestionTemplate::left_right:
        case QuestionTemplate::object_movement:
        case QuestionTemplate::perspective:
            return *v > 0 ? "left" : "right";
        case QuestionTemplate::closer_farther:
        case QuestionTemplate::ego_movement:
            return *v > 0 ? "the " + q.a : "the " + q.b;
    }
    return std::nullopt;
}

std::optional<double> intent_margin(const QuestionIntent& q, const Layout& layout) {
    const auto v = decisive_value(q, layout);
    if (!v) return std::nullopt;
    return std::abs(*v);
}

std::optional<char> letter_of(const std::vector<std::string>& choices, std::string_view answer) {
    for (std::size_t i = 0; i < choices.size(); ++i)
        if (choices[i] == answer) return static_cast<char>('A' + i);
    return std::nullopt;
}

}  // namespace sandbox3d
