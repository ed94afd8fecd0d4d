#pragma once

// Multiple-choice spatial questions: records, the question templates, and the
// relational predicates they ask about.

#include "sandbox3d/geometry.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sandbox3d {

struct QARecord {
    std::string id;
    std::string scene_ref;  // "synthetic:<seed>:<objects>" or a bundle directory
    std::string question;
    std::vector<std::string> choices;
    char gold = 'A';
    std::string category;
    nlohmann::json spec;  // template parameters (synthetic questions only)

    // Throws std::invalid_argument when gold is not a choice letter.
    void validate() const;
};

nlohmann::json to_json(const QARecord& r);
QARecord qa_from_json(const nlohmann::json& j);

std::vector<QARecord> read_jsonl(const std::string& path);
void write_jsonl(const std::string& path, const std::vector<QARecord>& records);

enum class QuestionTemplate { left_right, closer_farther, ego_movement, object_movement, perspective };

inline constexpr std::array<QuestionTemplate, 5> kAllTemplates = {
    QuestionTemplate::left_right, QuestionTemplate::closer_farther, QuestionTemplate::ego_movement,
    QuestionTemplate::object_movement, QuestionTemplate::perspective};

std::string_view to_string(QuestionTemplate t);
std::optional<QuestionTemplate> template_from_string(std::string_view s);

// What a question asks, independent of wording. `distance_m` is the forward
// camera move (ego_movement) or the signed rightward displacement of `b`
// (object_movement).
struct QuestionIntent {
    QuestionTemplate kind = QuestionTemplate::left_right;
    std::string a;
    std::string b;
    double distance_m = 0.0;
};

std::string question_text(const QuestionIntent& intent);
// Inverse of question_text; nullopt for text not produced by it.
std::optional<QuestionIntent> parse_question_text(std::string_view text);

// Object centres in the origin-camera frame (x right, y down, z forward), by label.
using Layout = std::map<std::string, Vec3>;

// Canonical text of the true choice, or nullopt if a label is missing.
std::optional<std::string> evaluate_intent(const QuestionIntent& intent, const Layout& layout);

// Margin by which the predicate holds (metres); used to reject ambiguous questions.
std::optional<double> intent_margin(const QuestionIntent& intent, const Layout& layout);

// Choice whose text equals `answer`, as a letter.
std::optional<char> letter_of(const std::vector<std::string>& choices, std::string_view answer);

}  // namespace sandbox3d
