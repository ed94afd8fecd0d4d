#include "sandbox3d/providers.hpp"

#include "sandbox3d/errors.hpp"
#include "sandbox3d/prompts.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <regex>
#include <set>
#include <tuple>

namespace sandbox3d {

std::string_view to_string(ChatRole role) {
    switch (role) {
        case ChatRole::system: return "system";
        case ChatRole::user: return "user";
        case ChatRole::assistant: return "assistant";
    }
    return "user";
}

std::size_t ChatTurn::image_count() const {
    return static_cast<std::size_t>(
        std::count_if(parts.begin(), parts.end(), [](const ChatPart& p) { return p.kind == ChatPart::Kind::image; }));
}

std::string ChatTurn::joined_text() const {
    std::string out;
    bool first = true;
    for (const auto& p : parts) {
        if (p.kind != ChatPart::Kind::text) continue;
        if (!first) out += "\n";
        out += p.text;
        first = false;
    }
    return out;
}

std::uint64_t stable_hash(std::string_view text) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

namespace {

// End of the bracketed value starting at `open`, skipping string literals.
std::optional<std::size_t> matching_bracket(std::string_view s, std::size_t open) {
    int depth = 0;
    bool in_string = false;
    for (std::size_t i = open; i < s.size(); ++i) {
        const char c = s[i];
        if (in_string) {
            if (c == '\\') ++i;
            else if (c == '"') in_string = false;
            continue;
        }
        if (c == '"') in_string = true;
        else if (c == '[') ++depth;
        else if (c == ']' && --depth == 0) return i;
    }
    return std::nullopt;
}

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::string lower(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

std::optional<std::string> between(std::string_view text, std::string_view open, std::string_view close,
                                   bool last) {
    const std::string lt = lower(std::string(text));
    const auto b = last ? lt.rfind(open) : lt.find(open);
    if (b == std::string::npos) return std::nullopt;
    const auto start = b + open.size();
    auto e = lt.find(close, start);
    if (e == std::string::npos) e = text.size();
    return std::string(text.substr(start, e - start));
}

std::optional<char> match_choice(const std::string& raw, const std::vector<std::string>& choices) {
    const std::string s = trim(raw);
    if (s.empty()) return std::nullopt;
    const char last_letter = static_cast<char>('A' + std::min<std::size_t>(choices.size(), 5) - 1);
    auto valid = [&](char c) { return c >= 'A' && c <= last_letter; };

    // Bare letter, optionally wrapped: "B", "(B)", "B.", "B) left".
    static const std::regex bare(R"(^\(?([A-Z])(?:[\.\):]|$)(?:\s|$))");
    std::smatch m;
    if (std::regex_search(s, m, bare) && valid(m[1].str()[0])) return m[1].str()[0];
    static const std::regex labelled(R"((?:answer|option|choice)\s*(?:is)?\s*[:\-]?\s*\(?([A-Z])\b)", std::regex::icase);
    if (std::regex_search(s, m, labelled) && valid(m[1].str()[0])) return m[1].str()[0];

    const std::string ls = lower(s);
    std::optional<char> found;
    int hits = 0;
    for (std::size_t i = 0; i < choices.size(); ++i) {
        const auto c = lower(trim(choices[i]));
        if (!c.empty() && ls.find(c) != std::string::npos) {
            ++hits;
            found = choice_letter(i);
        }
    }
    if (hits == 1) return found;

    static const std::regex standalone(R"(\b([A-E])\b)");
    std::set<char> letters;
    for (auto it = std::sregex_iterator(s.begin(), s.end(), standalone); it != std::sregex_iterator(); ++it) {
        const char c = (*it)[1].str()[0];
        if (valid(c)) letters.insert(c);
    }
    // Lone uppercase "A" at sentence start is an article more often than a letter.
    if (letters.size() == 1 && hits == 0) return *letters.begin();
    return std::nullopt;
}

}  // namespace

HintParseResult parse_object_hints(std::string_view raw, int width, int height) {
    if (width <= 0 || height <= 0) throw std::invalid_argument("parse_object_hints: bad image size");
    for (std::size_t open = raw.find('['); open != std::string_view::npos; open = raw.find('[', open + 1)) {
        const auto close = matching_bracket(raw, open);
        if (!close) break;
        nlohmann::json arr;
        try {
            arr = nlohmann::json::parse(raw.substr(open, *close - open + 1));
        } catch (const nlohmann::json::exception&) {
            continue;
        }
        if (!arr.is_array()) continue;
        HintParseResult out;
        std::set<std::tuple<std::string, double, double>> seen;
        bool any_valid = false;
        for (const auto& e : arr) {
            if (!e.is_object() || !e.contains("label") || !e.contains("x") || !e.contains("y")) continue;
            if (!e["label"].is_string() || !e["x"].is_number() || !e["y"].is_number()) continue;
            any_valid = true;
            double x = e["x"].get<double>(), y = e["y"].get<double>();
            if (!std::isfinite(x) || !std::isfinite(y)) continue;
            const double cx = std::clamp(x, 0.0, double(width - 1));
            const double cy = std::clamp(y, 0.0, double(height - 1));
            if (cx != x || cy != y) out.clamped = true;
            const auto label = trim(e["label"].get<std::string>());
            if (!seen.insert({label, cx, cy}).second) continue;
            out.hints.push_back({label, {cx, cy}, static_cast<int>(out.hints.size())});
        }
        if (arr.empty() || any_valid) return out;
    }
    throw HintParseError("no JSON array of {label, x, y} objects in the reply");
}

char choice_letter(std::size_t index) { return static_cast<char>('A' + index); }

ParsedAnswer parse_answer(std::string_view raw, const std::vector<std::string>& choices) {
    if (choices.empty()) throw std::invalid_argument("parse_answer: no choices");
    ParsedAnswer out;
    if (auto t = between(raw, "<thinking>", "</thinking>", false)) out.thinking = trim(*t);
    std::string candidate;
    if (auto a = between(raw, "<answer>", "</answer>", true)) {
        candidate = *a;
    } else {
        std::string line;
        std::string text(raw);
        std::size_t pos = 0;
        while (pos <= text.size()) {
            const auto nl = text.find('\n', pos);
            const auto piece = trim(text.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos));
            if (!piece.empty()) line = piece;
            if (nl == std::string::npos) break;
            pos = nl + 1;
        }
        candidate = line;
    }
    const auto letter = match_choice(candidate, choices);
    if (!letter) throw AnswerParseError("'" + trim(candidate) + "' matches no choice");
    out.letter = *letter;
    return out;
}

ScriptedVlm::ScriptedVlm(std::vector<std::string> replies) : replies_(replies.begin(), replies.end()) {}

void ScriptedVlm::push(std::string reply) {
    std::lock_guard lock(mu_);
    replies_.push_back(std::move(reply));
}

std::string ScriptedVlm::complete(const std::vector<ChatTurn>& turns, const DecodeParams&) {
    std::lock_guard lock(mu_);
    calls_.push_back(turns);
    if (replies_.empty()) throw ProviderError(0, "scripted VLM has no queued reply");
    auto r = std::move(replies_.front());
    replies_.pop_front();
    return r;
}

std::size_t ScriptedVlm::call_count() const {
    std::lock_guard lock(mu_);
    return calls_.size();
}

std::vector<std::vector<ChatTurn>> ScriptedVlm::calls() const {
    std::lock_guard lock(mu_);
    return calls_;
}

int count_listed_choices(std::string_view text) {
    static const std::regex line(R"((?:^|\n)([A-Z])\. )");
    const std::string s(text);
    int n = 0;
    for (auto it = std::sregex_iterator(s.begin(), s.end(), line); it != std::sregex_iterator(); ++it)
        if ((*it)[1].str()[0] == choice_letter(n)) ++n;
    return n;
}

std::string RandomChoiceVlm::complete(const std::vector<ChatTurn>& turns, const DecodeParams&) {
    const auto stage = detect_stage(turns);
    if (stage == PromptStage::direction) return "forward";
    if (stage == PromptStage::hints) return "[]";
    std::string text;
    for (const auto& t : turns)
        if (t.role == ChatRole::user) text += t.joined_text();
    const int n = std::max(1, count_listed_choices(text));
    std::mt19937_64 rng(seed_ ^ stable_hash(text));
    const char letter = choice_letter(std::uniform_int_distribution<int>(0, n - 1)(rng));
    return "<thinking> Picked at random. </thinking> <answer> " + std::string(1, letter) + " </answer>";
}

std::string CountingVlm::complete(const std::vector<ChatTurn>& turns, const DecodeParams& params) {
    {
        std::lock_guard lock(mu_);
        ++calls_;
    }
    return inner_.complete(turns, params);
}

int CountingVlm::calls() const {
    std::lock_guard lock(mu_);
    return calls_;
}

}  // namespace sandbox3d
