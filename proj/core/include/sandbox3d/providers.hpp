#pragma once

// Interfaces for the external models (multi-view generator, depth/camera
// estimator, segmenter, chat VLM) plus the reply parsers and in-process mocks.

#include "sandbox3d/geometry.hpp"
#include "sandbox3d/proxy_elevation.hpp"
#include "sandbox3d/trajectory.hpp"

#include <deque>
#include <functional>
#include <mutex>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace sandbox3d {

enum class ChatRole { system, user, assistant };

std::string_view to_string(ChatRole role);

struct ChatPart {
    enum class Kind { text, image };
    Kind kind = Kind::text;
    std::string text;
    RgbImage image;

    static ChatPart from_text(std::string t) { return {Kind::text, std::move(t), {}}; }
    static ChatPart from_image(RgbImage img) { return {Kind::image, {}, std::move(img)}; }
};

struct ChatTurn {
    ChatRole role = ChatRole::user;
    std::vector<ChatPart> parts;

    std::size_t image_count() const;
    // Concatenation of all text parts, separated by newlines.
    std::string joined_text() const;
};

struct DecodeParams {
    double temperature = 0.0;
    int max_tokens = 1024;
};

class MultiViewGenerator {
public:
    virtual ~MultiViewGenerator() = default;
    // Throws MissingViewError naming the first absent (m, t).
    virtual std::vector<ViewFrame> generate(const ViewFrame& input, const TrajectorySpec& trajectory) const = 0;
};

struct DepthEstimate {
    DepthGrid depth;
    CameraIntrinsics intrinsics;
    CameraPose pose;
};

class DepthEstimator {
public:
    virtual ~DepthEstimator() = default;
    // One estimate per frame, in order. Throws BundleFormatError on size mismatch.
    virtual std::vector<DepthEstimate> estimate(std::span<const ViewFrame> frames) const = 0;
};

class Segmenter {
public:
    virtual ~Segmenter() = default;
    // Single positive point prompt. Throws ObjectNotFoundError.
    virtual InstanceMask segment(const ViewFrame& frame, const ObjectHint& hint) const = 0;
};

class ChatVlm {
public:
    virtual ~ChatVlm() = default;
    // Throws ProviderError.
    virtual std::string complete(const std::vector<ChatTurn>& turns, const DecodeParams& params) = 0;
};

// Parsed VLM reply.
struct VlmDecision {
    std::string raw_text;
    std::variant<std::monostate, MotionChoice, std::vector<ObjectHint>, char> payload;
    std::optional<std::string> thinking;
};

struct HintParseResult {
    std::vector<ObjectHint> hints;
    bool clamped = false;  // at least one coordinate was moved into bounds
};

// Parses the first JSON array of {"label", "x", "y"} objects in the text.
// Coordinates are clamped into the image, identical (label, x, y) entries are
// dropped, object ids follow array order. Throws HintParseError.
HintParseResult parse_object_hints(std::string_view raw_text, int width, int height);

struct ParsedAnswer {
    char letter = 'A';
    std::string thinking;
};

// Reads <answer>...</answer> (or, without tags, the last non-empty line) and
// matches a choice letter A-E or the unique choice whose text it contains.
// Throws AnswerParseError.
ParsedAnswer parse_answer(std::string_view raw_text, const std::vector<std::string>& choices);

// Letter for choice index i (0 -> 'A').
char choice_letter(std::size_t index);

// Number of consecutive "A. ", "B. ", ... lines in a prompt text.
int count_listed_choices(std::string_view text);

// FNV-1a; stable across platforms, unlike std::hash.
std::uint64_t stable_hash(std::string_view text);

// Queued replies; records every call. Thread-safe.
class ScriptedVlm : public ChatVlm {
public:
    ScriptedVlm() = default;
    explicit ScriptedVlm(std::vector<std::string> replies);

    void push(std::string reply);
    std::string complete(const std::vector<ChatTurn>& turns, const DecodeParams& params) override;

    std::size_t call_count() const;
    std::vector<std::vector<ChatTurn>> calls() const;

private:
    mutable std::mutex mu_;
    std::deque<std::string> replies_;
    std::vector<std::vector<ChatTurn>> calls_;
};

// Answers each final question with a uniformly random choice letter; other
// stages get fixed replies. Thread-safe and seed-deterministic per question.
class RandomChoiceVlm : public ChatVlm {
public:
    explicit RandomChoiceVlm(unsigned seed) : seed_(seed) {}
    std::string complete(const std::vector<ChatTurn>& turns, const DecodeParams& params) override;

private:
    unsigned seed_;
};

// Counts calls and forwards to another VLM.
class CountingVlm : public ChatVlm {
public:
    explicit CountingVlm(ChatVlm& inner) : inner_(inner) {}
    std::string complete(const std::vector<ChatTurn>& turns, const DecodeParams& params) override;
    int calls() const;

private:
    ChatVlm& inner_;
    mutable std::mutex mu_;
    int calls_ = 0;
};

}  // namespace sandbox3d
