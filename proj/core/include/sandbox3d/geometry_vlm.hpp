#pragma once

// Deterministic stand-in for a VLM that reads geometry off the prompt.
//
// direction: "fwd-left" / "fwd-right" / "forward" from the words of the question.
// hints:     the reference hints it was built with, as a JSON array.
// answer:    rebuilds object positions from the prompt context (coordinate
//            JSON, or legend colours located in the top-down render relative
//            to the camera marker) and evaluates the question. Falls back to
//            choice A when the context carries no usable geometry.

#include "sandbox3d/providers.hpp"
#include "sandbox3d/qa.hpp"
#include "sandbox3d/proxy_elevation.hpp"

#include <memory>

namespace sandbox3d {

// Positions recovered from a composed answer prompt (origin-camera frame;
// y is 0 when read from a top-down render).
std::optional<Layout> read_layout_from_prompt(const std::vector<ChatTurn>& turns);

class GeometryReadingVlm : public ChatVlm {
public:
    explicit GeometryReadingVlm(std::vector<ObjectHint> hints) : hints_(std::move(hints)) {}
    std::string complete(const std::vector<ChatTurn>& turns, const DecodeParams& params) override;

private:
    std::vector<ObjectHint> hints_;
};

}  // namespace sandbox3d
