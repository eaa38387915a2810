#pragma once

#include <concepts>
#include <string>
#include <vector>

#include <json.hpp>

#include "tandem/memory.hpp"

namespace tandem {

// The slice of a prior attempt that retry prompts embed.
struct AttemptView {
    std::string candidate_text;
    std::string feedback_text;
};

enum class BaRule { Best, Last };

inline std::string to_string(BaRule r) { return r == BaRule::Best ? "best" : "last"; }

inline BaRule ba_rule_from_string(const std::string& s) {
    if (s == "best") return BaRule::Best;
    if (s == "last") return BaRule::Last;
    throw std::invalid_argument("unknown ba_rule '" + s + "'");
}

// Everything the controller needs from a problem domain: prompt construction,
// reply judgment, feedback rendering, and memory serialization.
template <typename D>
concept Domain = requires(const D& d, const typename D::Instance& inst,
                          const std::vector<MemoryRecord>& memory, const AttemptView* last,
                          const std::string& raw, const typename D::Judgment& j) {
    typename D::Instance;
    typename D::Judgment;
    { d.name() } -> std::convertible_to<std::string>;
    { d.instance_size(inst) } -> std::convertible_to<int>;
    { d.task_block(inst) } -> std::convertible_to<std::string>;
    { d.build_prompt(inst, memory, last) } -> std::convertible_to<std::string>;
    { d.judge(inst, raw) } -> std::same_as<typename D::Judgment>;
    { d.feedback(inst, j) } -> std::convertible_to<std::string>;
    { d.format_reminder() } -> std::convertible_to<std::string>;
    { d.serialize_problem(inst) } -> std::convertible_to<nlohmann::json>;
    { d.default_ba_rule() } -> std::same_as<BaRule>;
    { j.score } -> std::convertible_to<double>;
    { j.canonical } -> std::convertible_to<std::string>;
};

} // namespace tandem
