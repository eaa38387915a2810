#pragma once

#include <chrono>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include <json.hpp>

#include "tandem/domain.hpp"
#include "tandem/graph.hpp"
#include "tandem/memory.hpp"

namespace tandem {

enum class FeedbackVariant { MLF, SLF };

inline std::string to_string(FeedbackVariant v) { return v == FeedbackVariant::MLF ? "MLF" : "SLF"; }

inline FeedbackVariant feedback_variant_from_string(const std::string& s) {
    if (s == "MLF") return FeedbackVariant::MLF;
    if (s == "SLF") return FeedbackVariant::SLF;
    throw std::invalid_argument("unknown feedback variant '" + s + "'");
}

struct GcFeedback {
    FeedbackVariant variant = FeedbackVariant::MLF;
    std::string text;             // MLF: numbered lines; SLF: a single line
    ConflictReport report;
    std::string adaptive_example; // empty when not included
};

// ---------------------------------------------------------------------------
// Prompt construction. Templates are named-placeholder text resources; tests
// audit the rendered bytes against the frozen golden forms.

inline constexpr const char* kGcTaskTemplate =
    "### Task: Graph Coloring Decision Problem (< {k_plus_1} colors)\n"
    "You must assign an integer color to every vertex of the undirected graph below such "
    "that no two adjacent vertices share the same color. If no coloring exists using at "
    "most {k} colors, respond exactly with: NOT SOLVABLE\n"
    "Do not output anything else or use quotes.\n"
    "\n"
    "### Input Graph \n"
    "{graph}\n"
    "\n"
    "### Output Format\n"
    "Provide one (vertex color) pair per line, sorted lexicographically:\n"
    "{example_lines}"
    "...\n"
    "Where `color` is an integer in the inclusive range [1, {k}].\n"
    "Return only this list, with no prose, headings, or extra punctuation.\n"
    "\n"
    "### Constraints Recap\n"
    "- Use < {k_plus_1} distinct colors.\n"
    "- Vertex identifiers are case-sensitive and must match those in the input.\n"
    "- Output must be either the ordered list above or the token `NOT SOLVABLE`.";

inline constexpr const char* kGcWorkedExampleTemplate =
    "### Worked Example\n"
    "A correct solution to a previously solved instance:\n"
    "{graph}\n"
    "\n"
    "{history}"
    "Solution:\n"
    "{solution}\n"
    "\n";

inline constexpr const char* kGcRetryTemplate =
    "\n\n### Previous Attempt\n{attempt}\n\n### Feedback\n{feedback}";

inline constexpr const char* kAdaptiveExampleTemplate =
    "---\n"
    "### Adaptive Example\n"
    "To help you, here is a smaller, related subproblem:\n"
    "\n"
    "Subproblem Graph:\n"
    "{graph}\n"
    "\n"
    "Coloring:\n"
    "{coloring}\n"
    "---";

inline std::string gc_task_title(const GraphInstance& g) {
    return "Graph Coloring Decision Problem (< " + std::to_string(g.k() + 1) + " colors)";
}

// The graph as it appears inside prompts: bare `u v` pairs under a
// ` p edges N M` header, every line indented by one space.
inline std::string prompt_graph_block(const GraphInstance& g) {
    auto edges = g.edge_names();
    std::sort(edges.begin(), edges.end());

    bool isolated = false;
    for (int i = 0; i < g.vertex_count(); ++i)
        if (g.degree(i) == 0) { isolated = true; break; }

    std::string out = " p edges " + std::to_string(g.vertex_count()) + " " +
                      std::to_string(g.edge_count());
    if (isolated) {
        out += "\n c vertices:";
        for (const auto& v : g.vertices()) out += " " + v;
    } else {
        out += "\n c edges";
    }
    for (const auto& [u, v] : edges) out += "\n " + u + " " + v;
    return out;
}

inline std::string gc_task_block(const GraphInstance& g) {
    std::vector<std::string> sorted_names = g.vertices();
    std::sort(sorted_names.begin(), sorted_names.end());
    std::string example_lines = "(" + sorted_names[0] + " 1)\n";
    if (sorted_names.size() > 1) example_lines += "(" + sorted_names[1] + " 2)\n";

    return render_template(kGcTaskTemplate,
                           {{"k", std::to_string(g.k())},
                            {"k_plus_1", std::to_string(g.k() + 1)},
                            {"graph", prompt_graph_block(g)},
                            {"example_lines", example_lines}});
}

inline std::string gc_worked_example(const MemoryRecord& rec) {
    return render_template(kGcWorkedExampleTemplate,
                           {{"graph", rec.problem_instance.value("graph", std::string{})},
                            {"history", worked_example_history(rec)},
                            {"solution", rec.correct_solution}});
}

inline std::string build_s1_prompt(const GraphInstance& g, const std::vector<MemoryRecord>& memory,
                                   const AttemptView* last) {
    std::string out;
    for (const auto& rec : memory) out += gc_worked_example(rec);
    out += gc_task_block(g);
    if (last)
        out += render_template(kGcRetryTemplate,
                               {{"attempt", last->candidate_text},
                                {"feedback", last->feedback_text}});
    return out;
}

// ---------------------------------------------------------------------------
// Output parsing.

inline std::string render_assignment_lines(const std::map<std::string, int>& assignment) {
    std::string out;
    for (const auto& [v, c] : assignment) { // std::map iterates lexicographically
        if (!out.empty()) out += "\n";
        out += "(" + v + " " + std::to_string(c) + ")";
    }
    return out;
}

inline ColoringCandidate parse_coloring(const std::string& raw, const GraphInstance& g) {
    ColoringCandidate cand;
    cand.raw_text = raw;

    if (trim(raw) == "NOT SOLVABLE") {
        cand.kind = CandidateKind::NotSolvableClaim;
        return cand;
    }

    static const std::regex pair_re(R"(\(\s*([A-Za-z_][A-Za-z0-9_]*)\s+(-?\d+)\s*\))");
    size_t parsed = 0;
    for (auto it = std::sregex_iterator(raw.begin(), raw.end(), pair_re);
         it != std::sregex_iterator(); ++it) {
        ++parsed;
        std::string name = (*it)[1].str();
        long long value = 0;
        try {
            value = std::stoll((*it)[2].str());
        } catch (const std::exception&) {
            value = 1LL << 40; // absurd color, penalized as out-of-range
        }
        int color = static_cast<int>(std::clamp<long long>(value, -1000000, 1000000));
        if (!g.has_vertex(name)) {
            if (std::find(cand.unknown_vertices.begin(), cand.unknown_vertices.end(), name) ==
                cand.unknown_vertices.end())
                cand.unknown_vertices.push_back(name);
            continue;
        }
        cand.assignment[name] = color; // duplicates: last occurrence wins
    }

    cand.kind = parsed > 0 ? CandidateKind::Assignment : CandidateKind::ParseFailure;
    return cand;
}

// ---------------------------------------------------------------------------
// Feedback rendering.

inline std::string gc_format_reminder() {
    return "That was incorrect. Your reply could not be parsed. Provide one (vertex color) "
           "pair per line, sorted lexicographically, like (a 1), or respond exactly with: "
           "NOT SOLVABLE";
}

namespace detail {

inline std::string adaptive_example_block(const GraphInstance& g, const ConflictReport& report,
                                          std::chrono::milliseconds oracle_budget) {
    std::vector<std::string> vs = report.conflict_vertices;
    if (vs.size() > 8) {
        // keep the highest-degree conflict vertices, ties by identifier
        std::sort(vs.begin(), vs.end(), [&](const std::string& a, const std::string& b) {
            int da = g.degree(g.vertex_index(a));
            int db = g.degree(g.vertex_index(b));
            if (da != db) return da > db;
            return a < b;
        });
        vs.resize(8);
    }
    GraphInstance sub = induced_subgraph(g, vs);
    ExactResult res;
    try {
        res = exact_color(sub, oracle_budget);
    } catch (const std::exception&) {
        return {};
    }
    if (res.status != ExactStatus::Solution) return {};

    std::string pairs;
    for (const auto& v : sub.vertices()) {
        if (!pairs.empty()) pairs += "  ";
        pairs += "(" + v + " " + std::to_string(res.assignment.at(v)) + ")";
    }
    return render_template(kAdaptiveExampleTemplate,
                           {{"graph", emit_dimacs(sub)}, {"coloring", pairs}});
}

} // namespace detail

inline GcFeedback render_feedback(const GraphInstance& g, const ConflictReport& report,
                                  FeedbackVariant variant, bool include_adaptive,
                                  std::chrono::milliseconds oracle_budget = std::chrono::milliseconds(2000)) {
    GcFeedback fb;
    fb.variant = variant;
    fb.report = report;

    if (report.kind == CandidateKind::ParseFailure) {
        fb.text = gc_format_reminder();
        return fb;
    }
    if (report.kind == CandidateKind::NotSolvableClaim) {
        fb.text = "That was incorrect. The graph is solvable with at most " +
                  std::to_string(g.k()) +
                  " colors; a valid coloring exists. Provide a coloring instead of NOT SOLVABLE.";
        return fb;
    }

    if (variant == FeedbackVariant::MLF) {
        std::string out = "That was incorrect. The coloring is invalid for the following reason(s):";
        int i = 0;
        for (const auto& c : report.conflicts)
            out += "\n  " + std::to_string(++i) + ". adjacent-conflict: vertices " + c.u + " and " +
                   c.v + " share color " + std::to_string(c.color);
        for (const auto& note : report.notes) out += "\n  - note: " + note;
        fb.text = out;
    } else {
        std::vector<std::string> parts;
        if (!report.conflicts.empty()) {
            std::string pairs;
            for (const auto& c : report.conflicts) {
                if (!pairs.empty()) pairs += ", ";
                pairs += "(" + c.u + "," + c.v + ")";
            }
            parts.push_back("adjacent-conflict(s) on pairs: " + pairs);
        }
        for (const auto& note : report.notes) parts.push_back("note: " + note);
        fb.text = "That was incorrect. The coloring is invalid: " + join(parts, "; ") + ".";
    }

    if (include_adaptive && !report.conflict_vertices.empty())
        fb.adaptive_example = detail::adaptive_example_block(g, report, oracle_budget);
    return fb;
}

// ---------------------------------------------------------------------------
// Domain adapter used by the controller.

class GcDomain {
public:
    using Instance = GraphInstance;

    struct Judgment {
        ColoringCandidate candidate;
        ConflictReport report;
        double score = 0.0;
        std::string canonical;
    };

    GcDomain() = default;
    explicit GcDomain(FeedbackVariant variant, std::optional<bool> include_adaptive = std::nullopt,
                      std::chrono::milliseconds oracle_budget = std::chrono::milliseconds(2000))
        : variant_(variant), include_adaptive_(include_adaptive), oracle_budget_(oracle_budget) {}

    std::string name() const { return "graph-coloring"; }
    int instance_size(const GraphInstance& g) const { return g.vertex_count(); }
    std::string task_block(const GraphInstance& g) const { return gc_task_block(g); }
    BaRule default_ba_rule() const { return BaRule::Best; }
    FeedbackVariant feedback_variant() const { return variant_; }

    // adaptive examples ride along with MLF unless explicitly overridden
    bool adaptive_enabled() const { return include_adaptive_.value_or(variant_ == FeedbackVariant::MLF); }

    std::string build_prompt(const GraphInstance& g, const std::vector<MemoryRecord>& memory,
                             const AttemptView* last) const {
        return build_s1_prompt(g, memory, last);
    }

    Judgment judge(const GraphInstance& g, const std::string& raw) const {
        Judgment j;
        j.candidate = parse_coloring(raw, g);
        j.report = score(g, j.candidate);
        j.score = j.report.score;
        if (j.candidate.kind == CandidateKind::Assignment)
            j.canonical = render_assignment_lines(j.candidate.assignment);
        else if (j.candidate.kind == CandidateKind::NotSolvableClaim)
            j.canonical = "NOT SOLVABLE";
        return j;
    }

    std::string feedback(const GraphInstance& g, const Judgment& j) const {
        GcFeedback fb = render_feedback(g, j.report, variant_, adaptive_enabled(), oracle_budget_);
        if (fb.adaptive_example.empty()) return fb.text;
        return fb.text + "\n" + fb.adaptive_example;
    }

    std::string format_reminder() const { return gc_format_reminder(); }

    nlohmann::json serialize_problem(const GraphInstance& g) const {
        return nlohmann::json{{"task", gc_task_title(g)},
                              {"graph", prompt_graph_block(g)},
                              {"k", g.k()}};
    }

private:
    FeedbackVariant variant_ = FeedbackVariant::MLF;
    std::optional<bool> include_adaptive_;
    std::chrono::milliseconds oracle_budget_{2000};
};

} // namespace tandem
