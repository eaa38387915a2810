#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tandem/domain.hpp"
#include "tandem/memory.hpp"
#include "tandem/subprocess.hpp"
#include "tandem/util.hpp"

namespace tandem {

struct DebugTest {
    std::string input;
    std::string expected_output;
};

struct DebugInstance {
    std::string slug;
    std::string description;
    std::string buggy_code;
    std::string language_tag; // "python" or "cpp" (aliases accepted)
    std::vector<DebugTest> tests;
};

inline DebugInstance debug_instance_from_json(const nlohmann::json& j) {
    DebugInstance inst;
    inst.slug = j.at("slug").get<std::string>();
    inst.description = j.at("description").get<std::string>();
    inst.buggy_code = j.at("buggy_code").get<std::string>();
    inst.language_tag = j.at("language_tag").get<std::string>();
    for (const auto& t : j.at("tests"))
        inst.tests.push_back({t.at("input").get<std::string>(),
                              t.at("expected_output").get<std::string>()});
    if (inst.tests.empty()) throw std::invalid_argument("debug instance '" + inst.slug + "' has no tests");
    return inst;
}

inline nlohmann::json to_json(const DebugInstance& inst) {
    nlohmann::json tests = nlohmann::json::array();
    for (const auto& t : inst.tests)
        tests.push_back({{"input", t.input}, {"expected_output", t.expected_output}});
    return {{"slug", inst.slug},
            {"description", inst.description},
            {"buggy_code", inst.buggy_code},
            {"language_tag", inst.language_tag},
            {"tests", tests}};
}

inline DebugInstance load_debug_instance(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return debug_instance_from_json(nlohmann::json::parse(in));
}

// ---------------------------------------------------------------------------
// Candidate code extraction.

struct CodeCandidate {
    std::optional<std::string> code; // absent = parse failure
    std::string raw_text;
};

namespace detail {

inline std::string strip_edge_newlines(std::string s) {
    while (!s.empty() && (s.front() == '\n' || s.front() == '\r')) s.erase(s.begin());
    while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
    return s;
}

} // namespace detail

// First <code>...</code> pair wins; a fenced block is the fallback.
inline CodeCandidate parse_code(const std::string& raw) {
    CodeCandidate cand;
    cand.raw_text = raw;

    auto open = raw.find("<code>");
    if (open != std::string::npos) {
        auto close = raw.find("</code>", open + 6);
        if (close != std::string::npos) {
            cand.code = detail::strip_edge_newlines(raw.substr(open + 6, close - (open + 6)));
            return cand;
        }
    }

    auto fence = raw.find("```");
    if (fence != std::string::npos) {
        auto body = raw.find('\n', fence); // skip the optional language tag
        if (body != std::string::npos) {
            auto end = raw.find("```", body);
            if (end != std::string::npos) {
                cand.code = detail::strip_edge_newlines(raw.substr(body + 1, end - body - 1));
                return cand;
            }
        }
    }
    return cand;
}

// ---------------------------------------------------------------------------
// Sandboxed test execution.

enum class FailureKind { WrongOutput, CompileError, RuntimeError, Timeout };

inline std::string to_string(FailureKind k) {
    switch (k) {
        case FailureKind::WrongOutput: return "WrongOutput";
        case FailureKind::CompileError: return "CompileError";
        case FailureKind::RuntimeError: return "RuntimeError";
        case FailureKind::Timeout: return "Timeout";
    }
    return "?";
}

struct FailingCase {
    std::string input;
    std::string expected_output;
    std::string actual_output;
    FailureKind kind = FailureKind::WrongOutput;
    std::string detail; // diagnostic line / signal / limit description
};

struct TestRunResult {
    int passed = 0;
    int total = 0;
    double pass_ratio = 0.0;
    std::optional<FailingCase> last_failing; // absent iff passed == total
};

struct RuntimeConfig {
    std::string python = "python3";
    std::string cxx = "g++";
};

// Per-line trailing-whitespace strip plus final-newline insensitivity.
inline std::string normalize_output(const std::string& s) {
    auto lines = split_lines(s);
    for (auto& line : lines) {
        size_t end = line.find_last_not_of(" \t\r");
        line = end == std::string::npos ? std::string{} : line.substr(0, end + 1);
    }
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    return join(lines, "\n");
}

namespace detail {

inline std::string first_nonempty_line(const std::string& s) {
    for (const auto& line : split_lines(s)) {
        auto t = trim(line);
        if (!t.empty()) return t;
    }
    return {};
}

inline void require_runtime(const std::string& exe) {
    if (exe.find('/') != std::string::npos) {
        if (::access(exe.c_str(), X_OK) == 0) return;
        throw RuntimeUnavailableError("runtime not executable: " + exe);
    }
    const char* path = ::getenv("PATH");
    if (path) {
        std::string p(path);
        size_t start = 0;
        while (start <= p.size()) {
            size_t colon = p.find(':', start);
            std::string dir = p.substr(start, colon == std::string::npos ? colon : colon - start);
            if (!dir.empty() && ::access((dir + "/" + exe).c_str(), X_OK) == 0) return;
            if (colon == std::string::npos) break;
            start = colon + 1;
        }
    }
    throw RuntimeUnavailableError("runtime not found on PATH: " + exe);
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw SandboxError("cannot write " + path.string());
    out << content;
    if (content.empty() || content.back() != '\n') out << '\n';
}

} // namespace detail

// Compiles (when needed) and executes the candidate against every test in
// suite order inside a throwaway directory. All tests run even after a
// failure so the pass ratio is exact; last_failing is the final failing test.
inline TestRunResult run_tests(const std::string& code, const DebugInstance& inst,
                               const RunLimits& limits = {}, const RuntimeConfig& runtime = {}) {
    if (inst.tests.empty())
        throw std::invalid_argument("instance '" + inst.slug + "' has an empty test suite");
    TestRunResult result;
    result.total = static_cast<int>(inst.tests.size());

    TempDir dir("tandem-judge");
    std::vector<std::string> run_argv;

    const std::string& tag = inst.language_tag;
    bool is_python = tag == "python" || tag == "python3";
    bool is_cpp = tag == "cpp" || tag == "c++";
    if (!is_python && !is_cpp)
        throw RuntimeUnavailableError("unsupported language_tag '" + tag + "'");

    if (is_python) {
        detail::require_runtime(runtime.python);
        detail::write_file(dir.path() / "main.py", code);
        run_argv = {runtime.python, "main.py"};
    } else {
        detail::require_runtime(runtime.cxx);
        detail::write_file(dir.path() / "main.cpp", code);
        RunLimits compile_limits{std::chrono::milliseconds(60000), 2ull << 30};
        auto cc = run_child({runtime.cxx, "-std=c++17", "-O1", "main.cpp", "-o", "prog"}, "",
                            dir.path(), compile_limits);
        if (cc.exit_code != 0) {
            const auto& last = inst.tests.back();
            result.pass_ratio = 0.0;
            result.last_failing = FailingCase{last.input, last.expected_output,
                                              "(compilation failed)", FailureKind::CompileError,
                                              detail::first_nonempty_line(cc.err)};
            return result;
        }
        run_argv = {"./prog"};
    }

    for (const auto& test : inst.tests) {
        auto r = run_child(run_argv, test.input, dir.path(), limits);
        FailingCase failing{test.input, test.expected_output, {}, FailureKind::WrongOutput, {}};
        bool failed = true;
        if (r.timed_out) {
            failing.kind = FailureKind::Timeout;
            failing.actual_output = normalize_output(r.out);
            failing.detail = std::to_string(limits.wall.count()) + " ms";
        } else if (r.exit_code != 0) {
            failing.kind = FailureKind::RuntimeError;
            failing.actual_output = normalize_output(r.out);
            failing.detail = detail::first_nonempty_line(r.err);
            if (failing.detail.empty())
                failing.detail = r.term_signal != 0
                                     ? "terminated by signal " + std::to_string(r.term_signal)
                                     : "exit code " + std::to_string(r.exit_code);
        } else if (normalize_output(r.out) != normalize_output(test.expected_output)) {
            failing.kind = FailureKind::WrongOutput;
            failing.actual_output = normalize_output(r.out);
        } else {
            failed = false;
        }
        if (failed)
            result.last_failing = failing;
        else
            ++result.passed;
    }
    result.pass_ratio = static_cast<double>(result.passed) / static_cast<double>(result.total);
    if (result.passed == result.total) result.last_failing.reset();
    return result;
}

// ---------------------------------------------------------------------------
// Feedback rendering, shaped after the judge's failure report.

inline std::string render_cd_feedback(const TestRunResult& result) {
    if (!result.last_failing || result.pass_ratio >= 1.0)
        throw std::logic_error("render_cd_feedback called on a fully passing result");
    const auto& f = *result.last_failing;

    std::string reason;
    switch (f.kind) {
        case FailureKind::WrongOutput:
            reason = "Your code's logic is incorrect.";
            break;
        case FailureKind::CompileError:
            reason = "Your code failed to compile (" + f.detail + ").";
            break;
        case FailureKind::RuntimeError:
            reason = "Your code raised a runtime error (" + f.detail + ").";
            break;
        case FailureKind::Timeout:
            reason = "Your code exceeded the per-test time limit of " + f.detail + ".";
            break;
    }

    std::string out;
    out += "Your code failed.\n";
    out += "- Failing Test Case Input: " + f.input + "\n";
    out += "- Expected Output: " + f.expected_output + "\n";
    out += "- Your Code's Output: " + f.actual_output + "\n";
    out += "- Reason: " + reason + "\n";
    out += "Please re-examine the code and provide a new, corrected version.";
    return out;
}

// ---------------------------------------------------------------------------
// Prompt construction.

inline constexpr const char* kCdTaskTemplate =
    "You are an expert programmer specializing in code debugging. Your task is to analyze "
    "and fix the provided code snippet based on the problem description. IMPORTANT: You "
    "MUST return the complete, corrected code enclosed within <code> and </code> tags. Do "
    "not include any other explanatory text in your response.\n"
    "\n"
    "### Problem Description\n"
    "{description}\n"
    "\n"
    "### Buggy Code\n"
    "```{language}\n"
    "{code}\n"
    "```\n";

inline constexpr const char* kCdRetryTemplate =
    "\n### Previous Attempt\n{attempt}\n\n### Feedback\n{feedback}\n";

inline std::string cd_task_body(const DebugInstance& inst) {
    return render_template(kCdTaskTemplate, {{"description", inst.description},
                                             {"language", inst.language_tag},
                                             {"code", inst.buggy_code}});
}

inline std::string build_cd_prompt(const DebugInstance& inst, const AttemptView* last) {
    std::string out = cd_task_body(inst);
    if (last)
        out += render_template(kCdRetryTemplate, {{"attempt", last->candidate_text},
                                                  {"feedback", last->feedback_text}});
    out += "\n### Correct Code:";
    return out;
}

// ---------------------------------------------------------------------------
// Domain adapter used by the controller.

class CdDomain {
public:
    using Instance = DebugInstance;

    struct Judgment {
        CodeCandidate candidate;
        std::optional<TestRunResult> result; // absent on parse failure
        double score = 0.0;
        std::string canonical;
    };

    CdDomain() = default;
    explicit CdDomain(RunLimits limits, RuntimeConfig runtime = {})
        : limits_(limits), runtime_(runtime) {}

    std::string name() const { return "code-debugging"; }
    int instance_size(const DebugInstance& inst) const {
        return static_cast<int>(split_lines(inst.buggy_code).size());
    }
    std::string task_block(const DebugInstance& inst) const { return build_cd_prompt(inst, nullptr); }
    BaRule default_ba_rule() const { return BaRule::Last; }
    const RunLimits& limits() const { return limits_; }

    std::string build_prompt(const DebugInstance& inst, const std::vector<MemoryRecord>& memory,
                             const AttemptView* last) const {
        std::string out;
        for (const auto& rec : memory) {
            out += "### Worked Example\n";
            out += "A previously fixed problem:\n";
            out += "\n";
            out += "Problem:\n" + rec.problem_instance.value("description", std::string{}) + "\n";
            out += "\n";
            out += worked_example_history(rec);
            out += "Correct code:\n<code>\n" + rec.correct_solution + "\n</code>\n";
            out += "\n";
        }
        out += build_cd_prompt(inst, last);
        return out;
    }

    Judgment judge(const DebugInstance& inst, const std::string& raw) const {
        Judgment j;
        j.candidate = parse_code(raw);
        if (!j.candidate.code) {
            j.score = 0.0;
            return j;
        }
        j.result = run_tests(*j.candidate.code, inst, limits_, runtime_);
        j.score = j.result->pass_ratio;
        j.canonical = *j.candidate.code;
        return j;
    }

    std::string feedback(const DebugInstance&, const Judgment& j) const {
        if (!j.result) return format_reminder();
        return render_cd_feedback(*j.result);
    }

    std::string format_reminder() const {
        return "Your previous response did not contain code. Return the complete, corrected "
               "code enclosed within <code> and </code> tags.";
    }

    nlohmann::json serialize_problem(const DebugInstance& inst) const {
        return {{"task", "Code Debugging"},
                {"slug", inst.slug},
                {"description", inst.description},
                {"buggy_code", inst.buggy_code},
                {"language_tag", inst.language_tag}};
    }

private:
    RunLimits limits_{};
    RuntimeConfig runtime_{};
};

} // namespace tandem
