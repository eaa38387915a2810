#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tandem/domain.hpp"
#include "tandem/gc_domain.hpp"
#include "tandem/memory.hpp"
#include "tandem/solver.hpp"

namespace tandem {

enum class RunMode { S1Only, S2Only, Pipeline };
enum class FallbackVariant { PO, BA, FH };
enum class RunStatus { SolvedByS1, SolvedByS2, Failed };

inline std::string to_string(RunMode m) {
    switch (m) {
        case RunMode::S1Only: return "s1only";
        case RunMode::S2Only: return "s2only";
        case RunMode::Pipeline: return "pipeline";
    }
    return "?";
}

inline RunMode run_mode_from_string(const std::string& s) {
    if (s == "s1only") return RunMode::S1Only;
    if (s == "s2only") return RunMode::S2Only;
    if (s == "pipeline") return RunMode::Pipeline;
    throw std::invalid_argument("unknown mode '" + s + "'");
}

inline std::string to_string(FallbackVariant v) {
    switch (v) {
        case FallbackVariant::PO: return "PO";
        case FallbackVariant::BA: return "BA";
        case FallbackVariant::FH: return "FH";
    }
    return "?";
}

inline FallbackVariant fallback_variant_from_string(const std::string& s) {
    if (s == "PO") return FallbackVariant::PO;
    if (s == "BA") return FallbackVariant::BA;
    if (s == "FH") return FallbackVariant::FH;
    throw std::invalid_argument("unknown fallback variant '" + s + "'");
}

inline std::string to_string(RunStatus s) {
    switch (s) {
        case RunStatus::SolvedByS1: return "solved_s1";
        case RunStatus::SolvedByS2: return "solved_s2";
        case RunStatus::Failed: return "failed";
    }
    return "?";
}

// Controller parameters. T bounds the S1 loop; theta is the acceptance
// threshold; the stagnation window (when set) fires the fallback early after
// that many consecutive attempts without strict score improvement.
struct RunConfig {
    int max_iterations = 1; // T
    double theta = 1.0;
    FeedbackVariant feedback_variant = FeedbackVariant::MLF;
    MemoryVariant memory_variant = MemoryVariant::MEM;
    FallbackVariant fallback_variant = FallbackVariant::PO;
    std::optional<int> stagnation_window; // >= 2 when set; unset = fallback only at T
    RunMode mode = RunMode::Pipeline;
    std::optional<BaRule> ba_rule; // domain default when unset
    int memory_limit = 1;          // worked examples per prompt
    bool memory_on_first_attempt = true;

    void validate() const {
        if (max_iterations < 1) throw std::invalid_argument("max_iterations must be >= 1");
        if (theta < 0.0 || theta > 1.0) throw std::invalid_argument("theta must be in [0,1]");
        if (stagnation_window && *stagnation_window < 2)
            throw std::invalid_argument("stagnation_window must be >= 2");
        if (memory_limit < 0) throw std::invalid_argument("memory_limit must be >= 0");
    }
};

struct AttemptRecord {
    int index = 0; // 1-based
    std::string prompt;
    std::string candidate_text;
    std::string canonical_text;
    double score = 0.0;
    std::string feedback_text; // empty when none was generated
    std::chrono::nanoseconds wall_time{0};   // true elapsed
    std::chrono::nanoseconds billed_time{0}; // deterministic accounting (see SolverReply)
};

struct FallbackRecord {
    FallbackVariant variant = FallbackVariant::PO;
    std::string prompt;
    std::string candidate_text;
    std::string canonical_text;
    double score = 0.0;
    std::chrono::nanoseconds wall_time{0};
    std::chrono::nanoseconds billed_time{0};
};

struct Transcript {
    std::vector<AttemptRecord> attempts;
    std::optional<FallbackRecord> fallback;
};

struct Outcome {
    RunStatus status = RunStatus::Failed;
    int solved_iteration = 0; // set for SolvedByS1
    std::string final_text;
    std::string final_canonical;
    std::chrono::nanoseconds total_time{0};
    Transcript transcript;
    std::string diagnostic; // set when an adapter error aborted the run

    bool solved() const { return status != RunStatus::Failed; }
};

// ---------------------------------------------------------------------------

// Highest score wins; equal scores resolve to the latest such attempt.
inline const AttemptRecord& select_best_attempt(const Transcript& tr) {
    if (tr.attempts.empty()) throw EmptyTranscriptError("transcript has no attempts");
    size_t best = 0;
    for (size_t i = 1; i < tr.attempts.size(); ++i)
        if (tr.attempts[i].score >= tr.attempts[best].score) best = i;
    return tr.attempts[best];
}

template <Domain D>
std::string build_fallback_prompt(const D& domain, FallbackVariant variant,
                                  const typename D::Instance& inst, const Transcript& tr,
                                  BaRule ba_rule) {
    std::string base = domain.task_block(inst);
    switch (variant) {
        case FallbackVariant::PO:
            return base;
        case FallbackVariant::BA: {
            if (tr.attempts.empty())
                throw EmptyTranscriptError("BA fallback requires at least one attempt");
            const AttemptRecord& pick =
                ba_rule == BaRule::Last ? tr.attempts.back() : select_best_attempt(tr);
            return base +
                   "\n\n### Prior Partial Solution\n"
                   "A previous attempt at this problem (it was not accepted):\n" +
                   pick.candidate_text;
        }
        case FallbackVariant::FH: {
            if (tr.attempts.empty())
                throw EmptyTranscriptError("FH fallback requires at least one attempt");
            std::string out = base;
            for (const auto& a : tr.attempts) {
                out += "\n\n### Attempt " + std::to_string(a.index) + "\n" + a.candidate_text;
                out += "\n\n### Feedback " + std::to_string(a.index) + "\n" + a.feedback_text;
            }
            return out;
        }
    }
    throw std::invalid_argument("unknown fallback variant");
}

// ---------------------------------------------------------------------------

// Builds the episodic record for a solved outcome. EEM keeps every attempt
// with the feedback it received; the entry that solved the instance carries
// the success marker.
template <Domain D>
MemoryRecord make_memory_record(const D& domain, const typename D::Instance& inst,
                                const Outcome& outcome, MemoryVariant variant) {
    if (!outcome.solved())
        throw std::logic_error("record_success requires an outcome that reached a solved state");
    MemoryRecord rec;
    rec.variant = variant;
    rec.domain = domain.name();
    rec.instance_size = domain.instance_size(inst);
    rec.problem_instance = domain.serialize_problem(inst);
    rec.correct_solution =
        outcome.final_canonical.empty() ? outcome.final_text : outcome.final_canonical;
    if (variant == MemoryVariant::EEM) {
        for (const auto& a : outcome.transcript.attempts) {
            bool solving =
                outcome.status == RunStatus::SolvedByS1 && a.index == outcome.solved_iteration;
            rec.interaction_history.push_back(
                {a.index, a.candidate_text, solving ? std::string("Correct") : a.feedback_text});
        }
        if (outcome.status == RunStatus::SolvedByS2 && outcome.transcript.fallback)
            rec.interaction_history.push_back(
                {static_cast<int>(outcome.transcript.attempts.size()) + 1,
                 outcome.transcript.fallback->candidate_text, "Correct"});
    }
    return rec;
}

// Builds the record for a solved outcome and appends it to the store.
template <Domain D>
MemoryRecord record_success(MemoryIO& store, const D& domain, const typename D::Instance& inst,
                            const Outcome& outcome, MemoryVariant variant) {
    MemoryRecord rec = make_memory_record(domain, inst, outcome, variant);
    store.record(rec);
    return rec;
}

// ---------------------------------------------------------------------------
// The evaluate / feed-back / retry / fall-back loop for one instance.
//
// Iterations run until the score reaches theta, the budget T is spent, or the
// score stops strictly improving for stagnation_window consecutive attempts.
// The fallback solver is called exactly once, with the configured context
// variant. Solver transport errors consume an attempt (score 0, format
// reminder); adapter errors abort with a diagnostic.

namespace detail {

inline std::chrono::nanoseconds transcript_total(const Transcript& tr) {
    std::chrono::nanoseconds total{0};
    for (const auto& a : tr.attempts) total += a.wall_time;
    if (tr.fallback) total += tr.fallback->wall_time;
    return total;
}

} // namespace detail

template <Domain D>
Outcome run_instance(const D& domain, const typename D::Instance& inst, Solver* s1, Solver* s2,
                     const RunConfig& cfg, MemoryIO* memory = nullptr) {
    cfg.validate();
    Outcome outcome;
    Transcript& tr = outcome.transcript;

    auto finish = [&]() -> Outcome& {
        outcome.total_time = detail::transcript_total(tr);
        if (outcome.solved() && memory) {
            try {
                record_success(*memory, domain, inst, outcome, cfg.memory_variant);
            } catch (const PersistenceError& e) {
                outcome.diagnostic = e.what();
            }
        }
        return outcome;
    };

    int non_improving = 0;
    if (cfg.mode != RunMode::S2Only) {
        if (!s1) throw std::invalid_argument("run_instance: S1 solver missing");
        for (int t = 1; t <= cfg.max_iterations; ++t) {
            AttemptRecord rec;
            rec.index = t;

            std::vector<MemoryRecord> examples;
            if (memory && cfg.memory_limit > 0 && (t > 1 || cfg.memory_on_first_attempt))
                examples = memory->retrieve(domain.name(), domain.instance_size(inst),
                                            cfg.memory_limit);
            AttemptView last_view;
            const AttemptView* last = nullptr;
            if (!tr.attempts.empty()) {
                last_view = {tr.attempts.back().candidate_text, tr.attempts.back().feedback_text};
                last = &last_view;
            }
            rec.prompt = domain.build_prompt(inst, examples, last);

            auto started = std::chrono::steady_clock::now();
            bool transport_failed = false;
            std::string reply_text;
            try {
                auto reply = s1->complete(rec.prompt);
                reply_text = reply.text;
                rec.wall_time = reply.wall_time;
                rec.billed_time = reply.billed_time;
            } catch (const SolverError&) {
                transport_failed = true;
                rec.wall_time = std::chrono::steady_clock::now() - started;
                rec.billed_time = is_mock_backend(s1->spec().backend)
                                      ? s1->spec().synthetic_latency
                                      : rec.wall_time;
                rec.score = 0.0;
                rec.feedback_text = domain.format_reminder();
            }

            if (!transport_failed) {
                typename D::Judgment judgment;
                try {
                    judgment = domain.judge(inst, reply_text);
                } catch (const std::exception& e) {
                    tr.attempts.push_back(rec);
                    outcome.status = RunStatus::Failed;
                    outcome.diagnostic = std::string("adapter error: ") + e.what();
                    return finish();
                }
                rec.candidate_text = reply_text;
                rec.canonical_text = judgment.canonical;
                rec.score = judgment.score;
                if (judgment.score >= cfg.theta) {
                    tr.attempts.push_back(rec); // solving attempt gets no feedback
                    outcome.status = RunStatus::SolvedByS1;
                    outcome.solved_iteration = t;
                    outcome.final_text = reply_text;
                    outcome.final_canonical = judgment.canonical;
                    return finish();
                }
                rec.feedback_text = domain.feedback(inst, judgment);
            }

            tr.attempts.push_back(rec);
            if (t >= 2) {
                double prev = tr.attempts[static_cast<size_t>(t) - 2].score;
                non_improving = rec.score <= prev ? non_improving + 1 : 0;
                if (cfg.stagnation_window && non_improving >= *cfg.stagnation_window) break;
            }
        }
        if (cfg.mode == RunMode::S1Only) {
            outcome.status = RunStatus::Failed;
            return finish();
        }
    }

    if (!s2) throw std::invalid_argument("run_instance: S2 solver missing");
    FallbackVariant variant =
        cfg.mode == RunMode::S2Only ? FallbackVariant::PO : cfg.fallback_variant;
    BaRule ba = cfg.ba_rule.value_or(domain.default_ba_rule());

    FallbackRecord fb;
    fb.variant = variant;
    fb.prompt = build_fallback_prompt(domain, variant, inst, tr, ba);

    auto started = std::chrono::steady_clock::now();
    try {
        auto reply = s2->complete(fb.prompt);
        fb.wall_time = reply.wall_time;
        fb.billed_time = reply.billed_time;
        typename D::Judgment judgment = domain.judge(inst, reply.text);
        fb.candidate_text = reply.text;
        fb.canonical_text = judgment.canonical;
        fb.score = judgment.score;
        if (judgment.score >= cfg.theta) {
            outcome.status = RunStatus::SolvedByS2;
            outcome.final_text = reply.text;
            outcome.final_canonical = judgment.canonical;
        } else {
            outcome.status = RunStatus::Failed;
        }
    } catch (const SolverError&) {
        fb.wall_time = std::chrono::steady_clock::now() - started;
        fb.billed_time = is_mock_backend(s2->spec().backend) ? s2->spec().synthetic_latency
                                                             : fb.wall_time;
        fb.score = 0.0;
        outcome.status = RunStatus::Failed;
    } catch (const std::exception& e) {
        fb.wall_time = std::chrono::steady_clock::now() - started;
        fb.billed_time = is_mock_backend(s2->spec().backend) ? s2->spec().synthetic_latency
                                                             : fb.wall_time;
        outcome.status = RunStatus::Failed;
        outcome.diagnostic = std::string("adapter error: ") + e.what();
    }
    tr.fallback = fb;
    return finish();
}

// Convenience overload constructing fresh solver backends from specs.
template <Domain D>
Outcome run_instance(const D& domain, const typename D::Instance& inst, const SolverSpec& s1,
                     const SolverSpec& s2, const RunConfig& cfg, MemoryIO* memory = nullptr) {
    auto a = make_solver(s1);
    auto b = make_solver(s2);
    return run_instance(domain, inst, a.get(), b.get(), cfg, memory);
}

// ---------------------------------------------------------------------------
// JSON-lines transcript record, one per instance. Serialized times are the
// billed millisecond values, so mock-backend runs write identical bytes
// across repeats.

inline std::int64_t to_ms(std::chrono::nanoseconds ns) {
    return std::chrono::duration_cast<std::chrono::milliseconds>(ns).count();
}

inline nlohmann::json transcript_to_json(const std::string& instance_id, const std::string& label,
                                         const Outcome& outcome) {
    nlohmann::json attempts = nlohmann::json::array();
    std::int64_t total_ms = 0;
    for (const auto& a : outcome.transcript.attempts) {
        auto ms = to_ms(a.billed_time);
        total_ms += ms;
        attempts.push_back({{"index", a.index},
                            {"score", a.score},
                            {"wall_time_ms", ms},
                            {"candidate", a.candidate_text},
                            {"feedback", a.feedback_text}});
    }
    nlohmann::json fallback;
    if (outcome.transcript.fallback) {
        const auto& f = *outcome.transcript.fallback;
        auto ms = to_ms(f.billed_time);
        total_ms += ms;
        fallback = {{"variant", to_string(f.variant)},
                    {"score", f.score},
                    {"wall_time_ms", ms},
                    {"candidate", f.candidate_text}};
    }
    nlohmann::json j{{"instance_id", instance_id},
                     {"config", label},
                     {"status", to_string(outcome.status)},
                     {"solved_iteration", outcome.solved_iteration},
                     {"total_time_ms", total_ms},
                     {"attempts", attempts},
                     {"fallback", fallback}};
    if (!outcome.diagnostic.empty()) j["diagnostic"] = outcome.diagnostic;
    return j;
}

} // namespace tandem
