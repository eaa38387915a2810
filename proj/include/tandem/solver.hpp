#pragma once

#include <chrono>
#include <deque>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <regex>
#include <string>
#include <unordered_map>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "tandem/errors.hpp"
#include "tandem/gc_domain.hpp"
#include "tandem/graph.hpp"
#include "tandem/util.hpp"

namespace tandem {

struct DecodingParams {
    std::int64_t seed = 12345;
    double temperature = 0.0;
    int top_k = 1;
    double top_p = 1.0;
};

enum class SolverBackend { HttpModel, ScriptedReplay, SyntheticColorer };

inline std::string to_string(SolverBackend b) {
    switch (b) {
        case SolverBackend::HttpModel: return "http";
        case SolverBackend::ScriptedReplay: return "replay";
        case SolverBackend::SyntheticColorer: return "synthetic";
    }
    return "?";
}

inline SolverBackend solver_backend_from_string(const std::string& s) {
    if (s == "http") return SolverBackend::HttpModel;
    if (s == "replay") return SolverBackend::ScriptedReplay;
    if (s == "synthetic") return SolverBackend::SyntheticColorer;
    throw std::invalid_argument("unknown solver backend '" + s + "'");
}

struct FixtureEntry {
    std::string prompt_key; // 16-hex task key, or "*" for any prompt
    std::string response_text;
};

struct SolverSpec {
    SolverBackend backend = SolverBackend::ScriptedReplay;
    std::string model_name;
    DecodingParams decoding;
    std::chrono::milliseconds timeout{300000};
    std::chrono::milliseconds synthetic_latency{0}; // added to reported wall time

    // HttpModel: endpoint and payload dialect (defaults follow the common
    // local-inference `/api/generate` shape)
    std::string url = "http://127.0.0.1:11434/api/generate";
    std::string model_field = "model";
    std::string prompt_field = "prompt";
    std::string options_field = "options";
    std::string response_field = "response"; // dot path into the reply JSON

    // ScriptedReplay
    std::string fixture_path;
    std::vector<FixtureEntry> fixture;

    // SyntheticColorer
    double fix_prob = 1.0;
    std::uint64_t synthetic_seed = 1;
};

struct SolverReply {
    std::string text;
    std::chrono::nanoseconds wall_time{0};   // true elapsed (plus synthetic latency)
    std::chrono::nanoseconds billed_time{0}; // what transcripts account: measured for live
                                             // endpoints, exactly the configured latency for
                                             // mocks (keeps sweep outputs byte-reproducible)
    bool truncated = false;
};

inline bool is_mock_backend(SolverBackend b) { return b != SolverBackend::HttpModel; }

// ---------------------------------------------------------------------------
// Prompt identity: the hash that keys replay fixtures and synthetic state.
// The hashed region identifies the problem instance and is invariant across
// retries, memory examples, and fallback prompt variants.

inline std::string prompt_task_section(const std::string& prompt) {
    auto pos = prompt.find("### Input Graph");
    if (pos != std::string::npos) {
        auto end = prompt.find("\n### ", pos + 1);
        return prompt.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
    }
    pos = prompt.find("### Problem Description");
    if (pos != std::string::npos) {
        auto end = std::min(prompt.find("\n### Previous Attempt", pos),
                            prompt.find("\n### Correct Code:", pos));
        return prompt.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
    }
    return prompt;
}

inline std::string prompt_task_key(const std::string& prompt) {
    return hex64(fnv1a64(prompt_task_section(prompt)));
}

// ---------------------------------------------------------------------------

class Solver {
public:
    explicit Solver(SolverSpec spec) : spec_(std::move(spec)) {}
    virtual ~Solver() = default;

    const SolverSpec& spec() const { return spec_; }

    // Reported wall time is the measured elapsed time plus any configured
    // synthetic latency (the latter lets mock sweeps exercise the time axis).
    SolverReply complete(const std::string& prompt) {
        auto start = std::chrono::steady_clock::now();
        SolverReply reply = complete_impl(prompt);
        reply.wall_time = std::chrono::steady_clock::now() - start + spec_.synthetic_latency;
        reply.billed_time =
            is_mock_backend(spec_.backend) ? spec_.synthetic_latency : reply.wall_time;
        return reply;
    }

protected:
    virtual SolverReply complete_impl(const std::string& prompt) = 0;

private:
    SolverSpec spec_;
};

// ---------------------------------------------------------------------------
// Remote inference endpoint speaking a JSON completion dialect.

class HttpModelSolver : public Solver {
public:
    explicit HttpModelSolver(SolverSpec spec) : Solver(std::move(spec)) {}

protected:
    SolverReply complete_impl(const std::string& prompt) override {
        const auto& s = spec();
        auto [base, path] = split_url(s.url);

        httplib::Client client(base);
        auto secs = std::chrono::duration_cast<std::chrono::seconds>(s.timeout);
        client.set_connection_timeout(static_cast<time_t>(std::min<long long>(secs.count(), 30)), 0);
        client.set_read_timeout(static_cast<time_t>(secs.count()), 0);
        client.set_write_timeout(static_cast<time_t>(secs.count()), 0);

        nlohmann::json body{
            {s.model_field, s.model_name},
            {s.prompt_field, prompt},
            {"stream", false},
            {s.options_field,
             {{"seed", s.decoding.seed},
              {"temperature", s.decoding.temperature},
              {"top_k", s.decoding.top_k},
              {"top_p", s.decoding.top_p}}},
        };

        auto res = client.Post(path, body.dump(), "application/json");
        if (!res) {
            auto err = res.error();
            if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read ||
                err == httplib::Error::Write)
                throw SolverError(SolverErrc::Timeout, "request to " + s.url + " timed out");
            throw SolverError(SolverErrc::Transport,
                              "request to " + s.url + " failed: " + httplib::to_string(err));
        }
        if (res->status != 200)
            throw SolverError(SolverErrc::Transport,
                              "endpoint returned HTTP " + std::to_string(res->status));

        nlohmann::json j;
        try {
            j = nlohmann::json::parse(res->body);
        } catch (const std::exception& e) {
            throw SolverError(SolverErrc::Transport, std::string("bad JSON reply: ") + e.what());
        }

        SolverReply reply;
        reply.text = extract_path(j, s.response_field);
        reply.truncated = j.value("done_reason", std::string{}) == "length";
        return reply;
    }

private:
    static std::pair<std::string, std::string> split_url(const std::string& url) {
        auto scheme = url.find("://");
        if (scheme == std::string::npos)
            throw SolverError(SolverErrc::Transport, "bad endpoint url '" + url + "'");
        auto slash = url.find('/', scheme + 3);
        if (slash == std::string::npos) return {url, "/"};
        return {url.substr(0, slash), url.substr(slash)};
    }

    static std::string extract_path(const nlohmann::json& j, const std::string& dot_path) {
        const nlohmann::json* cur = &j;
        size_t start = 0;
        while (start <= dot_path.size()) {
            auto dot = dot_path.find('.', start);
            std::string part = dot_path.substr(start, dot == std::string::npos ? dot : dot - start);
            if (cur->is_array()) {
                size_t idx = static_cast<size_t>(std::stoul(part));
                if (idx >= cur->size())
                    throw SolverError(SolverErrc::Transport, "response path index out of range");
                cur = &(*cur)[idx];
            } else if (cur->contains(part)) {
                cur = &(*cur)[part];
            } else {
                throw SolverError(SolverErrc::Transport,
                                  "response JSON lacks field '" + part + "'");
            }
            if (dot == std::string::npos) break;
            start = dot + 1;
        }
        if (!cur->is_string())
            throw SolverError(SolverErrc::Transport, "response field is not a string");
        return cur->get<std::string>();
    }
};

// ---------------------------------------------------------------------------
// Deterministic replay of canned responses, one FIFO queue per task key.

inline std::vector<FixtureEntry> load_fixture_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw SolverError(SolverErrc::Transport, "cannot open fixture " + path.string());
    nlohmann::json j = nlohmann::json::parse(in);
    std::vector<FixtureEntry> out;
    for (const auto& e : j)
        out.push_back({e.value("prompt_key", std::string("*")),
                       e.at("response_text").get<std::string>()});
    return out;
}

class ScriptedReplaySolver : public Solver {
public:
    explicit ScriptedReplaySolver(SolverSpec spec) : Solver(std::move(spec)) {
        auto entries = this->spec().fixture;
        if (!this->spec().fixture_path.empty()) {
            auto from_file = load_fixture_file(this->spec().fixture_path);
            entries.insert(entries.end(), from_file.begin(), from_file.end());
        }
        for (auto& e : entries) queues_[e.prompt_key].push_back(std::move(e.response_text));
    }

protected:
    SolverReply complete_impl(const std::string& prompt) override {
        std::lock_guard<std::mutex> lock(mu_);
        auto key = prompt_task_key(prompt);
        auto it = queues_.find(key);
        if (it == queues_.end() || it->second.empty()) it = queues_.find("*");
        if (it == queues_.end() || it->second.empty())
            throw SolverError(SolverErrc::FixtureExhausted,
                              "no scripted response left for task key " + key);
        SolverReply reply;
        reply.text = std::move(it->second.front());
        it->second.pop_front();
        return reply;
    }

private:
    std::mutex mu_;
    std::map<std::string, std::deque<std::string>> queues_;
};

// ---------------------------------------------------------------------------
// LLM-free coloring agent. First call: a seeded random full assignment.
// Retries: each fed-back conflict vertex is independently recolored (with
// probability fix_prob) to the smallest in-range color unused by any
// neighbor, visiting conflict vertices in instance order so later repairs see
// earlier ones. Vertices with no free color keep their color.

inline std::map<std::string, int> synthetic_coloring_step(
    const GraphInstance& g, const std::optional<std::map<std::string, int>>& previous,
    const std::vector<std::string>& conflict_vertices, double fix_prob, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    int k = std::max(1, g.k());

    if (!previous) {
        std::map<std::string, int> fresh;
        for (const auto& v : g.vertices())
            fresh[v] = 1 + static_cast<int>(rng() % static_cast<unsigned>(k));
        return fresh;
    }

    std::map<std::string, int> next = *previous;
    std::vector<std::string> ordered;
    for (const auto& v : g.vertices())
        for (const auto& cv : conflict_vertices)
            if (cv == v) { ordered.push_back(v); break; }

    for (const auto& v : ordered) {
        if (canonical_u01(rng) >= fix_prob) continue;
        std::vector<bool> used(static_cast<size_t>(k) + 1, false);
        for (int nb : g.neighbors(g.vertex_index(v))) {
            auto it = next.find(g.vertex_name(nb));
            if (it != next.end() && it->second >= 1 && it->second <= k)
                used[static_cast<size_t>(it->second)] = true;
        }
        for (int c = 1; c <= k; ++c)
            if (!used[static_cast<size_t>(c)]) { next[v] = c; break; }
    }
    return next;
}

struct SyntheticProfile {
    double fix_prob = 1.0;
    std::uint64_t seed = 1;
};

// Direct entry point mirroring one solver turn: previous attempt plus the
// feedback it received in, rendered reply out.
inline std::string synthetic_colorer(const GraphInstance& g,
                                     const std::optional<ColoringCandidate>& previous,
                                     const std::optional<GcFeedback>& feedback,
                                     const SyntheticProfile& profile) {
    std::optional<std::map<std::string, int>> prev;
    if (previous && previous->kind == CandidateKind::Assignment) prev = previous->assignment;
    std::vector<std::string> conflicts;
    if (feedback) conflicts = feedback->report.conflict_vertices;
    return render_assignment_lines(
        synthetic_coloring_step(g, prev, conflicts, profile.fix_prob, profile.seed));
}

class SyntheticColorerSolver : public Solver {
public:
    explicit SyntheticColorerSolver(SolverSpec spec) : Solver(std::move(spec)) {}

protected:
    SolverReply complete_impl(const std::string& prompt) override {
        std::lock_guard<std::mutex> lock(mu_);
        auto key = prompt_task_key(prompt);
        auto& st = states_[key];
        if (st.calls == 0) st.graph = graph_from_prompt(prompt);

        std::optional<std::map<std::string, int>> previous;
        if (st.calls > 0) previous = st.last;
        auto conflicts = conflict_vertices_from_prompt(prompt);

        std::uint64_t step_seed = mix_seed(mix_seed(spec().synthetic_seed, fnv1a64(key)), st.calls);
        st.last = synthetic_coloring_step(st.graph, previous, conflicts, spec().fix_prob, step_seed);
        ++st.calls;

        SolverReply reply;
        reply.text = render_assignment_lines(st.last);
        return reply;
    }

private:
    struct KeyState {
        GraphInstance graph;
        std::map<std::string, int> last;
        std::uint64_t calls = 0;
    };

    static GraphInstance graph_from_prompt(const std::string& prompt) {
        auto pos = prompt.find("### Input Graph");
        if (pos == std::string::npos)
            throw SolverError(SolverErrc::Transport, "synthetic colorer got a non-coloring prompt");
        auto body_start = prompt.find('\n', pos);
        auto end = prompt.find("\n### ", pos + 1);
        std::string block = prompt.substr(body_start + 1,
                                          end == std::string::npos ? std::string::npos
                                                                   : end - body_start - 1);
        auto g = parse_dimacs(block);

        int k = 4;
        static const std::regex range_re(R"(inclusive range \[1, (\d+)\])");
        std::smatch m;
        if (std::regex_search(prompt, m, range_re)) k = std::stoi(m[1].str());
        return g.with_k(k);
    }

    // Conflict vertices named by the latest feedback block, in either the
    // numbered multi-line or the single-line pair rendering.
    static std::vector<std::string> conflict_vertices_from_prompt(const std::string& prompt) {
        auto pos = prompt.rfind("### Feedback");
        if (pos == std::string::npos) return {};
        std::string fb = prompt.substr(pos);

        std::vector<std::string> out;
        auto push_unique = [&](const std::string& v) {
            for (const auto& seen : out)
                if (seen == v) return;
            out.push_back(v);
        };
        static const std::regex mlf_re(R"(vertices (\w+) and (\w+) share color)");
        for (auto it = std::sregex_iterator(fb.begin(), fb.end(), mlf_re);
             it != std::sregex_iterator(); ++it) {
            push_unique((*it)[1].str());
            push_unique((*it)[2].str());
        }
        static const std::regex slf_re(R"(\((\w+),(\w+)\))");
        for (auto it = std::sregex_iterator(fb.begin(), fb.end(), slf_re);
             it != std::sregex_iterator(); ++it) {
            push_unique((*it)[1].str());
            push_unique((*it)[2].str());
        }
        return out;
    }

    std::mutex mu_;
    std::unordered_map<std::string, KeyState> states_;
};

// ---------------------------------------------------------------------------

inline std::unique_ptr<Solver> make_solver(const SolverSpec& spec) {
    switch (spec.backend) {
        case SolverBackend::HttpModel: return std::make_unique<HttpModelSolver>(spec);
        case SolverBackend::ScriptedReplay: return std::make_unique<ScriptedReplaySolver>(spec);
        case SolverBackend::SyntheticColorer: return std::make_unique<SyntheticColorerSolver>(spec);
    }
    throw std::invalid_argument("unknown solver backend");
}

} // namespace tandem
