#pragma once

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tandem/errors.hpp"
#include "tandem/util.hpp"

namespace tandem {

enum class MemoryVariant { MEM, EEM };

inline std::string to_string(MemoryVariant v) { return v == MemoryVariant::MEM ? "MEM" : "EEM"; }

inline MemoryVariant memory_variant_from_string(const std::string& s) {
    if (s == "MEM") return MemoryVariant::MEM;
    if (s == "EEM") return MemoryVariant::EEM;
    throw std::invalid_argument("unknown memory variant '" + s + "'");
}

struct MemoryInteraction {
    int attempt = 0; // 1-based
    std::string candidate_solution;
    std::string feedback_received;
};

// One episodic memory entry. MEM keeps only the problem and its correct
// solution; EEM additionally keeps the full attempt/feedback history, whose
// final entry carries the success marker.
struct MemoryRecord {
    MemoryVariant variant = MemoryVariant::MEM;
    std::string domain;
    int instance_size = 0;
    nlohmann::json problem_instance;
    std::string correct_solution;
    std::vector<MemoryInteraction> interaction_history; // empty for MEM
};

inline nlohmann::json to_json(const MemoryRecord& r) {
    nlohmann::json j{
        {"variant", to_string(r.variant)},
        {"domain", r.domain},
        {"instance_size", r.instance_size},
        {"problem_instance", r.problem_instance},
        {"correct_solution", r.correct_solution},
    };
    if (!r.interaction_history.empty()) {
        nlohmann::json hist = nlohmann::json::array();
        for (const auto& h : r.interaction_history)
            hist.push_back({{"attempt", h.attempt},
                            {"candidate_solution", h.candidate_solution},
                            {"feedback_received", h.feedback_received}});
        j["interaction_history"] = std::move(hist);
    }
    return j;
}

inline MemoryRecord memory_record_from_json(const nlohmann::json& j) {
    MemoryRecord r;
    r.variant = memory_variant_from_string(j.at("variant").get<std::string>());
    r.domain = j.value("domain", std::string{});
    r.instance_size = j.value("instance_size", 0);
    r.problem_instance = j.at("problem_instance");
    r.correct_solution = j.at("correct_solution").get<std::string>();
    if (j.contains("interaction_history"))
        for (const auto& h : j.at("interaction_history"))
            r.interaction_history.push_back({h.at("attempt").get<int>(),
                                             h.at("candidate_solution").get<std::string>(),
                                             h.at("feedback_received").get<std::string>()});
    return r;
}

inline constexpr const char* kWorkedHistoryEntryTemplate =
    "Attempt {index}:\n{candidate}\nFeedback:\n{feedback}\n\n";

// MEM records contribute just the problem and its solution to a prompt; EEM
// records also replay their attempt/feedback exchanges, so the two variants
// genuinely differ in how much context reaches the model.
inline std::string worked_example_history(const MemoryRecord& rec) {
    std::string out;
    for (const auto& h : rec.interaction_history) {
        if (h.feedback_received == "Correct") continue; // the solution line covers it
        out += render_template(kWorkedHistoryEntryTemplate,
                               {{"index", std::to_string(h.attempt)},
                                {"candidate", h.candidate_solution},
                                {"feedback", h.feedback_received}});
    }
    return out;
}

// Ranking used by every retrieval path: same-domain records ordered by
// instance-size proximity, ties broken by recency (newest first).
inline std::vector<MemoryRecord> rank_records(const std::vector<MemoryRecord>& records,
                                              const std::string& domain, int query_size, int limit) {
    if (limit <= 0) return {};
    std::vector<size_t> idx;
    for (size_t i = 0; i < records.size(); ++i)
        if (records[i].domain == domain) idx.push_back(i);
    std::stable_sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
        int da = std::abs(records[a].instance_size - query_size);
        int db = std::abs(records[b].instance_size - query_size);
        if (da != db) return da < db;
        return a > b; // newer first
    });
    std::vector<MemoryRecord> out;
    for (size_t i = 0; i < idx.size() && static_cast<int>(i) < limit; ++i)
        out.push_back(records[idx[i]]);
    return out;
}

// Retrieval/recording seam the controller talks to. Live runs use the
// persistent store; sweeps substitute a frozen snapshot (see sweep.hpp).
class MemoryIO {
public:
    virtual ~MemoryIO() = default;
    virtual std::vector<MemoryRecord> retrieve(const std::string& domain, int query_size,
                                               int limit) const = 0;
    virtual void record(MemoryRecord rec) = 0;
};

// Append-only episodic memory, one JSON-lines file per domain.
class MemoryStore : public MemoryIO {
public:
    MemoryStore() = default; // in-memory only

    explicit MemoryStore(std::filesystem::path dir) : dir_(std::move(dir)) {
        std::error_code ec;
        std::filesystem::create_directories(dir_, ec);
        if (ec) throw PersistenceError("cannot create memory directory " + dir_.string());
        for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
            if (entry.path().extension() != ".jsonl") continue;
            std::ifstream in(entry.path());
            std::string line;
            while (std::getline(in, line)) {
                if (line.empty()) continue;
                records_.push_back(memory_record_from_json(nlohmann::json::parse(line)));
            }
        }
    }

    std::vector<MemoryRecord> retrieve(const std::string& domain, int query_size,
                                       int limit) const override {
        std::lock_guard<std::mutex> lock(mu_);
        return rank_records(records_, domain, query_size, limit);
    }

    void record(MemoryRecord rec) override {
        std::lock_guard<std::mutex> lock(mu_);
        if (!dir_.empty()) {
            auto path = dir_ / (rec.domain + ".jsonl");
            std::ofstream out(path, std::ios::app);
            if (!out) throw PersistenceError("cannot open " + path.string() + " for append");
            out << to_json(rec).dump() << '\n';
            if (!out) throw PersistenceError("write failed on " + path.string());
        }
        records_.push_back(std::move(rec));
    }

    size_t size() const {
        std::lock_guard<std::mutex> lock(mu_);
        return records_.size();
    }

    std::vector<MemoryRecord> all() const {
        std::lock_guard<std::mutex> lock(mu_);
        return records_;
    }

private:
    std::filesystem::path dir_;
    mutable std::mutex mu_;
    std::vector<MemoryRecord> records_;
};

} // namespace tandem
