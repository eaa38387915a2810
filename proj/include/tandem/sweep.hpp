#pragma once

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "tandem/controller.hpp"
#include "tandem/dataset.hpp"
#include "tandem/debug_domain.hpp"

namespace tandem {

struct SweepConfigEntry {
    std::string label;
    RunConfig run;
    SolverSpec s1;
    SolverSpec s2;
};

struct SweepSpec {
    std::filesystem::path dataset;   // manifest path
    std::filesystem::path out_dir;
    std::filesystem::path memory_dir; // optional: seeds the retrieval snapshot
    int workers = 1;
    std::string filter = "all"; // all | solvable | unsolvable (coloring datasets)
    RunLimits judge_limits{};   // per-test sandbox limits (debugging datasets)
    std::vector<SweepConfigEntry> configurations;

    void validate() const {
        if (workers < 1) throw std::invalid_argument("sweep: workers must be >= 1");
        if (configurations.empty()) throw std::invalid_argument("sweep: no configurations");
        std::set<std::string> labels;
        for (const auto& c : configurations) {
            if (c.label.empty() || c.label.find(',') != std::string::npos)
                throw std::invalid_argument("sweep: labels must be nonempty and comma-free");
            if (!labels.insert(c.label).second)
                throw std::invalid_argument("sweep: duplicate label '" + c.label + "'");
            c.run.validate();
        }
        if (filter != "all" && filter != "solvable" && filter != "unsolvable")
            throw std::invalid_argument("sweep: bad filter '" + filter + "'");
    }
};

// ---------------------------------------------------------------------------
// Spec-file (JSON) parsing.

inline DecodingParams decoding_from_json(const nlohmann::json& j) {
    DecodingParams d;
    d.seed = j.value("seed", d.seed);
    d.temperature = j.value("temperature", d.temperature);
    d.top_k = j.value("top_k", d.top_k);
    d.top_p = j.value("top_p", d.top_p);
    return d;
}

inline SolverSpec solver_spec_from_json(const nlohmann::json& j,
                                        const std::filesystem::path& base) {
    SolverSpec s;
    s.backend = solver_backend_from_string(j.value("backend", std::string("replay")));
    s.model_name = j.value("model", std::string{});
    if (j.contains("decoding")) s.decoding = decoding_from_json(j.at("decoding"));
    s.timeout = std::chrono::milliseconds(j.value("timeout_ms", 300000));
    s.synthetic_latency = std::chrono::milliseconds(j.value("synthetic_latency_ms", 0));
    s.url = j.value("url", s.url);
    s.model_field = j.value("model_field", s.model_field);
    s.prompt_field = j.value("prompt_field", s.prompt_field);
    s.options_field = j.value("options_field", s.options_field);
    s.response_field = j.value("response_field", s.response_field);
    if (j.contains("fixture")) {
        auto p = std::filesystem::path(j.at("fixture").get<std::string>());
        s.fixture_path = (p.is_absolute() ? p : base / p).string();
    }
    s.fix_prob = j.value("fix_prob", s.fix_prob);
    s.synthetic_seed = j.value("synthetic_seed", s.synthetic_seed);
    return s;
}

inline RunConfig run_config_from_json(const nlohmann::json& j) {
    RunConfig cfg;
    cfg.max_iterations = j.value("T", 1);
    cfg.theta = j.value("theta", 1.0);
    cfg.feedback_variant = feedback_variant_from_string(j.value("feedback", std::string("MLF")));
    cfg.memory_variant = memory_variant_from_string(j.value("memory", std::string("MEM")));
    cfg.fallback_variant = fallback_variant_from_string(j.value("fallback", std::string("PO")));
    if (j.contains("stagnation_window") && !j.at("stagnation_window").is_null())
        cfg.stagnation_window = j.at("stagnation_window").get<int>();
    cfg.mode = run_mode_from_string(j.value("mode", std::string("pipeline")));
    if (j.contains("ba_rule")) cfg.ba_rule = ba_rule_from_string(j.at("ba_rule").get<std::string>());
    cfg.memory_limit = j.value("memory_limit", 1);
    cfg.memory_on_first_attempt = j.value("memory_on_first_attempt", true);
    return cfg;
}

inline SweepSpec sweep_spec_from_json(const nlohmann::json& j, const std::filesystem::path& base) {
    SweepSpec spec;
    auto resolve = [&](const std::string& p) {
        std::filesystem::path path(p);
        return path.is_absolute() ? path : base / path;
    };
    spec.dataset = resolve(j.at("dataset").get<std::string>());
    spec.out_dir = resolve(j.at("out_dir").get<std::string>());
    if (j.contains("memory_dir")) spec.memory_dir = resolve(j.at("memory_dir").get<std::string>());
    spec.workers = j.value("workers", 1);
    spec.filter = j.value("filter", std::string("all"));
    if (j.contains("judge_wall_ms"))
        spec.judge_limits.wall = std::chrono::milliseconds(j.at("judge_wall_ms").get<int>());
    for (const auto& c : j.at("configurations")) {
        SweepConfigEntry entry;
        entry.label = c.at("label").get<std::string>();
        entry.run = run_config_from_json(c);
        entry.s1 = solver_spec_from_json(c.value("s1", nlohmann::json::object()), base);
        entry.s2 = solver_spec_from_json(c.value("s2", nlohmann::json::object()), base);
        spec.configurations.push_back(std::move(entry));
    }
    spec.validate();
    return spec;
}

inline SweepSpec load_sweep_spec(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open sweep spec " + path.string());
    return sweep_spec_from_json(nlohmann::json::parse(in), path.parent_path());
}

// ---------------------------------------------------------------------------
// Aggregation.

struct ReportRow {
    std::string label;
    int instances = 0;
    int solved = 0;
    double success_rate = 0.0; // percent
    double mean_time_s = 0.0;
    double mean_iterations = 0.0;
    double fallback_rate = 0.0; // percent
};

inline ReportRow aggregate_rows(const std::string& label,
                                const std::vector<nlohmann::json>& records) {
    ReportRow row;
    row.label = label;
    row.instances = static_cast<int>(records.size());
    if (records.empty()) return row;
    double time_ms = 0.0, iterations = 0.0;
    int fallbacks = 0;
    for (const auto& r : records) {
        auto status = r.at("status").get<std::string>();
        if (status == "solved_s1" || status == "solved_s2") ++row.solved;
        time_ms += r.at("total_time_ms").get<double>();
        iterations += static_cast<double>(r.at("attempts").size());
        if (!r.at("fallback").is_null()) ++fallbacks;
    }
    auto n = static_cast<double>(row.instances);
    row.success_rate = 100.0 * row.solved / n;
    row.mean_time_s = time_ms / n / 1000.0;
    row.mean_iterations = iterations / n;
    row.fallback_rate = 100.0 * fallbacks / n;
    return row;
}

inline std::string rows_to_csv(const std::vector<ReportRow>& rows) {
    std::string out = "label,instances,solved,success_rate,mean_time_s,mean_iterations,fallback_rate\n";
    char buf[256];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%s,%d,%d,%.2f,%.4f,%.3f,%.2f\n", r.label.c_str(),
                      r.instances, r.solved, r.success_rate, r.mean_time_s, r.mean_iterations,
                      r.fallback_rate);
        out += buf;
    }
    return out;
}

inline std::vector<ReportRow> parse_report_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open csv " + path.string());
    std::vector<ReportRow> rows;
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (header) { header = false; continue; }
        if (trim(line).empty()) continue;
        std::vector<std::string> cols;
        size_t start = 0;
        while (start <= line.size()) {
            auto comma = line.find(',', start);
            cols.push_back(line.substr(start, comma == std::string::npos ? comma : comma - start));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (cols.size() != 7) throw std::runtime_error("bad csv row: " + line);
        ReportRow r;
        r.label = cols[0];
        r.instances = std::stoi(cols[1]);
        r.solved = std::stoi(cols[2]);
        r.success_rate = std::stod(cols[3]);
        r.mean_time_s = std::stod(cols[4]);
        r.mean_iterations = std::stod(cols[5]);
        r.fallback_rate = std::stod(cols[6]);
        rows.push_back(std::move(r));
    }
    return rows;
}

// Recomputes rows from raw transcript files; the CSV is derived, never
// authoritative.
inline std::vector<ReportRow> report_from_transcripts(
    const std::vector<std::filesystem::path>& paths) {
    std::vector<std::string> order;
    std::map<std::string, std::vector<nlohmann::json>> by_label;
    for (const auto& path : paths) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open transcripts " + path.string());
        std::string line;
        while (std::getline(in, line)) {
            if (trim(line).empty()) continue;
            auto j = nlohmann::json::parse(line);
            auto label = j.at("config").get<std::string>();
            if (!by_label.count(label)) order.push_back(label);
            by_label[label].push_back(std::move(j));
        }
    }
    std::vector<ReportRow> rows;
    for (const auto& label : order) rows.push_back(aggregate_rows(label, by_label[label]));
    return rows;
}

// ---------------------------------------------------------------------------
// Sweep execution.
//
// Instances run in parallel workers, sequentially within an instance. Memory
// retrieval reads a snapshot frozen at config start, and records produced
// during the run are flushed in dataset order afterwards, so results are
// invariant to the worker count.

namespace detail {

class SnapshotMemory : public MemoryIO {
public:
    explicit SnapshotMemory(const std::vector<MemoryRecord>* snapshot) : snapshot_(snapshot) {}

    std::vector<MemoryRecord> retrieve(const std::string& domain, int query_size,
                                       int limit) const override {
        return rank_records(*snapshot_, domain, query_size, limit);
    }

    void record(MemoryRecord rec) override { produced_.push_back(std::move(rec)); }

    std::vector<MemoryRecord> take_produced() { return std::move(produced_); }

private:
    const std::vector<MemoryRecord>* snapshot_;
    std::vector<MemoryRecord> produced_;
};

template <Domain D, typename Entries>
ReportRow run_config(const D& domain, const Entries& entries, const SweepConfigEntry& config,
                     const std::vector<MemoryRecord>& snapshot,
                     const std::filesystem::path& out_dir, int workers) {
    auto s1 = make_solver(config.s1);
    auto s2 = make_solver(config.s2);

    size_t n = entries.size();
    std::vector<nlohmann::json> records(n);
    std::vector<std::vector<MemoryRecord>> produced(n);

    std::atomic<size_t> next{0};
    auto worker = [&] {
        while (true) {
            size_t i = next.fetch_add(1);
            if (i >= n) break;
            SnapshotMemory memory(&snapshot);
            nlohmann::json record;
            try {
                auto outcome = run_instance(domain, entries[i].instance, s1.get(), s2.get(),
                                            config.run, &memory);
                record = transcript_to_json(entries[i].id, config.label, outcome);
            } catch (const std::exception& e) {
                Outcome failed;
                failed.diagnostic = e.what();
                record = transcript_to_json(entries[i].id, config.label, failed);
            }
            records[i] = std::move(record);
            produced[i] = memory.take_produced();
        }
    };
    std::vector<std::thread> pool;
    int nworkers = std::max(1, std::min<int>(workers, static_cast<int>(n ? n : 1)));
    for (int w = 0; w < nworkers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    std::ofstream transcripts(out_dir / (config.label + ".jsonl"));
    for (const auto& r : records) transcripts << r.dump() << '\n';
    std::ofstream memfile(out_dir / (config.label + ".memory.jsonl"));
    for (const auto& per_instance : produced)
        for (const auto& rec : per_instance) memfile << to_json(rec).dump() << '\n';

    return aggregate_rows(config.label, records);
}

} // namespace detail

inline std::vector<ReportRow> run_sweep(const SweepSpec& spec) {
    spec.validate();
    std::filesystem::create_directories(spec.out_dir);

    std::vector<MemoryRecord> snapshot;
    if (!spec.memory_dir.empty()) snapshot = MemoryStore(spec.memory_dir).all();

    auto domain_name = dataset_domain(spec.dataset);
    std::vector<ReportRow> rows;

    if (domain_name == "graph-coloring") {
        auto ds = load_gc_dataset(spec.dataset);
        std::vector<GcDatasetEntry> entries;
        for (auto& e : ds.entries) {
            if (spec.filter == "solvable" && e.instance.meta().solvable != true) continue;
            if (spec.filter == "unsolvable" && e.instance.meta().solvable != false) continue;
            entries.push_back(std::move(e));
        }
        for (const auto& config : spec.configurations) {
            GcDomain domain(config.run.feedback_variant);
            rows.push_back(detail::run_config(domain, entries, config, snapshot, spec.out_dir,
                                              spec.workers));
        }
    } else if (domain_name == "code-debugging") {
        auto ds = load_cd_dataset(spec.dataset);
        for (const auto& config : spec.configurations) {
            CdDomain domain(spec.judge_limits);
            rows.push_back(detail::run_config(domain, ds.entries, config, snapshot, spec.out_dir,
                                              spec.workers));
        }
    } else {
        throw std::runtime_error("unknown dataset domain '" + domain_name + "'");
    }

    std::ofstream csv(spec.out_dir / "report.csv");
    csv << rows_to_csv(rows);
    return rows;
}

} // namespace tandem
