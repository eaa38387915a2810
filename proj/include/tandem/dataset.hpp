#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tandem/debug_domain.hpp"
#include "tandem/graph.hpp"
#include "tandem/util.hpp"

namespace tandem {

struct GcDatasetEntry {
    std::string id;
    GraphInstance instance;
};

struct GcDataset {
    std::filesystem::path root;
    int k = 4;
    std::vector<GcDatasetEntry> entries;
};

struct GenerateParams {
    std::vector<int> sizes;
    int count_per_size = 100;
    double prob_lo = 0.1;
    double prob_hi = 0.9;
    int k = 4;
    std::uint64_t seed = 12345;
    std::chrono::milliseconds oracle_budget{10000};
    int max_redraws = 8;
};

struct GenerateReport {
    int total = 0;
    int solvable = 0;
    int unsolvable = 0;
    int redraws = 0;
};

namespace detail {

inline std::string instance_id(int size, int index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "g%02d_%03d", size, index);
    return buf;
}

} // namespace detail

// Draws count_per_size instances per size with per-instance edge probability
// uniform in [prob_lo, prob_hi], labels solvability with the exact oracle
// (oracle timeouts redraw the instance, bounded), and writes one DIMACS file
// per instance plus a JSON manifest.
inline GenerateReport generate_dataset(const GenerateParams& params,
                                       const std::filesystem::path& out_dir) {
    if (params.sizes.empty()) throw std::invalid_argument("generate: sizes must be nonempty");
    if (params.count_per_size < 1) throw std::invalid_argument("generate: count must be >= 1");
    if (params.prob_lo < 0.0 || params.prob_hi > 1.0 || params.prob_lo > params.prob_hi)
        throw std::invalid_argument("generate: bad edge probability range");
    if (params.k < 1) throw std::invalid_argument("generate: k must be >= 1");

    std::filesystem::create_directories(out_dir / "instances");
    std::mt19937_64 rng(params.seed);

    GenerateReport report;
    nlohmann::json manifest{{"domain", "graph-coloring"}, {"k", params.k}};
    nlohmann::json entries = nlohmann::json::array();

    for (int size : params.sizes) {
        for (int i = 0; i < params.count_per_size; ++i) {
            GraphInstance g;
            int tries = 0;
            while (true) {
                double p = params.prob_lo + canonical_u01(rng) * (params.prob_hi - params.prob_lo);
                std::uint64_t inst_seed = rng();
                try {
                    g = label_solvability(generate_instance(size, p, inst_seed, params.k),
                                          params.oracle_budget);
                    break;
                } catch (const OracleTimeoutError&) {
                    ++report.redraws;
                    if (++tries > params.max_redraws)
                        throw std::runtime_error("generate: oracle kept timing out at size " +
                                                 std::to_string(size));
                }
            }

            auto id = detail::instance_id(size, i);
            auto rel = std::filesystem::path("instances") / (id + ".col");
            std::ofstream out(out_dir / rel);
            out << emit_dimacs(g) << '\n';

            entries.push_back({{"id", id},
                               {"file", rel.generic_string()},
                               {"size", size},
                               {"edge_prob", g.meta().edge_prob},
                               {"seed", g.meta().seed},
                               {"k", params.k},
                               {"solvable", *g.meta().solvable}});
            ++report.total;
            (*g.meta().solvable ? report.solvable : report.unsolvable)++;
        }
    }

    manifest["instances"] = std::move(entries);
    std::ofstream mf(out_dir / "manifest.json");
    mf << manifest.dump(2) << '\n';
    if (!mf) throw std::runtime_error("generate: cannot write manifest");
    return report;
}

inline GcDataset load_gc_dataset(const std::filesystem::path& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) throw std::runtime_error("cannot open manifest " + manifest_path.string());
    nlohmann::json manifest = nlohmann::json::parse(in);
    if (manifest.value("domain", std::string{}) != "graph-coloring")
        throw std::runtime_error("manifest domain is not graph-coloring");

    GcDataset ds;
    ds.root = manifest_path.parent_path();
    ds.k = manifest.value("k", 4);
    for (const auto& e : manifest.at("instances")) {
        std::ifstream gf(ds.root / e.at("file").get<std::string>());
        if (!gf) throw std::runtime_error("missing instance file for " + e.at("id").get<std::string>());
        std::string text((std::istreambuf_iterator<char>(gf)), std::istreambuf_iterator<char>());
        GraphMeta meta;
        meta.edge_prob = e.value("edge_prob", 0.0);
        meta.seed = e.value("seed", 0ull);
        if (e.contains("solvable") && !e.at("solvable").is_null())
            meta.solvable = e.at("solvable").get<bool>();
        auto g = parse_dimacs(text).with_k(e.value("k", ds.k)).with_meta(meta);
        ds.entries.push_back({e.at("id").get<std::string>(), std::move(g)});
    }
    return ds;
}

// ---------------------------------------------------------------------------
// Debug datasets: a manifest naming one JSON document per instance.

struct CdDatasetEntry {
    std::string id;
    DebugInstance instance;
};

struct CdDataset {
    std::filesystem::path root;
    std::vector<CdDatasetEntry> entries;
};

inline CdDataset load_cd_dataset(const std::filesystem::path& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) throw std::runtime_error("cannot open manifest " + manifest_path.string());
    nlohmann::json manifest = nlohmann::json::parse(in);
    if (manifest.value("domain", std::string{}) != "code-debugging")
        throw std::runtime_error("manifest domain is not code-debugging");

    CdDataset ds;
    ds.root = manifest_path.parent_path();
    for (const auto& e : manifest.at("instances")) {
        auto inst = load_debug_instance(ds.root / e.at("file").get<std::string>());
        ds.entries.push_back({e.value("id", inst.slug), std::move(inst)});
    }
    return ds;
}

inline std::string dataset_domain(const std::filesystem::path& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) throw std::runtime_error("cannot open manifest " + manifest_path.string());
    return nlohmann::json::parse(in).value("domain", std::string{});
}

} // namespace tandem
