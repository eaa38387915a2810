#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <random>

#include "tandem/memory.hpp"

using namespace tandem;

namespace {

MemoryRecord sample_record(MemoryVariant variant, const std::string& domain, int size,
                           int history_len = 0) {
    MemoryRecord r;
    r.variant = variant;
    r.domain = domain;
    r.instance_size = size;
    r.problem_instance = {{"task", "t"}, {"graph", "p edges 2 1\n a b"}, {"k", 2}};
    r.correct_solution = "(a 1)\n(b 2)";
    for (int i = 1; i <= history_len; ++i)
        r.interaction_history.push_back(
            {i, "candidate " + std::to_string(i),
             i == history_len ? std::string("Correct") : "That was incorrect."});
    return r;
}

std::filesystem::path fresh_dir(const std::string& tag) {
    auto dir = std::filesystem::temp_directory_path() /
               ("tandem-memtest-" + tag + "-" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir);
    return dir;
}

} // namespace

TEST_CASE("[memory] records serialize with the exact field names") {
    auto rec = sample_record(MemoryVariant::EEM, "graph-coloring", 10, 2);
    auto j = to_json(rec);
    CHECK(j.contains("problem_instance"));
    CHECK(j.contains("correct_solution"));
    REQUIRE(j.contains("interaction_history"));
    REQUIRE(j.at("interaction_history").size() == 2);
    const auto& first = j.at("interaction_history").at(0);
    CHECK(first.contains("attempt"));
    CHECK(first.contains("candidate_solution"));
    CHECK(first.contains("feedback_received"));
    CHECK(j.at("interaction_history").at(1).at("feedback_received") == "Correct");
}

TEST_CASE("[memory] MEM records omit interaction history entirely") {
    auto rec = sample_record(MemoryVariant::MEM, "graph-coloring", 10);
    auto j = to_json(rec);
    CHECK_FALSE(j.contains("interaction_history"));
    auto back = memory_record_from_json(j);
    CHECK(back.interaction_history.empty());
}

TEST_CASE("[memory] json round trip is field-for-field") {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 50; ++i) {
        auto variant = rng() % 2 ? MemoryVariant::EEM : MemoryVariant::MEM;
        int hist = variant == MemoryVariant::EEM ? 1 + static_cast<int>(rng() % 5) : 0;
        auto rec = sample_record(variant, rng() % 2 ? "graph-coloring" : "code-debugging",
                                 static_cast<int>(rng() % 30), hist);
        auto back = memory_record_from_json(to_json(rec));
        CHECK(back.variant == rec.variant);
        CHECK(back.domain == rec.domain);
        CHECK(back.instance_size == rec.instance_size);
        CHECK(back.problem_instance == rec.problem_instance);
        CHECK(back.correct_solution == rec.correct_solution);
        REQUIRE(back.interaction_history.size() == rec.interaction_history.size());
        for (size_t h = 0; h < rec.interaction_history.size(); ++h) {
            CHECK(back.interaction_history[h].attempt == rec.interaction_history[h].attempt);
            CHECK(back.interaction_history[h].candidate_solution ==
                  rec.interaction_history[h].candidate_solution);
            CHECK(back.interaction_history[h].feedback_received ==
                  rec.interaction_history[h].feedback_received);
        }
    }
}

TEST_CASE("[memory] persistence round trip through jsonl files") {
    auto dir = fresh_dir("persist");
    {
        MemoryStore store(dir);
        store.record(sample_record(MemoryVariant::MEM, "graph-coloring", 5));
        store.record(sample_record(MemoryVariant::EEM, "graph-coloring", 10, 3));
        store.record(sample_record(MemoryVariant::MEM, "code-debugging", 40));
    }
    MemoryStore reloaded(dir);
    REQUIRE(reloaded.size() == 3);
    auto all = reloaded.all();
    int gc = 0, cd = 0;
    for (const auto& r : all) (r.domain == "graph-coloring" ? gc : cd)++;
    CHECK(gc == 2);
    CHECK(cd == 1);
    for (const auto& r : reloaded.all())
        if (r.variant == MemoryVariant::EEM) CHECK(r.interaction_history.size() == 3);
    std::filesystem::remove_all(dir);
}

TEST_CASE("[memory] retrieve ranks by size proximity then recency") {
    MemoryStore store;
    store.record(sample_record(MemoryVariant::MEM, "graph-coloring", 5));
    store.record(sample_record(MemoryVariant::MEM, "graph-coloring", 10));
    store.record(sample_record(MemoryVariant::MEM, "graph-coloring", 25));

    auto hits = store.retrieve("graph-coloring", 9, 1);
    REQUIRE(hits.size() == 1);
    CHECK(hits[0].instance_size == 10);

    CHECK(store.retrieve("graph-coloring", 9, 0).empty());
    CHECK(MemoryStore().retrieve("graph-coloring", 9, 3).empty());

    // equal distance: newest first
    MemoryStore ties;
    auto a = sample_record(MemoryVariant::MEM, "graph-coloring", 8);
    a.correct_solution = "older";
    auto b = sample_record(MemoryVariant::MEM, "graph-coloring", 8);
    b.correct_solution = "newer";
    ties.record(a);
    ties.record(b);
    auto ranked = ties.retrieve("graph-coloring", 8, 2);
    REQUIRE(ranked.size() == 2);
    CHECK(ranked[0].correct_solution == "newer");
    CHECK(ranked[1].correct_solution == "older");
}

TEST_CASE("[memory] retrieve never crosses domains") {
    MemoryStore store;
    store.record(sample_record(MemoryVariant::MEM, "graph-coloring", 10));
    store.record(sample_record(MemoryVariant::MEM, "code-debugging", 10));
    for (const auto& r : store.retrieve("graph-coloring", 10, 10))
        CHECK(r.domain == "graph-coloring");
    for (const auto& r : store.retrieve("code-debugging", 10, 10))
        CHECK(r.domain == "code-debugging");
    CHECK(store.retrieve("graph-coloring", 10, 10).size() == 1);
}

TEST_CASE("[memory] ranking agrees with a naive reference sort") {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<MemoryRecord> records;
        int n = 1 + static_cast<int>(rng() % 12);
        for (int i = 0; i < n; ++i)
            records.push_back(sample_record(MemoryVariant::MEM, "graph-coloring",
                                            static_cast<int>(rng() % 30)));
        int query = static_cast<int>(rng() % 30);
        int limit = static_cast<int>(rng() % 5);

        // reference: stable sort of (distance, -index)
        std::vector<std::pair<int, int>> ref;
        for (int i = 0; i < n; ++i)
            ref.push_back({std::abs(records[static_cast<size_t>(i)].instance_size - query), -i});
        std::sort(ref.begin(), ref.end());

        auto got = rank_records(records, "graph-coloring", query, limit);
        REQUIRE(got.size() == std::min<size_t>(static_cast<size_t>(std::max(limit, 0)), records.size()));
        for (size_t i = 0; i < got.size(); ++i)
            CHECK(got[i].instance_size == records[static_cast<size_t>(-ref[i].second)].instance_size);
    }
}
