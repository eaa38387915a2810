#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <regex>

#include <unistd.h>

#include "tandem/plot.hpp"
#include "tandem/sweep.hpp"

using namespace tandem;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    REQUIRE(in.good());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

fs::path fresh_dir(const std::string& tag) {
    auto dir = fs::temp_directory_path() /
               ("tandem-harness-" + tag + "-" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

GenerateParams small_params() {
    GenerateParams p;
    p.sizes = {6, 8};
    p.count_per_size = 5;
    p.prob_lo = 0.2;
    p.prob_hi = 0.6;
    p.k = 3;
    p.seed = 42;
    return p;
}

SweepConfigEntry synthetic_config(const std::string& label, int T, double fix_prob,
                                  RunMode mode = RunMode::Pipeline) {
    SweepConfigEntry c;
    c.label = label;
    c.run.max_iterations = T;
    c.run.mode = mode;
    c.s1.backend = SolverBackend::SyntheticColorer;
    c.s1.fix_prob = fix_prob;
    c.s1.synthetic_seed = 9;
    c.s2.backend = SolverBackend::SyntheticColorer;
    c.s2.fix_prob = 1.0;
    c.s2.synthetic_seed = 10;
    return c;
}

} // namespace

TEST_CASE("[harness] dataset generation writes labeled instances and a manifest") {
    auto dir = fresh_dir("gen");
    auto report = generate_dataset(small_params(), dir);
    CHECK(report.total == 10);
    CHECK(report.solvable + report.unsolvable == 10);
    CHECK(fs::exists(dir / "manifest.json"));

    auto ds = load_gc_dataset(dir / "manifest.json");
    REQUIRE(ds.entries.size() == 10);
    CHECK(ds.entries[0].id == "g06_000");
    for (const auto& e : ds.entries) {
        CHECK(e.instance.k() == 3);
        REQUIRE(e.instance.meta().solvable.has_value());
        CHECK(e.instance.meta().edge_prob >= 0.2);
        CHECK(e.instance.meta().edge_prob <= 0.6);
        // labels agree with a fresh oracle run
        CHECK(*label_solvability(e.instance).meta().solvable == *e.instance.meta().solvable);
    }
    fs::remove_all(dir);
}

TEST_CASE("[harness] dataset generation is deterministic in the seed") {
    auto p = small_params();
    p.count_per_size = 1;
    auto a = fresh_dir("gen-a"), b = fresh_dir("gen-b");
    generate_dataset(p, a);
    generate_dataset(p, b);
    CHECK(slurp(a / "manifest.json") == slurp(b / "manifest.json"));
    CHECK(slurp(a / "instances/g06_000.col") == slurp(b / "instances/g06_000.col"));
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST_CASE("[harness] all-triangle datasets are labeled unsolvable at k=2") {
    GenerateParams p;
    p.sizes = {3};
    p.count_per_size = 4;
    p.prob_lo = p.prob_hi = 1.0;
    p.k = 2;
    auto dir = fresh_dir("tri");
    auto report = generate_dataset(p, dir);
    CHECK(report.unsolvable == 4);
    CHECK(report.solvable == 0);
    fs::remove_all(dir);
}

TEST_CASE("[harness] generation parameter validation") {
    auto dir = fresh_dir("bad");
    GenerateParams p;
    CHECK_THROWS_AS(generate_dataset(p, dir), std::invalid_argument); // empty sizes
    p.sizes = {4};
    p.prob_lo = 0.9;
    p.prob_hi = 0.1;
    CHECK_THROWS_AS(generate_dataset(p, dir), std::invalid_argument);
    fs::remove_all(dir);
}

TEST_CASE("[harness] sweep over a coloring dataset produces transcripts, csv, and rows") {
    auto data = fresh_dir("sweep-data");
    generate_dataset(small_params(), data);

    SweepSpec spec;
    spec.dataset = data / "manifest.json";
    spec.out_dir = fresh_dir("sweep-out");
    spec.workers = 2;
    spec.configurations = {synthetic_config("fix10@4", 4, 1.0),
                           synthetic_config("fix05@4", 4, 0.5)};

    auto rows = run_sweep(spec);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].label == "fix10@4");
    CHECK(rows[0].instances == 10);
    CHECK(rows[0].success_rate == 100.0 * rows[0].solved / rows[0].instances);

    CHECK(fs::exists(spec.out_dir / "fix10@4.jsonl"));
    CHECK(fs::exists(spec.out_dir / "report.csv"));

    // transcripts are written in dataset order and re-aggregate to the same rows
    std::ifstream in(spec.out_dir / "fix10@4.jsonl");
    std::string first_line;
    std::getline(in, first_line);
    CHECK(nlohmann::json::parse(first_line).at("instance_id") == "g06_000");

    auto recomputed = report_from_transcripts(
        {spec.out_dir / "fix10@4.jsonl", spec.out_dir / "fix05@4.jsonl"});
    REQUIRE(recomputed.size() == 2);
    for (size_t i = 0; i < 2; ++i) {
        CHECK(recomputed[i].label == rows[i].label);
        CHECK(recomputed[i].solved == rows[i].solved);
        CHECK(recomputed[i].mean_time_s == rows[i].mean_time_s);
        CHECK(recomputed[i].mean_iterations == rows[i].mean_iterations);
        CHECK(recomputed[i].fallback_rate == rows[i].fallback_rate);
    }

    fs::remove_all(data);
    fs::remove_all(spec.out_dir);
}

TEST_CASE("[harness] identical sweeps produce byte-identical outputs") {
    auto data = fresh_dir("det-data");
    generate_dataset(small_params(), data);

    SweepSpec spec;
    spec.dataset = data / "manifest.json";
    spec.workers = 2;
    spec.configurations = {synthetic_config("cfg", 3, 0.7)};

    spec.out_dir = fresh_dir("det-a");
    run_sweep(spec);
    auto a_jsonl = slurp(spec.out_dir / "cfg.jsonl");
    auto a_csv = slurp(spec.out_dir / "report.csv");
    fs::remove_all(spec.out_dir);

    spec.out_dir = fresh_dir("det-b");
    run_sweep(spec);
    CHECK(slurp(spec.out_dir / "cfg.jsonl") == a_jsonl);
    CHECK(slurp(spec.out_dir / "report.csv") == a_csv);
    fs::remove_all(spec.out_dir);
    fs::remove_all(data);
}

TEST_CASE("[harness] sweep results are invariant to the worker count") {
    auto data = fresh_dir("workers-data");
    generate_dataset(small_params(), data);

    SweepSpec spec;
    spec.dataset = data / "manifest.json";
    spec.configurations = {synthetic_config("cfg", 3, 0.5)};

    spec.workers = 1;
    spec.out_dir = fresh_dir("workers-1");
    run_sweep(spec);
    auto serial = slurp(spec.out_dir / "cfg.jsonl");
    fs::remove_all(spec.out_dir);

    spec.workers = 4;
    spec.out_dir = fresh_dir("workers-4");
    run_sweep(spec);
    CHECK(slurp(spec.out_dir / "cfg.jsonl") == serial);
    fs::remove_all(spec.out_dir);
    fs::remove_all(data);
}

TEST_CASE("[harness] S2Only sweeps report full fallback and zero iterations") {
    auto data = fresh_dir("s2-data");
    auto p = small_params();
    p.count_per_size = 3;
    generate_dataset(p, data);

    SweepSpec spec;
    spec.dataset = data / "manifest.json";
    spec.out_dir = fresh_dir("s2-out");
    spec.configurations = {synthetic_config("lrm", 1, 1.0, RunMode::S2Only)};

    auto rows = run_sweep(spec);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].fallback_rate == 100.0);
    CHECK(rows[0].mean_iterations == 0.0);
    fs::remove_all(data);
    fs::remove_all(spec.out_dir);
}

TEST_CASE("[harness] solvable filter restricts the instance set") {
    auto data = fresh_dir("filter-data");
    generate_dataset(small_params(), data);
    auto ds = load_gc_dataset(data / "manifest.json");
    int solvable = 0;
    for (const auto& e : ds.entries)
        if (*e.instance.meta().solvable) ++solvable;

    SweepSpec spec;
    spec.dataset = data / "manifest.json";
    spec.out_dir = fresh_dir("filter-out");
    spec.filter = "solvable";
    spec.configurations = {synthetic_config("cfg", 2, 1.0)};
    auto rows = run_sweep(spec);
    CHECK(rows[0].instances == solvable);
    fs::remove_all(data);
    fs::remove_all(spec.out_dir);
}

TEST_CASE("[harness] debugging datasets sweep through the same harness") {
    auto data = fresh_dir("cd-data");
    fs::copy_file(fs::path(TANDEM_FIXTURE_DIR) / "kth_factor.json", data / "kth_factor.json");
    {
        std::ofstream mf(data / "manifest.json");
        mf << R"({"domain":"code-debugging","instances":[{"id":"kth-factor","file":"kth_factor.json"}]})";
    }

    // S1 replays the corrected program wrapped in code tags
    auto fixed = load_debug_instance(data / "kth_factor.json");
    std::string corrected =
        "class Solution:\n"
        "    def kthFactor(self, n: int, k: int) -> int:\n"
        "        count = 0\n"
        "        for i in range(1, n + 1):\n"
        "            if n % i == 0:\n"
        "                count += 1\n"
        "                if count == k:\n"
        "                    return i\n"
        "        return -1\n"
        "\n"
        "import re\nimport sys\n"
        "nums = re.findall(r\"-?\\d+\", sys.stdin.read())\n"
        "print(Solution().kthFactor(int(nums[0]), int(nums[1])))\n";

    SweepSpec spec;
    spec.dataset = data / "manifest.json";
    spec.out_dir = fresh_dir("cd-out");
    SweepConfigEntry c;
    c.label = "replay-fix";
    c.run.max_iterations = 2;
    c.run.mode = RunMode::S1Only;
    c.s1.backend = SolverBackend::ScriptedReplay;
    c.s1.fixture = {{"*", "<code>" + corrected + "</code>"}};
    c.s2.backend = SolverBackend::ScriptedReplay;
    spec.configurations = {c};

    auto rows = run_sweep(spec);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].instances == 1);
    CHECK(rows[0].solved == 1);
    CHECK(rows[0].success_rate == 100.0);
    fs::remove_all(data);
    fs::remove_all(spec.out_dir);
}

TEST_CASE("[harness] memory produced by one sweep can seed the next") {
    auto data = fresh_dir("memseed-data");
    auto p = small_params();
    p.count_per_size = 3;
    generate_dataset(p, data);

    SweepSpec first;
    first.dataset = data / "manifest.json";
    first.out_dir = fresh_dir("memseed-run1");
    auto cfg = synthetic_config("warmup", 6, 1.0);
    cfg.run.memory_variant = MemoryVariant::EEM;
    first.configurations = {cfg};
    auto rows1 = run_sweep(first);
    REQUIRE(rows1[0].solved > 0);

    // the produced records load as a store and seed a later sweep's snapshot
    auto memdir = fresh_dir("memseed-store");
    fs::copy_file(first.out_dir / "warmup.memory.jsonl", memdir / "graph-coloring.jsonl");
    MemoryStore seeded(memdir);
    CHECK(seeded.size() == static_cast<size_t>(rows1[0].solved));
    for (const auto& r : seeded.all()) {
        CHECK(r.domain == "graph-coloring");
        CHECK(r.variant == MemoryVariant::EEM);
        CHECK_FALSE(r.interaction_history.empty());
    }

    SweepSpec second = first;
    second.out_dir = fresh_dir("memseed-run2");
    second.memory_dir = memdir;
    auto rows2 = run_sweep(second);
    CHECK(rows2[0].instances == rows1[0].instances);

    fs::remove_all(data);
    fs::remove_all(first.out_dir);
    fs::remove_all(second.out_dir);
    fs::remove_all(memdir);
}

TEST_CASE("[harness] sweep spec json parsing and validation") {
    auto base = fresh_dir("spec");
    nlohmann::json j{
        {"dataset", "data/manifest.json"},
        {"out_dir", "out"},
        {"workers", 3},
        {"filter", "solvable"},
        {"configurations",
         nlohmann::json::array(
             {{{"label", "llm@5"},
               {"T", 5},
               {"mode", "pipeline"},
               {"feedback", "MLF"},
               {"memory", "MEM"},
               {"fallback", "PO"},
               {"s1", {{"backend", "synthetic"}, {"fix_prob", 0.8}, {"synthetic_seed", 3}}},
               {"s2", {{"backend", "replay"}}}}})}};
    auto spec = sweep_spec_from_json(j, base);
    CHECK(spec.dataset == base / "data/manifest.json");
    CHECK(spec.workers == 3);
    CHECK(spec.filter == "solvable");
    REQUIRE(spec.configurations.size() == 1);
    CHECK(spec.configurations[0].run.max_iterations == 5);
    CHECK(spec.configurations[0].s1.backend == SolverBackend::SyntheticColorer);
    CHECK(spec.configurations[0].s1.fix_prob == 0.8);

    // duplicate labels rejected
    j["configurations"].push_back(j["configurations"][0]);
    CHECK_THROWS_AS(sweep_spec_from_json(j, base), std::invalid_argument);
    fs::remove_all(base);
}

TEST_CASE("[harness] csv encode/parse round trip") {
    std::vector<ReportRow> rows{{"llm@5", 100, 42, 42.0, 27.1234, 3.456, 58.0},
                                {"lrm", 100, 2, 2.0, 61.5, 0.0, 100.0}};
    auto csv = rows_to_csv(rows);
    CHECK(csv.find("label,instances,solved,success_rate,mean_time_s,mean_iterations,fallback_rate\n") == 0);

    auto tmp = fs::temp_directory_path() / "tandem-rows.csv";
    {
        std::ofstream out(tmp);
        out << csv;
    }
    auto back = parse_report_csv(tmp);
    REQUIRE(back.size() == 2);
    CHECK(back[0].label == "llm@5");
    CHECK(back[0].instances == 100);
    CHECK(back[0].solved == 42);
    CHECK(back[1].fallback_rate == 100.0);
    fs::remove(tmp);
}

TEST_CASE("[harness] scatter plot renders one labeled point per row") {
    std::vector<ReportRow> rows;
    for (int i = 0; i < 5; ++i)
        rows.push_back({"cfg" + std::to_string(i), 10, i, 10.0 * i, 2.0 * i + 0.5, 1.0, 0.0});
    auto svg = svg_scatter(rows, "demo");

    size_t circles = 0, pos = 0;
    while ((pos = svg.find("<circle", pos)) != std::string::npos) { ++circles; ++pos; }
    CHECK(circles == 5);
    for (const auto& r : rows) CHECK(svg.find(">" + r.label + "</text>") != std::string::npos);
}

TEST_CASE("[harness] extreme points stay inside the canvas") {
    std::vector<ReportRow> rows{{"origin-top", 10, 10, 100.0, 0.0, 1.0, 0.0}};
    auto svg = svg_scatter(rows);
    std::smatch m;
    REQUIRE(std::regex_search(svg, m, std::regex(R"x(<circle cx="([0-9.]+)" cy="([0-9.]+)")x")));
    double cx = std::stod(m[1].str());
    double cy = std::stod(m[2].str());
    CHECK(cx > 0);
    CHECK(cx < 720);
    CHECK(cy > 0);
    CHECK(cy < 480);
}

TEST_CASE("[harness] plotting nothing is an error") {
    CHECK_THROWS_AS(svg_scatter({}), EmptyInputError);
}
