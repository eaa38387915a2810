// Command-line front end: dataset generation, configuration sweeps, report
// aggregation, and scatter-plot emission.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tandem/dataset.hpp"
#include "tandem/plot.hpp"
#include "tandem/sweep.hpp"

namespace fs = std::filesystem;

int main(int argc, char** argv) {
    CLI::App app{"fast/slow solver orchestration harness"};
    app.require_subcommand(1);

    // generate ---------------------------------------------------------------
    auto* gen = app.add_subcommand("generate", "generate a labeled graph-coloring dataset");
    std::vector<int> sizes{5, 10, 15, 20, 25};
    int count = 100;
    double prob_lo = 0.1, prob_hi = 0.9;
    int k = 4;
    std::uint64_t seed = 12345;
    int oracle_budget_ms = 10000;
    std::string gen_out = "data";
    gen->add_option("--sizes", sizes, "vertex counts")->delimiter(',');
    gen->add_option("--count", count, "instances per size");
    gen->add_option("--prob-lo", prob_lo, "edge probability lower bound");
    gen->add_option("--prob-hi", prob_hi, "edge probability upper bound");
    gen->add_option("--k", k, "color budget");
    gen->add_option("--seed", seed, "master seed");
    gen->add_option("--oracle-budget-ms", oracle_budget_ms, "per-instance labeling budget");
    gen->add_option("--out", gen_out, "output directory")->required();

    // run --------------------------------------------------------------------
    auto* run = app.add_subcommand("run", "run a sweep described by a JSON spec");
    std::string spec_path;
    int workers_override = 0;
    run->add_option("--spec", spec_path, "sweep spec file")->required();
    run->add_option("--workers", workers_override, "override worker count");

    // report -----------------------------------------------------------------
    auto* report = app.add_subcommand("report", "recompute the CSV from transcript files");
    std::vector<std::string> transcript_paths;
    std::string report_out;
    report->add_option("transcripts", transcript_paths, "JSONL transcript files")->required();
    report->add_option("--out", report_out, "CSV output path (default: stdout)");

    // plot -------------------------------------------------------------------
    auto* plot = app.add_subcommand("plot", "emit a success-rate vs time scatter");
    std::vector<std::string> csv_paths;
    std::string plot_out = "scatter.svg";
    std::string title;
    plot->add_option("--csv", csv_paths, "report CSV files")->required();
    plot->add_option("--out", plot_out, "SVG output path");
    plot->add_option("--title", title, "plot title");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) {
            tandem::GenerateParams params;
            params.sizes = sizes;
            params.count_per_size = count;
            params.prob_lo = prob_lo;
            params.prob_hi = prob_hi;
            params.k = k;
            params.seed = seed;
            params.oracle_budget = std::chrono::milliseconds(oracle_budget_ms);
            auto rep = tandem::generate_dataset(params, gen_out);
            std::printf("wrote %d instances (%d solvable, %d unsolvable, %d redraws) to %s\n",
                        rep.total, rep.solvable, rep.unsolvable, rep.redraws, gen_out.c_str());
        } else if (*run) {
            auto spec = tandem::load_sweep_spec(spec_path);
            if (workers_override > 0) spec.workers = workers_override;
            auto rows = tandem::run_sweep(spec);
            std::cout << tandem::rows_to_csv(rows);
            std::printf("transcripts and report.csv written to %s\n",
                        spec.out_dir.string().c_str());
        } else if (*report) {
            std::vector<fs::path> paths(transcript_paths.begin(), transcript_paths.end());
            auto rows = tandem::report_from_transcripts(paths);
            auto csv = tandem::rows_to_csv(rows);
            if (report_out.empty()) {
                std::cout << csv;
            } else {
                std::ofstream out(report_out);
                out << csv;
            }
        } else if (*plot) {
            std::vector<tandem::ReportRow> rows;
            for (const auto& p : csv_paths) {
                auto parsed = tandem::parse_report_csv(p);
                rows.insert(rows.end(), parsed.begin(), parsed.end());
            }
            tandem::write_scatter_svg(rows, plot_out, title);
            std::printf("wrote %s\n", plot_out.c_str());
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
