#include "prefbench/commands.hpp"
#include "prefbench/error.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <iostream>

using namespace prefbench;
namespace fs = std::filesystem;

int main(int argc, char** argv) {
    CLI::App app{"prefbench: personalized tool-calling benchmark and preference memory"};
    app.require_subcommand(1);

    GlobalOptions g;
    std::string config_path, out_path;
    std::size_t jobs = 0;
    std::uint64_t seed = 0;
    bool verbose = false;
    app.add_option("--config", config_path, "run config (JSON)");
    app.add_option("--out", out_path, "output directory");
    app.add_flag("--force", g.force, "rebuild existing artifacts / merge mismatched results");
    auto* jobs_opt = app.add_option("--jobs", jobs, "parallel workers")->check(CLI::PositiveNumber);
    auto* seed_opt = app.add_option("--seed", seed, "seed for instance sampling");
    app.add_flag("-v,--verbose", verbose, "debug logging");

    auto* dataset = app.add_subcommand("dataset", "corpus operations")->require_subcommand(1);
    std::string export_file, source_dir, output;
    auto* imp = dataset->add_subcommand("import", "convert an MPT export into a corpus");
    imp->add_option("export", export_file, "export file (JSON array or JSONL)")->required();
    imp->add_option("-o,--output", output, "corpus file to write")->required();
    auto* build = dataset->add_subcommand("build", "assemble a corpus from sessions, manifests, templates and queries");
    build->add_option("source", source_dir, "directory with sessions/manifests/templates/queries .json")->required();
    build->add_option("-o,--output", output, "corpus file to write")->required();
    bool stats_json = false;
    auto* stats = dataset->add_subcommand("stats", "corpus summary");
    stats->add_flag("--json", stats_json, "machine-readable output");
    auto* validate = dataset->add_subcommand("validate", "check corpus, schema and taxonomy invariants");

    auto* memory = app.add_subcommand("memory", "preference memory")->require_subcommand(1);
    auto* mem_build = memory->add_subcommand("build", "build one memory export per dialogue");

    auto* eval = app.add_subcommand("eval", "evaluation")->require_subcommand(1);
    auto* eval_run = eval->add_subcommand("run", "predict and score every instance");

    std::vector<std::string> inputs;
    auto* report = app.add_subcommand("report", "render and compare results");
    report->add_option("results", inputs, "run directories or results.jsonl files")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? exit_ok : exit_usage;
    }

    spdlog::set_default_logger(spdlog::stderr_color_mt("prefbench"));
    spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);
    if (!config_path.empty()) g.config = fs::path(config_path);
    if (!out_path.empty()) g.out = fs::path(out_path);
    if (jobs_opt->count()) g.jobs = jobs;
    if (seed_opt->count()) g.seed = seed;

    try {
        if (*report) {
            std::vector<fs::path> paths(inputs.begin(), inputs.end());
            return cmd_report(paths, g.force, g.out, std::cout);
        }
        RunConfig config = effective_config(g);
        if (*imp) return cmd_dataset_import(config, export_file, output, std::cout);
        if (*build) return cmd_dataset_build(config, source_dir, output, std::cout);
        if (*stats) return cmd_dataset_stats(config, stats_json, std::cout);
        if (*validate) return cmd_dataset_validate(config, std::cout);
        if (*mem_build) return cmd_memory_build(config, g.force, std::cout);
        if (*eval_run) return cmd_eval_run(config, g.force, std::cout);
    } catch (const Error& e) {
        spdlog::error("{}", e.what());
        return exit_code_for(e.error_class());
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return exit_data;
    }
    return exit_usage;
}
