#pragma once

#include "prefbench/corpus.hpp"
#include "prefbench/memory.hpp"
#include "prefbench/metrics.hpp"
#include "prefbench/predictor.hpp"
#include "prefbench/report.hpp"
#include "prefbench/run_config.hpp"

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace prefbench {

enum ExitCode : int { exit_ok = 0, exit_usage = 1, exit_config = 2, exit_data = 3, exit_backend = 4 };

int exit_code_for(ErrorClass c);

// Overrides from the global command-line flags.
struct GlobalOptions {
    std::optional<std::filesystem::path> config;
    std::optional<std::filesystem::path> out;
    bool force = false;
    std::optional<std::size_t> jobs;
    std::optional<std::uint64_t> seed;
};

RunConfig effective_config(const GlobalOptions& opts);

// Loaded inputs shared by the commands.
struct Workspace {
    RunConfig config;
    ApiSchema schema;         // evaluation schema
    ApiSchema memory_schema;  // schema the memory verifier checks against
    PreferenceTaxonomy taxonomy;
    Corpus corpus;
    std::string corpus_digest;
};

Workspace load_workspace(const RunConfig& config);

// Keeps an owned gateway alive alongside the component using it.
struct HypothesisBackendHandle {
    std::unique_ptr<TextGateway> gateway;
    std::unique_ptr<HypothesisBackend> backend;
};
struct PredictorHandle {
    std::unique_ptr<TextGateway> gateway;
    std::unique_ptr<CallPredictor> predictor;
    std::unique_ptr<Embedder> embedder;
};

// Configuration errors (e.g. an unset credential variable) surface here,
// before any work starts.
HypothesisBackendHandle make_hypothesis_backend(const Workspace& ws);
PredictorHandle make_predictor(const Workspace& ws);

std::string memory_file_name(const std::string& dialogue_id);

struct MemoryBuildSummary {
    std::size_t built = 0;
    std::size_t reused = 0;
    std::size_t failed = 0;
    std::vector<std::string> failures;
    Footprint footprint;
};

// One export per dialogue under config.memory_path(); existing exports are
// reused unless `force`. Dialogues run in parallel up to config.jobs.
MemoryBuildSummary build_memories(const Workspace& ws, HypothesisBackend& backend, bool force);

struct EvalSummary {
    std::size_t scored = 0;
    std::size_t reused = 0;
    std::size_t errored = 0;
    MethodResults results;
    std::filesystem::path results_path;
};

// Scores every (optionally sampled) instance exactly once, appending to
// <out>/results.jsonl and finally rewriting it sorted by instance_id.
EvalSummary run_eval(const Workspace& ws, CallPredictor& predictor, Embedder* embedder, bool force);

// Loads a run directory or results file (with its sibling manifest).
MethodResults load_method_results(const std::filesystem::path& path);

int cmd_dataset_import(const RunConfig& config, const std::filesystem::path& export_file,
                       const std::filesystem::path& output, std::ostream& out);
int cmd_dataset_build(const RunConfig& config, const std::filesystem::path& source_dir,
                      const std::filesystem::path& output, std::ostream& out);
int cmd_dataset_stats(const RunConfig& config, bool as_json, std::ostream& out);
int cmd_dataset_validate(const RunConfig& config, std::ostream& out);
int cmd_memory_build(const RunConfig& config, bool force, std::ostream& out);
int cmd_eval_run(const RunConfig& config, bool force, std::ostream& out);
int cmd_report(const std::vector<std::filesystem::path>& inputs, bool force,
               const std::optional<std::filesystem::path>& out_dir, std::ostream& out);

}  // namespace prefbench
