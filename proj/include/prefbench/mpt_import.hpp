#pragma once

#include "prefbench/corpus.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace prefbench {

struct ImportResult {
    Corpus corpus;
    // One entry per record (or sub-record) that could not be mapped.
    std::vector<std::string> skipped;
    std::vector<LabelDisagreement> label_disagreements;
};

// Reads a JSON array, an object wrapping the records (`data`, `records`,
// `examples`, or `train`/`test` splits), or a JSON-lines file.
std::vector<nlohmann::json> read_export_records(const std::filesystem::path& path);

// Maps released-export records onto the corpus format. Field names are
// matched against the spellings seen in the release and in SGD-derived dumps;
// anything that cannot be mapped is logged and listed in `skipped`.
ImportResult import_mpt_records(const std::vector<nlohmann::json>& records,
                                const ApiSchema& schema,
                                const PreferenceTaxonomy& taxonomy,
                                std::size_t recall_min = 2);

}  // namespace prefbench
