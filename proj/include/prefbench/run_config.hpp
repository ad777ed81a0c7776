#pragma once

#include "prefbench/http_gateway.hpp"
#include "prefbench/schema.hpp"
#include "prefbench/taxonomy.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

namespace prefbench {

enum class Method { base, retrieval, prefine, deterministic_ground };

std::string_view to_string(Method m);
Method parse_method(std::string_view s);

struct RunConfig {
    std::filesystem::path data_dir = PREFBENCH_DATA_DIR;
    std::filesystem::path corpus = std::filesystem::path(PREFBENCH_DATA_DIR) / "synthetic" / "corpus.json";
    // Ids resolve to <data_dir>/schemas/<id>.json; "a+b" merges several.
    std::string schema_id = "mpt-base";
    std::string taxonomy_id = "mpt-base";
    // Schema the memory verifier checks actionability against (defaults to schema_id).
    std::optional<std::string> memory_schema_id;
    Method method = Method::deterministic_ground;
    std::string memory_backend = "rule-oracle";    // rule-oracle | model
    std::string inference_backend = "deterministic";  // deterministic | http
    std::string embedder = "bow";                  // bow | http
    EndpointSettings endpoint;
    std::optional<EndpointSettings> embedding_endpoint;
    std::optional<std::filesystem::path> prompts_dir;
    std::size_t max_rounds = 3;
    std::size_t retrieval_k = 5;
    std::size_t recall_min = 2;
    std::size_t recency_window = 3;
    std::string token_counter = "whitespace";
    std::filesystem::path out_dir = "runs/default";
    std::optional<std::filesystem::path> memory_dir;  // defaults to <out_dir>/memory
    std::uint64_t seed = 0;
    std::optional<std::size_t> sample;  // evaluate a seeded random subset of instances
    std::size_t jobs = 1;

    std::filesystem::path memory_path() const { return memory_dir ? *memory_dir : out_dir / "memory"; }
    // Throws ConfigError on a violated invariant.
    void validate() const;
};

// Credentials are never accepted from the file; an `api_key`-like field is
// rejected outright.
RunConfig load_run_config(const std::filesystem::path& path);
RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
nlohmann::ordered_json run_config_to_json(const RunConfig& c);

ApiSchema resolve_schema(std::string_view id, const std::filesystem::path& data_dir);
PreferenceTaxonomy resolve_taxonomy(std::string_view id, const std::filesystem::path& data_dir);

}  // namespace prefbench
