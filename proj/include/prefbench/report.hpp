#pragma once

#include "prefbench/metrics.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace prefbench {

// Knobs that must agree for two result sets to be comparable. The method
// itself is deliberately not part of it.
struct Fingerprint {
    std::string schema_id;
    std::string taxonomy_id;
    std::size_t recall_min = 2;
    std::string token_counter;
    std::string inference_backend;
    std::string corpus_digest;

    friend bool operator==(const Fingerprint&, const Fingerprint&) = default;
    std::vector<std::string> differences(const Fingerprint& other) const;
};

nlohmann::ordered_json fingerprint_to_json(const Fingerprint& f);
Fingerprint fingerprint_from_json(const nlohmann::json& j);

struct MethodResults {
    std::string method;
    Fingerprint fingerprint;
    MetricReport report;
    std::optional<Footprint> footprint;
    std::string source;  // results / manifest path it came from
};

// Published figures shown for orientation only; never compared against.
struct ReferenceRow {
    std::string quantity;
    std::string setting;
    std::string value;
};

const std::vector<ReferenceRow>& published_reference_rows();

// Throws ConfigError naming the differing fields unless `force`.
void check_comparable(const std::vector<MethodResults>& results, bool force);

// "12.34" for a ratio in [0,1] as a percentage.
std::string percent(const Ratio& r);

std::string render_report_text(const std::vector<MethodResults>& results);
nlohmann::ordered_json render_report_json(const std::vector<MethodResults>& results);

}  // namespace prefbench
