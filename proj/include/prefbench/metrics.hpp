#pragma once

#include "prefbench/corpus.hpp"
#include "prefbench/gateway.hpp"
#include "prefbench/memory.hpp"
#include "prefbench/predictor.hpp"
#include "prefbench/tokens.hpp"

#include <nlohmann/json.hpp>

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace prefbench {

// Exact non-negative rational, always reduced.
class Ratio {
public:
    constexpr Ratio() = default;
    Ratio(std::int64_t num, std::int64_t den);
    // num/den, or 0 when den is 0.
    static Ratio of(std::int64_t num, std::int64_t den);

    std::int64_t num() const noexcept { return num_; }
    std::int64_t den() const noexcept { return den_; }
    double to_double() const noexcept { return static_cast<double>(num_) / static_cast<double>(den_); }
    std::string str() const;  // "2/3", "1", "0"
    static Ratio parse(std::string_view s);

    Ratio operator+(const Ratio& o) const;
    Ratio operator-(const Ratio& o) const;
    Ratio operator/(std::int64_t n) const;
    friend bool operator==(const Ratio&, const Ratio&) = default;
    std::strong_ordering operator<=>(const Ratio& o) const;

private:
    std::int64_t num_ = 0;
    std::int64_t den_ = 1;
};

struct MatchCounts {
    std::size_t matched = 0;
    std::size_t predicted = 0;
    std::size_t gold = 0;
};

// With `subset`, only arguments named in it count on either side; without,
// every predicted and every gold argument counts. An argument matches when
// the names agree and the values compare equal, or the predicted value lies
// in the argument's accepted value set. A domain mismatch matches nothing.
MatchCounts match_args(const ApiCall& predicted,
                       const ApiCall& gold,
                       const std::set<std::string>* subset,
                       const std::map<std::string, std::vector<Value>>& value_sets);

struct PRF {
    Ratio precision;
    Ratio recall;
    Ratio f1;

    friend bool operator==(const PRF&, const PRF&) = default;
};

// Precision m/p, recall m/g, F1 = 2m/(p+g); each 0 on a zero denominator.
PRF prf(const MatchCounts& c);

struct GuidedScores {
    bool p_em = false;         // value-group matching (default)
    bool p_em_strict = false;  // literal gold values only
    PRF ea;
    PRF oa;
    std::size_t ea_out_of_set = 0;  // predicted args outside the explicit set
};

struct FreeScores {
    PRF cf;
};

// The call that gets scored: first whose domain is the gold domain, else the
// first call (which then matches nothing). nullptr for an empty prediction.
const ApiCall* scored_call(std::span<const ApiCall> predicted, const ApiCall& gold);

GuidedScores score_context_guided(std::span<const ApiCall> predicted, const QueryInstance& instance);
FreeScores score_context_free(std::span<const ApiCall> predicted, const QueryInstance& instance);

struct EvalRecord {
    std::string instance_id;
    std::string dialogue_id;
    QueryType query_type = QueryType::context_guided;
    std::optional<ModelingType> modeling_type;
    std::vector<ApiCall> predicted;
    ApiCall gold;
    std::set<std::string> explicit_args;
    std::map<std::string, std::vector<Value>> preference_args;
    std::optional<GuidedScores> guided;  // context-guided only
    std::optional<FreeScores> free;      // context-free only
    std::size_t predicted_arg_count = 0;
    std::size_t gold_arg_count = 0;
    // diagnostics
    std::size_t attempts = 0;
    bool parse_failed = false;
    std::optional<std::string> error;
    std::vector<std::string> validation_issues;
    std::optional<std::size_t> retrieved_items;
    std::optional<GatewayUsage> usage;
};

EvalRecord score_instance(const QueryInstance& instance, const Prediction& prediction);

nlohmann::ordered_json record_to_json(const EvalRecord& r);
EvalRecord record_from_json(const nlohmann::json& j);

std::string_view modeling_key(const std::optional<ModelingType>& m);  // "unlabeled" when absent

struct MetricCell {
    std::size_t count = 0;
    std::map<std::string, Ratio> means;  // metric name -> mean in [0,1]
};

struct MetricReport {
    // query type -> modeling type -> cell; empty cells are absent
    std::map<std::string, std::map<std::string, MetricCell>> cells;
    std::map<std::string, Ratio> calibration_mad;  // per query type
    std::size_t total = 0;
    std::size_t errored = 0;
    std::size_t parse_failures = 0;
    std::size_t validation_failures = 0;
};

// Macro-average per (query type x modeling type) cell. Throws DataError on
// empty input.
MetricReport aggregate(std::span<const EvalRecord> records);

// Mean |predicted - gold| argument count per query type.
std::map<std::string, Ratio> calibration(std::span<const EvalRecord> records);

struct FootprintPoint {
    std::size_t session_index = 0;
    std::size_t dialogues = 0;
    double mean_tokens = 0.0;
    std::size_t max_tokens = 0;
};

struct Footprint {
    std::string counter;
    std::size_t dialogues = 0;
    double average_tokens = 0.0;  // final memory, absent memory counts 0
    std::optional<double> history_share_percent;  // memory / full-history tokens
    std::vector<FootprintPoint> curve;
};

// `history_tokens`, when given, holds the full-history token count of each
// memory's dialogue in the same order.
Footprint footprint(std::span<const MemoryState> memories,
                    const TokenCounter& counter,
                    std::span<const std::size_t> history_tokens = {});

nlohmann::ordered_json report_to_json(const MetricReport& r);
MetricReport report_from_json(const nlohmann::json& j);
nlohmann::ordered_json footprint_to_json(const Footprint& f);
Footprint footprint_from_json(const nlohmann::json& j);

}  // namespace prefbench
