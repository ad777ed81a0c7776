#pragma once

#include "prefbench/corpus.hpp"
#include "prefbench/gateway.hpp"
#include "prefbench/memory.hpp"
#include "prefbench/prompts.hpp"
#include "prefbench/retrieval.hpp"

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace prefbench {

struct FullHistory {
    const Dialogue* dialogue = nullptr;
};
struct MemoryConditioning {
    const MemoryState* memory = nullptr;  // null: no memory available
};
struct RetrievedConditioning {
    RetrievedContext context;
};
// monostate: the query alone.
using Conditioning = std::variant<std::monostate, FullHistory, MemoryConditioning, RetrievedConditioning>;

struct Prediction {
    std::vector<ApiCall> calls;  // empty on parse failure or transport error
    std::string raw_text;
    std::size_t attempts = 0;
    bool parse_failed = false;
    std::optional<std::string> error;  // transport / backend failure
    std::vector<std::string> validation_issues;
    std::optional<GatewayUsage> usage;
};

// Produces the final call(s) for an instance. Never throws for per-instance
// failures: they are reported in the Prediction.
class CallPredictor {
public:
    virtual ~CallPredictor() = default;
    virtual Prediction predict(const QueryInstance& instance, const Conditioning& conditioning, const ApiSchema& schema) = 0;
    virtual std::string identity() const = 0;
};

// Renders the prompt matching the conditioning, sends it, and parses the
// reply. An unparseable reply is retried once verbatim, then recorded as an
// empty prediction.
class GatewayPredictor : public CallPredictor {
public:
    explicit GatewayPredictor(TextGateway& gateway, PromptLibrary prompts = PromptLibrary::builtin());

    Prediction predict(const QueryInstance& instance, const Conditioning& conditioning, const ApiSchema& schema) override;
    std::string identity() const override;

    // The exact prompt predict() would send.
    std::string prompt_for(const QueryInstance& instance, const Conditioning& conditioning, const ApiSchema& schema) const;

private:
    TextGateway& gateway_;
    PromptLibrary prompts_;
};

// Copies the explicit arguments from the query and fills, for each
// preference the memory names, the least member of each mapped value set on
// the target domain. Nothing else is filled.
std::vector<ApiCall> ground_memory_deterministic(const QueryInstance& instance,
                                                 const MemoryState* memory,
                                                 const ApiSchema& schema,
                                                 const PreferenceTaxonomy& taxonomy);

// Deterministic predictor over ground_memory_deterministic. Only memory
// conditioning contributes preferences; any other conditioning yields the
// explicit arguments alone.
class GroundingPredictor : public CallPredictor {
public:
    explicit GroundingPredictor(PreferenceTaxonomy taxonomy);

    Prediction predict(const QueryInstance& instance, const Conditioning& conditioning, const ApiSchema& schema) override;
    std::string identity() const override { return "deterministic-ground"; }

private:
    PreferenceTaxonomy taxonomy_;
};

}  // namespace prefbench
