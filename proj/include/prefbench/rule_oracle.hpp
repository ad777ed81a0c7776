#pragma once

#include "prefbench/memory.hpp"
#include "prefbench/schema.hpp"
#include "prefbench/taxonomy.hpp"

#include <map>
#include <string>
#include <vector>

namespace prefbench {

// Deterministic hypothesis backend driven by taxonomy evidence. It keeps its
// own per-dialogue record of the calls it has been shown, so generate and
// verify see everything up to the current session.
class RuleOracleBackend : public HypothesisBackend {
public:
    RuleOracleBackend(ApiSchema schema, PreferenceTaxonomy taxonomy, std::size_t window = 3);

    std::string generate(const SessionContext& ctx) override;
    Verdict verify(const SessionContext& ctx, const Hypothesis& candidate) override;
    std::string refine(const SessionContext& ctx, const Hypothesis& candidate, const Verdict& verdict) override;
    std::string identity() const override;

    // Template sentence for a preference (generic wording for unknown ones).
    static std::string template_for(const PreferenceLabel& label);

    // Preferences a hypothesis names: cue phrases plus any `slot=value` fragment
    // that falls in the taxonomy.
    std::vector<PreferenceLabel> named_preferences(const std::string& text) const;
    static bool has_slot_fragment(const std::string& text);

    // Verification against explicit per-session calls (oldest first),
    // independent of the call store.
    Verdict judge(const std::string& text, const std::vector<std::vector<ApiCall>>& sessions) const;

private:
    struct Snapshot {
        std::vector<std::vector<ApiCall>> sessions;  // index 0..current
        std::vector<ApiCall> all_calls() const;
        std::vector<ApiCall> window_calls(std::size_t k) const;
    };

    Snapshot record(const SessionContext& ctx);
    std::string compose(const std::vector<PreferenceLabel>& labels) const;
    std::string fallback(const std::vector<ApiCall>& calls) const;
    std::vector<PreferenceLabel> dominant_labels(const std::vector<EvidenceRecord>& evidence, std::size_t min_count) const;

    ApiSchema schema_;
    PreferenceTaxonomy taxonomy_;
    std::size_t window_;

    SessionCallStore store_;
};

}  // namespace prefbench
