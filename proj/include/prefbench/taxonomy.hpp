#pragma once

#include "prefbench/api_call.hpp"
#include "prefbench/schema.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace prefbench {

// A (group, preference) pair such as (budget_conscious, low_cost).
struct PreferenceLabel {
    std::string group;
    std::string preference;

    friend auto operator<=>(const PreferenceLabel&, const PreferenceLabel&) = default;
};

struct PreferenceMapping {
    std::string group;
    std::string preference;
    std::string domain;
    std::string slot;
    std::vector<Value> values;
    // false for rows kept for classification only (travel/group_usage):
    // they never contribute evidence.
    bool signal = true;

    PreferenceLabel label() const { return {group, preference}; }
    bool contains(const Value& v) const;
};

class PreferenceTaxonomy {
public:
    PreferenceTaxonomy() = default;
    // Throws DataError when a (domain, slot, value) triple falls into two mappings.
    PreferenceTaxonomy(std::string taxonomy_id,
                       std::vector<PreferenceMapping> mappings,
                       std::map<PreferenceLabel, std::vector<std::string>> cues = {});

    const std::string& id() const noexcept { return taxonomy_id_; }
    const std::vector<PreferenceMapping>& mappings() const noexcept { return mappings_; }
    const std::map<PreferenceLabel, std::vector<std::string>>& cues() const noexcept { return cues_; }

    const PreferenceMapping* find(std::string_view domain, std::string_view slot, const Value& value) const;
    // Mappings on a slot name in any domain (used to interpret bare `slot=value` fragments).
    std::vector<const PreferenceMapping*> find_by_slot(std::string_view slot, const Value& value) const;
    std::vector<const PreferenceMapping*> mappings_for(const PreferenceLabel& label) const;

    // Groups in order of first appearance; fixes concatenation order in generated text.
    std::vector<std::string> groups() const;
    bool is_signal(const PreferenceLabel& label) const;

    // Preferences a piece of free text names, via the cue phrases. A group whose
    // cues name two different preferences is ambiguous and dropped.
    std::vector<PreferenceLabel> recognize(std::string_view text) const;

    static PreferenceTaxonomy merge(const PreferenceTaxonomy& a, const PreferenceTaxonomy& b);

private:
    std::string taxonomy_id_;
    std::vector<PreferenceMapping> mappings_;
    std::map<PreferenceLabel, std::vector<std::string>> cues_;
};

PreferenceTaxonomy load_taxonomy(const nlohmann::json& doc);
PreferenceTaxonomy load_taxonomy_file(const std::filesystem::path& path);

std::optional<PreferenceLabel> classify_argument(std::string_view domain,
                                                 std::string_view slot,
                                                 const Value& value,
                                                 const PreferenceTaxonomy& taxonomy);

struct ValueCount {
    Value value;
    std::size_t count = 0;

    friend bool operator==(const ValueCount&, const ValueCount&) = default;
};

struct SlotEvidence {
    std::string domain;
    std::string slot;
    std::vector<ValueCount> values;

    friend bool operator==(const SlotEvidence&, const SlotEvidence&) = default;
};

struct EvidenceRecord {
    std::string group;
    std::string preference;
    std::size_t count = 0;
    std::vector<SlotEvidence> per_slot;

    PreferenceLabel label() const { return {group, preference}; }
    friend bool operator==(const EvidenceRecord&, const EvidenceRecord&) = default;
};

// Tallies every taxonomy-matching argument occurrence. Values are tallied
// under the taxonomy's spelling. Sorted by count desc, then group, preference.
std::vector<EvidenceRecord> aggregate_evidence(std::span<const ApiCall> calls, const PreferenceTaxonomy& taxonomy);

// Preference with the strictly greatest count in the group; absent on no
// records or an exact tie.
std::optional<std::pair<std::string, std::size_t>> dominant_preference(std::span<const EvidenceRecord> records,
                                                                       std::string_view group);

const EvidenceRecord* find_evidence(std::span<const EvidenceRecord> records, const PreferenceLabel& label);

// The annotation record layout (`group_preference`, `value_group`, `count`, `evidence`).
nlohmann::ordered_json evidence_to_json(std::span<const EvidenceRecord> records);
// Accepts both the `values: [{value, count}]` and the single `value` evidence forms.
std::vector<EvidenceRecord> evidence_from_json(const nlohmann::json& doc);

}  // namespace prefbench
