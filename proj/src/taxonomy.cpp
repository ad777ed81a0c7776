#include "prefbench/taxonomy.hpp"

#include "prefbench/error.hpp"
#include "prefbench/json_io.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <tuple>

namespace prefbench {

namespace {

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

bool contains_phrase(std::string_view haystack, std::string_view phrase) {
    if (phrase.empty()) return false;
    for (std::size_t pos = haystack.find(phrase); pos != std::string_view::npos; pos = haystack.find(phrase, pos + 1)) {
        bool left_ok = pos == 0 || !is_word_char(haystack[pos - 1]) || !is_word_char(phrase.front());
        std::size_t end = pos + phrase.size();
        bool right_ok = end == haystack.size() || !is_word_char(haystack[end]) || !is_word_char(phrase.back());
        if (left_ok && right_ok) return true;
    }
    return false;
}

}  // namespace

bool PreferenceMapping::contains(const Value& v) const {
    return std::any_of(values.begin(), values.end(), [&](const Value& m) { return values_match(m, v); });
}

PreferenceTaxonomy::PreferenceTaxonomy(std::string taxonomy_id,
                                       std::vector<PreferenceMapping> mappings,
                                       std::map<PreferenceLabel, std::vector<std::string>> cues)
    : taxonomy_id_(std::move(taxonomy_id)), mappings_(std::move(mappings)), cues_(std::move(cues)) {
    if (taxonomy_id_.empty()) throw DataError("taxonomy_id must not be empty");
    for (std::size_t i = 0; i < mappings_.size(); ++i) {
        const auto& m = mappings_[i];
        if (m.values.empty()) {
            throw DataError("mapping " + m.domain + "." + m.slot + " -> " + m.preference + " has an empty value set");
        }
        for (std::size_t j = i + 1; j < mappings_.size(); ++j) {
            const auto& n = mappings_[j];
            if (m.domain != n.domain || m.slot != n.slot) continue;
            for (const auto& v : n.values) {
                if (m.contains(v)) {
                    throw DataError("taxonomy overlap: " + m.domain + "." + m.slot + "=" + v.plain() + " maps to both " +
                                    m.group + "/" + m.preference + " and " + n.group + "/" + n.preference);
                }
            }
        }
    }
    for (auto& [label, phrases] : cues_) {
        for (auto& p : phrases) p = to_lower_ascii(p);
    }
}

const PreferenceMapping* PreferenceTaxonomy::find(std::string_view domain, std::string_view slot, const Value& value) const {
    for (const auto& m : mappings_) {
        if (m.domain == domain && m.slot == slot && m.contains(value)) return &m;
    }
    return nullptr;
}

std::vector<const PreferenceMapping*> PreferenceTaxonomy::find_by_slot(std::string_view slot, const Value& value) const {
    std::vector<const PreferenceMapping*> out;
    for (const auto& m : mappings_) {
        if (m.slot == slot && m.contains(value)) out.push_back(&m);
    }
    return out;
}

std::vector<const PreferenceMapping*> PreferenceTaxonomy::mappings_for(const PreferenceLabel& label) const {
    std::vector<const PreferenceMapping*> out;
    for (const auto& m : mappings_) {
        if (m.group == label.group && m.preference == label.preference) out.push_back(&m);
    }
    return out;
}

std::vector<std::string> PreferenceTaxonomy::groups() const {
    std::vector<std::string> out;
    for (const auto& m : mappings_) {
        if (std::find(out.begin(), out.end(), m.group) == out.end()) out.push_back(m.group);
    }
    return out;
}

bool PreferenceTaxonomy::is_signal(const PreferenceLabel& label) const {
    for (const auto& m : mappings_) {
        if (m.group == label.group && m.preference == label.preference) return m.signal;
    }
    return false;
}

std::vector<PreferenceLabel> PreferenceTaxonomy::recognize(std::string_view text) const {
    std::string lower = to_lower_ascii(text);
    std::map<std::string, std::set<std::string>> per_group;
    for (const auto& [label, phrases] : cues_) {
        for (const auto& p : phrases) {
            if (contains_phrase(lower, p)) {
                per_group[label.group].insert(label.preference);
                break;
            }
        }
    }
    std::vector<PreferenceLabel> out;
    for (const auto& group : groups()) {
        auto it = per_group.find(group);
        if (it != per_group.end() && it->second.size() == 1) out.push_back({group, *it->second.begin()});
    }
    return out;
}

PreferenceTaxonomy PreferenceTaxonomy::merge(const PreferenceTaxonomy& a, const PreferenceTaxonomy& b) {
    std::vector<PreferenceMapping> all = a.mappings_;
    all.insert(all.end(), b.mappings_.begin(), b.mappings_.end());
    auto cues = a.cues_;
    for (const auto& [label, phrases] : b.cues_) {
        auto& dst = cues[label];
        for (const auto& p : phrases) {
            if (std::find(dst.begin(), dst.end(), p) == dst.end()) dst.push_back(p);
        }
    }
    return PreferenceTaxonomy(a.taxonomy_id_ + "+" + b.taxonomy_id_, std::move(all), std::move(cues));
}

PreferenceTaxonomy load_taxonomy(const nlohmann::json& doc) {
    try {
        std::vector<PreferenceMapping> mappings;
        for (const auto& row : doc.at("rows")) {
            PreferenceMapping m;
            m.group = row.at("group").get<std::string>();
            m.preference = row.at("preference").get<std::string>();
            m.domain = row.at("domain").get<std::string>();
            m.slot = row.at("slot").get<std::string>();
            for (const auto& v : row.at("values")) m.values.push_back(value_from_json(v));
            m.signal = row.value("signal", true);
            mappings.push_back(std::move(m));
        }
        std::map<PreferenceLabel, std::vector<std::string>> cues;
        if (doc.contains("cues")) {
            for (const auto& c : doc.at("cues")) {
                PreferenceLabel label{c.at("group").get<std::string>(), c.at("preference").get<std::string>()};
                cues[label] = c.at("phrases").get<std::vector<std::string>>();
            }
        }
        return PreferenceTaxonomy(doc.at("taxonomy_id").get<std::string>(), std::move(mappings), std::move(cues));
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed taxonomy document: ") + e.what());
    }
}

PreferenceTaxonomy load_taxonomy_file(const std::filesystem::path& path) { return load_taxonomy(read_json_file(path)); }

std::optional<PreferenceLabel> classify_argument(std::string_view domain,
                                                 std::string_view slot,
                                                 const Value& value,
                                                 const PreferenceTaxonomy& taxonomy) {
    if (const auto* m = taxonomy.find(domain, slot, value)) return m->label();
    return std::nullopt;
}

std::vector<EvidenceRecord> aggregate_evidence(std::span<const ApiCall> calls, const PreferenceTaxonomy& taxonomy) {
    struct SlotTally {
        const PreferenceMapping* mapping = nullptr;
        std::map<std::size_t, std::size_t> per_member;  // taxonomy member index -> count
    };
    std::map<PreferenceLabel, std::map<std::pair<std::string, std::string>, SlotTally>> tally;
    for (const auto& call : calls) {
        for (const auto& [slot, value] : call.args) {
            const PreferenceMapping* m = taxonomy.find(call.domain, slot, value);
            if (!m || !m->signal) continue;
            std::size_t member = 0;
            while (!values_match(m->values[member], value)) ++member;
            auto& st = tally[m->label()][{call.domain, slot}];
            st.mapping = m;
            ++st.per_member[member];
        }
    }
    std::vector<EvidenceRecord> out;
    for (const auto& [label, slots] : tally) {
        EvidenceRecord rec{label.group, label.preference, 0, {}};
        for (const auto& [key, st] : slots) {
            SlotEvidence se{key.first, key.second, {}};
            for (const auto& [member, count] : st.per_member) {
                se.values.push_back({st.mapping->values[member], count});
                rec.count += count;
            }
            std::sort(se.values.begin(), se.values.end(),
                      [](const ValueCount& a, const ValueCount& b) { return value_less(a.value, b.value); });
            rec.per_slot.push_back(std::move(se));
        }
        out.push_back(std::move(rec));
    }
    std::sort(out.begin(), out.end(), [](const EvidenceRecord& a, const EvidenceRecord& b) {
        return std::tie(b.count, a.group, a.preference) < std::tie(a.count, b.group, b.preference);
    });
    return out;
}

std::optional<std::pair<std::string, std::size_t>> dominant_preference(std::span<const EvidenceRecord> records,
                                                                       std::string_view group) {
    const EvidenceRecord* best = nullptr;
    bool tied = false;
    for (const auto& r : records) {
        if (r.group != group || r.count == 0) continue;
        if (!best || r.count > best->count) {
            best = &r;
            tied = false;
        } else if (r.count == best->count) {
            tied = true;
        }
    }
    if (!best || tied) return std::nullopt;
    return std::make_pair(best->preference, best->count);
}

const EvidenceRecord* find_evidence(std::span<const EvidenceRecord> records, const PreferenceLabel& label) {
    for (const auto& r : records) {
        if (r.group == label.group && r.preference == label.preference) return &r;
    }
    return nullptr;
}

nlohmann::ordered_json evidence_to_json(std::span<const EvidenceRecord> records) {
    nlohmann::ordered_json out = nlohmann::ordered_json::array();
    for (const auto& r : records) {
        nlohmann::ordered_json evidence = nlohmann::ordered_json::array();
        for (const auto& se : r.per_slot) {
            nlohmann::ordered_json values = nlohmann::ordered_json::array();
            for (const auto& vc : se.values) {
                nlohmann::ordered_json entry;
                entry["value"] = value_to_json(vc.value);
                entry["count"] = vc.count;
                values.push_back(std::move(entry));
            }
            nlohmann::ordered_json slot;
            slot["domain"] = se.domain;
            slot["slot"] = se.slot;
            slot["values"] = std::move(values);
            evidence.push_back(std::move(slot));
        }
        nlohmann::ordered_json rec;
        rec["group_preference"] = r.group;
        rec["value_group"] = r.preference;
        rec["count"] = r.count;
        rec["evidence"] = std::move(evidence);
        out.push_back(std::move(rec));
    }
    return out;
}

std::vector<EvidenceRecord> evidence_from_json(const nlohmann::json& doc) {
    const nlohmann::json& arr = doc.is_object() && doc.contains("api_calls_pref") ? doc.at("api_calls_pref") : doc;
    std::vector<EvidenceRecord> out;
    try {
        for (const auto& r : arr) {
            EvidenceRecord rec;
            rec.group = r.at("group_preference").get<std::string>();
            rec.preference = r.at("value_group").get<std::string>();
            rec.count = r.at("count").get<std::size_t>();
            for (const auto& e : r.value("evidence", nlohmann::json::array())) {
                SlotEvidence se{e.at("domain").get<std::string>(), e.at("slot").get<std::string>(), {}};
                if (e.contains("values")) {
                    for (const auto& vc : e.at("values")) {
                        se.values.push_back({value_from_json(vc.at("value")), vc.value("count", std::size_t{1})});
                    }
                } else {
                    se.values.push_back({value_from_json(e.at("value")), e.value("count", std::size_t{1})});
                }
                rec.per_slot.push_back(std::move(se));
            }
            out.push_back(std::move(rec));
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed evidence record: ") + e.what());
    }
    return out;
}

}  // namespace prefbench
