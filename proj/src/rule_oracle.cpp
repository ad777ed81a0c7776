#include "prefbench/rule_oracle.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <regex>
#include <set>
#include <sstream>
#include <tuple>

namespace prefbench {

namespace {

const std::regex& fragment_pattern() {
    static const std::regex re(R"re((\w+)\s*=\s*("[^"]*"|'[^']*'|[^\s,.;)]+))re");
    return re;
}

const std::regex& detect_pattern() {
    static const std::regex re(R"re(\w+\s*=\s*\S)re");
    return re;
}

std::vector<std::string> split_sentences(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (std::size_t i = 0; i < text.size(); ++i) {
        cur += text[i];
        bool end = (text[i] == '.' || text[i] == '!' || text[i] == '?') && (i + 1 == text.size() || text[i + 1] == ' ');
        if (end) {
            auto first = cur.find_first_not_of(' ');
            if (first != std::string::npos) out.push_back(cur.substr(first));
            cur.clear();
        }
    }
    auto first = cur.find_first_not_of(' ');
    if (first != std::string::npos) out.push_back(cur.substr(first));
    return out;
}

std::string join(const std::vector<std::string>& parts, const char* sep) {
    std::string out;
    for (const auto& p : parts) {
        if (!out.empty()) out += sep;
        out += p;
    }
    return out;
}

std::string label_name(const PreferenceLabel& l) { return l.group + "/" + l.preference; }

}  // namespace

RuleOracleBackend::RuleOracleBackend(ApiSchema schema, PreferenceTaxonomy taxonomy, std::size_t window)
    : schema_(std::move(schema)), taxonomy_(std::move(taxonomy)), window_(window) {
    if (window_ < 1) throw ConfigError("recency window must be at least 1");
}

std::string RuleOracleBackend::identity() const { return fmt::format("rule-oracle(window={})", window_); }

std::string RuleOracleBackend::template_for(const PreferenceLabel& label) {
    if (label.preference == "low_cost") return "User consistently prefers low-cost, budget-friendly options across services.";
    if (label.preference == "high_cost") return "User consistently prefers premium, high-cost options across services.";
    if (label.preference == "solo_usage") return "User consistently books for one person.";
    std::string words = label.preference;
    std::replace(words.begin(), words.end(), '_', ' ');
    return "User consistently shows a " + words + " preference.";
}

std::vector<ApiCall> RuleOracleBackend::Snapshot::all_calls() const {
    std::vector<ApiCall> out;
    for (const auto& s : sessions) out.insert(out.end(), s.begin(), s.end());
    return out;
}

std::vector<ApiCall> RuleOracleBackend::Snapshot::window_calls(std::size_t k) const {
    std::vector<ApiCall> out;
    std::size_t start = sessions.size() > k ? sessions.size() - k : 0;
    for (std::size_t i = start; i < sessions.size(); ++i) out.insert(out.end(), sessions[i].begin(), sessions[i].end());
    return out;
}

RuleOracleBackend::Snapshot RuleOracleBackend::record(const SessionContext& ctx) {
    return Snapshot{store_.record(ctx)};
}

bool RuleOracleBackend::has_slot_fragment(const std::string& text) { return std::regex_search(text, detect_pattern()); }

std::vector<PreferenceLabel> RuleOracleBackend::named_preferences(const std::string& text) const {
    std::set<PreferenceLabel> found;
    for (const auto& l : taxonomy_.recognize(text)) found.insert(l);
    for (auto it = std::sregex_iterator(text.begin(), text.end(), fragment_pattern()); it != std::sregex_iterator(); ++it) {
        std::string slot = (*it)[1].str();
        std::string raw = (*it)[2].str();
        Value v = (raw.size() >= 2 && (raw.front() == '"' || raw.front() == '\'')) ? Value::text(raw.substr(1, raw.size() - 2), true)
                                                                                  : Value::bare(raw);
        for (const auto* m : taxonomy_.find_by_slot(slot, v)) found.insert(m->label());
    }
    // taxonomy group order, then preference name
    auto groups = taxonomy_.groups();
    std::vector<PreferenceLabel> out(found.begin(), found.end());
    std::stable_sort(out.begin(), out.end(), [&](const PreferenceLabel& a, const PreferenceLabel& b) {
        auto ga = std::find(groups.begin(), groups.end(), a.group) - groups.begin();
        auto gb = std::find(groups.begin(), groups.end(), b.group) - groups.begin();
        return std::tie(ga, a.preference) < std::tie(gb, b.preference);
    });
    return out;
}

std::vector<PreferenceLabel> RuleOracleBackend::dominant_labels(const std::vector<EvidenceRecord>& evidence,
                                                                std::size_t min_count) const {
    std::vector<PreferenceLabel> out;
    for (const auto& group : taxonomy_.groups()) {
        auto dom = dominant_preference(evidence, group);
        if (dom && dom->second >= min_count) out.push_back({group, dom->first});
    }
    return out;
}

std::string RuleOracleBackend::compose(const std::vector<PreferenceLabel>& labels) const {
    auto groups = taxonomy_.groups();
    std::vector<PreferenceLabel> ordered;
    for (const auto& g : groups) {
        for (const auto& l : labels) {
            if (l.group == g) {
                ordered.push_back(l);
                break;
            }
        }
    }
    std::vector<std::string> sentences;
    for (const auto& l : ordered) sentences.push_back(template_for(l));
    return join(sentences, " ");
}

std::string RuleOracleBackend::fallback(const std::vector<ApiCall>& calls) const {
    std::map<std::pair<std::string, std::string>, std::size_t> counts;
    for (const auto& c : calls) {
        for (const auto& [slot, value] : c.args) {
            if (!is_time_or_location_argument(slot)) ++counts[{slot, value.render()}];
        }
    }
    if (counts.empty()) return "User has shown no stable preference yet.";
    auto best = counts.begin();
    for (auto it = counts.begin(); it != counts.end(); ++it) {
        if (it->second > best->second) best = it;
    }
    return "User prefers " + best->first.first + "=" + best->first.second + ".";
}

Verdict RuleOracleBackend::judge(const std::string& text, const std::vector<std::vector<ApiCall>>& sessions) const {
    auto named = named_preferences(text);
    std::vector<ApiCall> all;
    for (const auto& s : sessions) all.insert(all.end(), s.begin(), s.end());
    auto all_ev = aggregate_evidence(all, taxonomy_);

    std::vector<std::string> notes;

    bool evidence_ok = true;
    for (const auto& l : named) {
        const EvidenceRecord* rec = find_evidence(all_ev, l);
        std::size_t count = rec ? rec->count : 0;
        std::size_t with = 0;
        for (const auto& s : sessions) {
            auto ev = aggregate_evidence(s, taxonomy_);
            if (find_evidence(ev, l)) ++with;
        }
        if (count < 2 && with < 2) {
            evidence_ok = false;
            notes.push_back(fmt::format("{} is supported by {} interaction(s) in {} session(s); at least two are needed.",
                                        label_name(l), count, with));
        }
    }

    bool fragment = has_slot_fragment(text);
    bool abstraction_ok = !named.empty() && !fragment;
    if (named.empty()) notes.push_back("The hypothesis names no recognizable preference.");
    if (fragment) notes.push_back("The hypothesis restates a literal slot=value instead of a general constraint.");

    bool action_ok = true;
    for (const auto& l : named) {
        bool any = false;
        for (const auto* m : taxonomy_.mappings_for(l)) {
            const DomainSchema* d = schema_.find(m->domain);
            if (d && d->find(m->slot)) any = true;
        }
        if (!any) {
            action_ok = false;
            notes.push_back(fmt::format("{} does not constrain any argument of the active schema.", label_name(l)));
        }
    }

    bool temporal_ok = true;
    std::size_t start = sessions.size() > window_ ? sessions.size() - window_ : 0;
    std::vector<ApiCall> recent;
    for (std::size_t i = start; i < sessions.size(); ++i) recent.insert(recent.end(), sessions[i].begin(), sessions[i].end());
    auto recent_ev = aggregate_evidence(recent, taxonomy_);
    for (const auto& l : named) {
        bool group_seen = std::any_of(recent_ev.begin(), recent_ev.end(), [&](const EvidenceRecord& r) { return r.group == l.group; });
        if (!group_seen) continue;
        auto dom = dominant_preference(recent_ev, l.group);
        if (!dom || dom->first != l.preference) {
            temporal_ok = false;
            notes.push_back(dom ? fmt::format("Recent sessions favour {}/{}, not {}.", l.group, dom->first, l.preference)
                                : fmt::format("Recent sessions are split within {}.", l.group));
        }
    }

    std::string feedback = notes.empty() ? "Stable and memory-worthy preference." : join(notes, " ");
    return Verdict({evidence_ok, abstraction_ok, action_ok, temporal_ok}, feedback);
}

std::string RuleOracleBackend::generate(const SessionContext& ctx) {
    Snapshot snap = record(ctx);
    auto all = snap.all_calls();
    auto ev = aggregate_evidence(all, taxonomy_);
    auto labels = dominant_labels(ev, 1);
    if (labels.empty()) return fallback(all);
    return compose(labels);
}

Verdict RuleOracleBackend::verify(const SessionContext& ctx, const Hypothesis& candidate) {
    Snapshot snap = record(ctx);
    return judge(candidate.text, snap.sessions);
}

std::string RuleOracleBackend::refine(const SessionContext& ctx, const Hypothesis& candidate, const Verdict& verdict) {
    Snapshot snap = record(ctx);
    auto all = snap.all_calls();
    auto all_ev = aggregate_evidence(all, taxonomy_);
    auto failure = verdict.first_failure();
    if (!failure) return candidate.text;

    std::string out;
    switch (*failure) {
        case Criterion::evidence_support: {
            out = compose(dominant_labels(all_ev, 2));
            break;
        }
        case Criterion::abstraction_quality: {
            auto named = named_preferences(candidate.text);
            std::vector<PreferenceLabel> labels;
            if (named.empty()) {
                labels = dominant_labels(all_ev, 1);
            } else {
                for (const auto& l : named) {
                    auto dom = dominant_preference(all_ev, l.group);
                    labels.push_back(dom ? PreferenceLabel{l.group, dom->first} : l);
                }
            }
            out = compose(labels);
            break;
        }
        case Criterion::actionability: {
            std::vector<std::string> kept;
            for (const auto& sentence : split_sentences(candidate.text)) {
                bool ok = true;
                for (const auto& l : named_preferences(sentence)) {
                    bool any = false;
                    for (const auto* m : taxonomy_.mappings_for(l)) {
                        const DomainSchema* d = schema_.find(m->domain);
                        if (d && d->find(m->slot)) any = true;
                    }
                    ok = ok && any;
                }
                if (ok) kept.push_back(sentence);
            }
            out = join(kept, " ");
            break;
        }
        case Criterion::temporal_consistency: {
            auto recent_ev = aggregate_evidence(snap.window_calls(window_), taxonomy_);
            std::vector<PreferenceLabel> labels;
            for (const auto& l : named_preferences(candidate.text)) {
                auto dom = dominant_preference(recent_ev, l.group);
                labels.push_back(dom ? PreferenceLabel{l.group, dom->first} : l);
            }
            out = compose(labels);
            break;
        }
    }
    if (out.empty()) out = fallback(all);
    return out;
}

}  // namespace prefbench
