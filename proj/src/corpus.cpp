#include "prefbench/corpus.hpp"

#include "prefbench/error.hpp"
#include "prefbench/json_io.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>

namespace prefbench {

std::string_view to_string(Speaker s) { return s == Speaker::user ? "user" : "agent"; }

std::string_view to_string(QueryType q) { return q == QueryType::context_guided ? "context_guided" : "context_free"; }

std::string_view to_string(ModelingType m) {
    switch (m) {
        case ModelingType::recall: return "recall";
        case ModelingType::induction: return "induction";
        case ModelingType::transfer: return "transfer";
    }
    return "recall";
}

Speaker parse_speaker(std::string_view s) {
    std::string t = to_lower_ascii(s);
    if (t == "user" || t == "u") return Speaker::user;
    if (t == "agent" || t == "system" || t == "assistant" || t == "a") return Speaker::agent;
    throw DataError("unknown speaker '" + std::string(s) + "'");
}

QueryType parse_query_type(std::string_view s) {
    std::string t = to_lower_ascii(s);
    std::replace(t.begin(), t.end(), '-', '_');
    if (t == "context_guided") return QueryType::context_guided;
    if (t == "context_free") return QueryType::context_free;
    throw DataError("unknown query type '" + std::string(s) + "'");
}

ModelingType parse_modeling_type(std::string_view s) {
    std::string t = to_lower_ascii(s);
    if (t.rfind("preference ", 0) == 0) t = t.substr(11);
    if (t == "recall") return ModelingType::recall;
    if (t == "induction") return ModelingType::induction;
    if (t == "transfer") return ModelingType::transfer;
    throw DataError("unknown modeling type '" + std::string(s) + "'");
}

std::vector<ApiCall> Session::calls() const {
    std::vector<ApiCall> out;
    for (const auto& t : turns) out.insert(out.end(), t.calls.begin(), t.calls.end());
    return out;
}

Dialogue::Dialogue(std::string dialogue_id, std::vector<Session> sessions)
    : dialogue_id_(std::move(dialogue_id)), sessions_(std::move(sessions)) {
    for (std::size_t i = 0; i < sessions_.size(); ++i) {
        const auto& s = sessions_[i];
        if (s.turns.empty()) throw DataError("dialogue " + dialogue_id_ + ": session " + s.session_id + " has no turns");
        for (const auto& t : s.turns) {
            if (t.speaker == Speaker::user && !t.calls.empty()) {
                throw DataError("dialogue " + dialogue_id_ + ": user turn in session " + s.session_id + " carries calls");
            }
            for (const auto& c : t.calls) api_call_list_.push_back({i, c});
        }
    }
}

std::vector<ApiCall> Dialogue::history_calls() const {
    std::vector<ApiCall> out;
    out.reserve(api_call_list_.size());
    for (const auto& ic : api_call_list_) out.push_back(ic.call);
    return out;
}

std::size_t Dialogue::turn_count() const {
    std::size_t n = 0;
    for (const auto& s : sessions_) n += s.turns.size();
    return n;
}

std::vector<std::string> QueryInstance::invariant_violations() const {
    std::vector<std::string> out;
    for (const auto& [arg, values] : preference_args) {
        if (explicit_args.count(arg)) out.push_back("argument '" + arg + "' is both explicit and preference-driven");
        if (!gold_call.args.count(arg)) out.push_back("preference argument '" + arg + "' missing from gold call");
        if (values.empty()) out.push_back("preference argument '" + arg + "' has an empty value set");
    }
    for (const auto& arg : explicit_args) {
        if (!gold_call.args.count(arg)) out.push_back("explicit argument '" + arg + "' missing from gold call");
    }
    if (query_type == QueryType::context_free && !explicit_args.empty()) {
        out.push_back("context-free instance lists explicit arguments");
    }
    if (gold_call.domain != target_domain) {
        out.push_back("gold call domain " + gold_call.domain + " differs from target domain " + target_domain);
    }
    if (gold_call.args.empty()) out.push_back("gold call has no arguments");
    return out;
}

const Dialogue* Corpus::find_dialogue(std::string_view id) const {
    for (const auto& d : dialogues) {
        if (d.id() == id) return &d;
    }
    return nullptr;
}

bool is_time_or_location_argument(std::string_view name) {
    static constexpr std::string_view kWords[] = {"date", "time", "location", "city", "origin", "destination", "area"};
    std::size_t start = 0;
    while (start <= name.size()) {
        std::size_t end = name.find('_', start);
        std::string_view word = name.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
        for (auto w : kWords) {
            if (word == w) return true;
        }
        if (end == std::string_view::npos) break;
        start = end + 1;
    }
    return false;
}

nlohmann::json turn_to_json(const Turn& t) {
    nlohmann::json calls = nlohmann::json::array();
    for (const auto& c : t.calls) calls.push_back(call_to_json(c));
    return {{"speaker", std::string(to_string(t.speaker))}, {"text", t.text}, {"calls", std::move(calls)}};
}

Turn turn_from_json(const nlohmann::json& j) {
    Turn t;
    t.speaker = parse_speaker(j.at("speaker").get<std::string>());
    t.text = j.at("text").get<std::string>();
    if (j.contains("calls")) {
        for (const auto& c : j.at("calls")) t.calls.push_back(call_from_json(c));
    }
    return t;
}

nlohmann::json session_to_json(const Session& s) {
    nlohmann::json turns = nlohmann::json::array();
    for (const auto& t : s.turns) turns.push_back(turn_to_json(t));
    return {{"session_id", s.session_id}, {"turns", std::move(turns)}};
}

Session session_from_json(const nlohmann::json& j) {
    Session s;
    s.session_id = j.at("session_id").get<std::string>();
    for (const auto& t : j.at("turns")) s.turns.push_back(turn_from_json(t));
    return s;
}

nlohmann::json instance_to_json(const QueryInstance& q) {
    nlohmann::json turns = nlohmann::json::array();
    for (const auto& t : q.query_turns) turns.push_back(turn_to_json(t));
    nlohmann::json prefs = nlohmann::json::object();
    for (const auto& [arg, values] : q.preference_args) {
        nlohmann::json vs = nlohmann::json::array();
        for (const auto& v : values) vs.push_back(value_to_json(v));
        prefs[arg] = std::move(vs);
    }
    return {{"instance_id", q.instance_id},
            {"dialogue_id", q.dialogue_id},
            {"query_type", std::string(to_string(q.query_type))},
            {"query_turns", std::move(turns)},
            {"target_domain", q.target_domain},
            {"gold_call", call_to_json(q.gold_call)},
            {"explicit_args", q.explicit_args},
            {"preference_args", std::move(prefs)},
            {"modeling_type", q.modeling_type ? nlohmann::json(std::string(to_string(*q.modeling_type))) : nlohmann::json()}};
}

namespace {

QueryInstance instance_from_json(const nlohmann::json& j) {
    QueryInstance q;
    q.instance_id = j.at("instance_id").get<std::string>();
    q.dialogue_id = j.at("dialogue_id").get<std::string>();
    q.query_type = parse_query_type(j.at("query_type").get<std::string>());
    for (const auto& t : j.at("query_turns")) q.query_turns.push_back(turn_from_json(t));
    q.gold_call = call_from_json(j.at("gold_call"));
    q.target_domain = j.value("target_domain", q.gold_call.domain);
    for (const auto& a : j.value("explicit_args", nlohmann::json::array())) q.explicit_args.insert(a.get<std::string>());
    for (const auto& [arg, values] : j.at("preference_args").items()) {
        auto& dst = q.preference_args[arg];
        if (values.is_array()) {
            for (const auto& v : values) dst.push_back(value_from_json(v));
        } else {
            dst.push_back(value_from_json(values));
        }
    }
    if (j.contains("modeling_type") && !j.at("modeling_type").is_null()) {
        q.modeling_type = parse_modeling_type(j.at("modeling_type").get<std::string>());
    }
    return q;
}

void check_calls(const std::vector<ApiCall>& calls, const ApiSchema& schema, const std::string& where,
                 std::vector<std::string>& errors) {
    for (const auto& c : calls) {
        auto v = validate_call(c, schema);
        if (!v) errors.push_back(where + ": schema violation in " + render_call(c) + ": " + v.describe());
    }
}

}  // namespace

CorpusLoadResult load_corpus_collecting(const nlohmann::json& doc, const ApiSchema& schema) {
    CorpusLoadResult result;
    auto& errors = result.errors;
    if (!doc.is_object() || !doc.contains("dialogues") || !doc.contains("instances")) {
        errors.push_back("corpus document needs top-level `dialogues` and `instances`");
        return result;
    }
    std::set<std::string> dialogue_ids;
    for (std::size_t i = 0; i < doc.at("dialogues").size(); ++i) {
        const auto& dj = doc.at("dialogues")[i];
        std::string where = "dialogue #" + std::to_string(i);
        try {
            std::string id = dj.at("dialogue_id").get<std::string>();
            where = "dialogue " + id;
            std::vector<Session> sessions;
            for (const auto& sj : dj.at("sessions")) sessions.push_back(session_from_json(sj));
            Dialogue d(id, std::move(sessions));
            std::size_t before = errors.size();
            check_calls(d.history_calls(), schema, where, errors);
            if (dj.contains("api_call_list")) {
                std::vector<ApiCall> stored;
                for (const auto& c : dj.at("api_call_list")) {
                    stored.push_back(call_from_json(c.is_object() && c.contains("call") ? c.at("call") : c));
                }
                if (stored != d.history_calls()) {
                    errors.push_back(where + ": stored api_call_list disagrees with the calls in its sessions");
                }
            }
            if (!dialogue_ids.insert(id).second) errors.push_back(where + ": duplicate dialogue id");
            if (errors.size() == before) result.corpus.dialogues.push_back(std::move(d));
        } catch (const nlohmann::json::exception& e) {
            errors.push_back(where + ": malformed record: " + e.what());
        } catch (const DataError& e) {
            errors.push_back(where + ": " + e.what());
        }
    }
    std::set<std::string> instance_ids;
    for (std::size_t i = 0; i < doc.at("instances").size(); ++i) {
        const auto& ij = doc.at("instances")[i];
        std::string where = "instance #" + std::to_string(i);
        try {
            QueryInstance q = instance_from_json(ij);
            where = "instance " + q.instance_id;
            std::size_t before = errors.size();
            if (!dialogue_ids.count(q.dialogue_id)) {
                errors.push_back(where + ": dangling reference to dialogue '" + q.dialogue_id + "'");
            }
            check_calls({q.gold_call}, schema, where, errors);
            for (const auto& v : q.invariant_violations()) errors.push_back(where + ": " + v);
            if (!instance_ids.insert(q.instance_id).second) errors.push_back(where + ": duplicate instance id");
            if (errors.size() == before) result.corpus.instances.push_back(std::move(q));
        } catch (const nlohmann::json::exception& e) {
            errors.push_back(where + ": malformed record: " + e.what());
        } catch (const DataError& e) {
            errors.push_back(where + ": " + e.what());
        }
    }
    return result;
}

Corpus load_corpus(const nlohmann::json& doc, const ApiSchema& schema) {
    auto result = load_corpus_collecting(doc, schema);
    if (!result.errors.empty()) {
        std::string msg = "corpus has " + std::to_string(result.errors.size()) + " error(s)";
        for (std::size_t i = 0; i < result.errors.size() && i < 5; ++i) msg += "\n  " + result.errors[i];
        throw DataError(msg);
    }
    return std::move(result.corpus);
}

Corpus load_corpus_file(const std::filesystem::path& path, const ApiSchema& schema) {
    return load_corpus(read_json_file(path), schema);
}

nlohmann::json corpus_to_json(const Corpus& corpus) {
    nlohmann::json dialogues = nlohmann::json::array();
    for (const auto& d : corpus.dialogues) {
        nlohmann::json sessions = nlohmann::json::array();
        for (const auto& s : d.sessions()) sessions.push_back(session_to_json(s));
        dialogues.push_back({{"dialogue_id", d.id()}, {"sessions", std::move(sessions)}});
    }
    nlohmann::json instances = nlohmann::json::array();
    for (const auto& q : corpus.instances) instances.push_back(instance_to_json(q));
    return {{"dialogues", std::move(dialogues)}, {"instances", std::move(instances)}};
}

Dialogue assemble_dialogue(const GroupingManifest& manifest, const SessionStore& sessions) {
    if (manifest.session_ids.empty()) throw DataError("manifest " + manifest.dialogue_id + " lists no sessions");
    std::set<std::string> seen;
    std::vector<Session> ordered;
    for (const auto& id : manifest.session_ids) {
        if (!seen.insert(id).second) throw DataError("manifest " + manifest.dialogue_id + " repeats session " + id);
        auto it = sessions.find(id);
        if (it == sessions.end()) throw DataError("manifest " + manifest.dialogue_id + " names unknown session " + id);
        ordered.push_back(it->second);
    }
    return Dialogue(manifest.dialogue_id, std::move(ordered));
}

namespace {

// Calls f(name) for every {name} placeholder; returns the rendered text.
template <typename F>
std::string render_placeholders(std::string_view text, F&& resolve) {
    std::string out;
    std::size_t i = 0;
    while (i < text.size()) {
        if (text[i] == '{') {
            std::size_t close = text.find('}', i);
            if (close == std::string_view::npos) throw DataError("unterminated placeholder in '" + std::string(text) + "'");
            out += resolve(std::string(text.substr(i + 1, close - i - 1)));
            i = close + 1;
        } else {
            out.push_back(text[i++]);
        }
    }
    return out;
}

std::set<std::string> placeholders_in(const std::vector<Turn>& turns) {
    std::set<std::string> names;
    for (const auto& t : turns) {
        render_placeholders(t.text, [&](const std::string& name) {
            names.insert(name);
            return std::string();
        });
    }
    return names;
}

}  // namespace

QueryTemplate load_query_template(const nlohmann::json& j, const ApiSchema& schema) {
    QueryTemplate t;
    try {
        t.template_id = j.at("template_id").get<std::string>();
        t.target_domain = j.at("target_domain").get<std::string>();
        t.query_type = parse_query_type(j.at("query_type").get<std::string>());
        for (const auto& tj : j.at("turns")) {
            t.turn_skeletons.push_back({parse_speaker(tj.at("speaker").get<std::string>()), tj.at("text").get<std::string>(), {}});
        }
        for (const auto& a : j.at("omitted_args")) t.omitted_args.insert(a.get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed query template: ") + e.what());
    }
    const std::string where = "template " + t.template_id;
    const DomainSchema* domain = schema.find(t.target_domain);
    if (!domain) throw DataError(where + ": unknown target domain " + t.target_domain);
    if (t.omitted_args.empty()) throw DataError(where + ": omits no argument");
    for (const auto& a : t.omitted_args) {
        if (!domain->find(a)) throw DataError(where + ": omitted argument '" + a + "' is not in " + t.target_domain);
        if (is_time_or_location_argument(a)) throw DataError(where + ": may not omit time/location argument '" + a + "'");
    }
    if (t.query_type == QueryType::context_free) {
        for (const auto& name : placeholders_in(t.turn_skeletons)) {
            if (domain->find(name)) throw DataError(where + ": context-free template states argument '" + name + "'");
        }
    }
    return t;
}

QueryInstance instantiate_query(const QueryTemplate& tmpl,
                                const std::map<std::string, std::string>& bindings,
                                const ApiCall& gold_call,
                                const PreferenceTaxonomy& taxonomy) {
    const std::string where = "template " + tmpl.template_id;
    if (gold_call.domain != tmpl.target_domain) {
        throw DataError(where + ": gold call targets " + gold_call.domain + ", template targets " + tmpl.target_domain);
    }
    for (const auto& a : tmpl.omitted_args) {
        if (!gold_call.args.count(a)) throw DataError(where + ": omitted argument '" + a + "' absent from gold call");
    }
    QueryInstance q;
    q.query_type = tmpl.query_type;
    q.target_domain = tmpl.target_domain;
    q.gold_call = gold_call;
    std::set<std::string> used;
    for (const auto& skeleton : tmpl.turn_skeletons) {
        Turn t{skeleton.speaker, {}, {}};
        t.text = render_placeholders(skeleton.text, [&](const std::string& name) {
            auto it = bindings.find(name);
            if (it == bindings.end()) throw DataError(where + ": unbound placeholder {" + name + "}");
            used.insert(name);
            return it->second;
        });
        q.query_turns.push_back(std::move(t));
    }
    for (const auto& name : used) {
        auto gold = gold_call.args.find(name);
        if (gold == gold_call.args.end() || tmpl.omitted_args.count(name)) continue;
        if (!values_match(Value::bare(bindings.at(name)), gold->second)) {
            throw DataError(where + ": placeholder {" + name + "} bound to '" + bindings.at(name) +
                            "' but gold value is '" + gold->second.plain() + "'");
        }
        q.explicit_args.insert(name);
    }
    if (q.query_type == QueryType::context_free) q.explicit_args.clear();
    for (const auto& a : tmpl.omitted_args) {
        const Value& gold = gold_call.args.at(a);
        if (const auto* m = taxonomy.find(tmpl.target_domain, a, gold)) {
            q.preference_args[a] = m->values;
        } else {
            q.preference_args[a] = {gold};
        }
    }
    return q;
}

ModelingType classify_modeling_type(const QueryInstance& instance,
                                    const Dialogue& dialogue,
                                    const PreferenceTaxonomy& taxonomy,
                                    std::size_t recall_min) {
    if (recall_min < 2) throw ConfigError("recall_min must be at least 2");
    if (instance.preference_args.empty()) {
        throw DataError("instance " + instance.instance_id + " has no preference arguments");
    }
    const auto& history = dialogue.api_call_list();
    const std::string& target = instance.target_domain;
    bool target_seen = std::any_of(history.begin(), history.end(),
                                   [&](const IndexedCall& ic) { return ic.call.domain == target; });
    ModelingType hardest = ModelingType::recall;
    for (const auto& [arg, value_set] : instance.preference_args) {
        std::size_t hits = 0;
        for (const auto& ic : history) {
            if (ic.call.domain != target) continue;
            auto it = ic.call.args.find(arg);
            if (it == ic.call.args.end()) continue;
            if (std::any_of(value_set.begin(), value_set.end(), [&](const Value& v) { return values_match(v, it->second); })) {
                ++hits;
            }
        }
        ModelingType type = ModelingType::induction;
        if (hits >= recall_min) {
            type = ModelingType::recall;
        } else if (!target_seen) {
            auto gold = instance.gold_call.args.find(arg);
            const PreferenceMapping* m =
                gold == instance.gold_call.args.end() ? nullptr : taxonomy.find(target, arg, gold->second);
            bool cross_domain = false;
            if (m && m->signal) {
                for (const auto& ic : history) {
                    for (const auto& [slot, value] : ic.call.args) {
                        const PreferenceMapping* other = taxonomy.find(ic.call.domain, slot, value);
                        if (other && other->signal && other->label() == m->label()) cross_domain = true;
                    }
                }
            }
            if (cross_domain) type = ModelingType::transfer;
        }
        hardest = std::max(hardest, type);
    }
    return hardest;
}

std::vector<LabelDisagreement> label_instances(Corpus& corpus, const PreferenceTaxonomy& taxonomy, std::size_t recall_min) {
    std::vector<LabelDisagreement> out;
    for (auto& q : corpus.instances) {
        const Dialogue* d = corpus.find_dialogue(q.dialogue_id);
        if (!d) throw DataError("instance " + q.instance_id + ": dangling reference to dialogue '" + q.dialogue_id + "'");
        ModelingType computed = classify_modeling_type(q, *d, taxonomy, recall_min);
        if (!q.modeling_type) {
            q.modeling_type = computed;
        } else if (*q.modeling_type != computed) {
            out.push_back({q.instance_id, *q.modeling_type, computed});
        }
    }
    return out;
}

CorpusStats corpus_stats(const Corpus& corpus, const PreferenceTaxonomy& taxonomy) {
    CorpusStats st;
    st.dialogues = corpus.dialogues.size();
    std::size_t total_calls = 0;
    bool first = true;
    for (const auto& d : corpus.dialogues) {
        st.sessions += d.sessions().size();
        st.turns += d.turn_count();
        std::size_t calls = d.api_call_list().size();
        total_calls += calls;
        st.min_calls_per_dialogue = first ? calls : std::min(st.min_calls_per_dialogue, calls);
        st.max_calls_per_dialogue = std::max(st.max_calls_per_dialogue, calls);
        first = false;
        std::set<std::pair<std::string, std::string>> domain_groups;
        for (const auto& ic : d.api_call_list()) {
            ++st.calls_per_domain[ic.call.domain];
            for (const auto& [slot, value] : ic.call.args) {
                const PreferenceMapping* m = taxonomy.find(ic.call.domain, slot, value);
                if (m && m->signal) domain_groups.insert({ic.call.domain, m->group});
            }
        }
        for (const auto& [domain, group] : domain_groups) ++st.domain_group_dialogues[domain][group];
    }
    if (st.dialogues) {
        st.avg_sessions_per_dialogue = static_cast<double>(st.sessions) / static_cast<double>(st.dialogues);
        st.avg_calls_per_dialogue = static_cast<double>(total_calls) / static_cast<double>(st.dialogues);
    }
    if (st.sessions) st.avg_turns_per_session = static_cast<double>(st.turns) / static_cast<double>(st.sessions);
    for (auto m : {ModelingType::recall, ModelingType::induction, ModelingType::transfer}) {
        st.instances_by_modeling_type[std::string(to_string(m))] = 0;
    }
    for (auto q : {QueryType::context_guided, QueryType::context_free}) st.instances_by_query_type[std::string(to_string(q))] = 0;
    for (const auto& q : corpus.instances) {
        if (q.modeling_type) {
            ++st.instances_by_modeling_type[std::string(to_string(*q.modeling_type))];
        } else {
            ++st.unlabeled_instances;
        }
        ++st.instances_by_query_type[std::string(to_string(q.query_type))];
    }
    return st;
}

nlohmann::ordered_json CorpusStats::to_json() const {
    nlohmann::ordered_json j;
    j["dialogues"] = dialogues;
    j["sessions"] = sessions;
    j["turns"] = turns;
    j["avg_sessions_per_dialogue"] = avg_sessions_per_dialogue;
    j["avg_turns_per_session"] = avg_turns_per_session;
    j["instances_by_modeling_type"] = instances_by_modeling_type;
    j["instances_by_query_type"] = instances_by_query_type;
    j["unlabeled_instances"] = unlabeled_instances;
    j["calls_per_dialogue"] = {{"min", min_calls_per_dialogue}, {"max", max_calls_per_dialogue}, {"mean", avg_calls_per_dialogue}};
    j["calls_per_domain"] = calls_per_domain;
    j["domain_group_dialogues"] = domain_group_dialogues;
    return j;
}

std::string CorpusStats::render() const {
    std::string out;
    out += "Interaction history\n";
    out += fmt::format("  {:<28}{:>10}\n", "# Multi-session dialogues", dialogues);
    out += fmt::format("  {:<28}{:>10}\n", "# Sessions", sessions);
    out += fmt::format("  {:<28}{:>10}\n", "# Turns", turns);
    out += fmt::format("  {:<28}{:>10.1f}\n", "Avg. sessions / dialogue", avg_sessions_per_dialogue);
    out += fmt::format("  {:<28}{:>10.1f}\n", "Avg. turns / session", avg_turns_per_session);
    out += "Modeling types\n";
    for (auto m : {"recall", "induction", "transfer"}) {
        out += fmt::format("  {:<28}{:>10}\n", fmt::format("# Preference {}", m), instances_by_modeling_type.at(m));
    }
    if (unlabeled_instances) out += fmt::format("  {:<28}{:>10}\n", "# Unlabeled", unlabeled_instances);
    out += "Query types\n";
    for (const auto& [q, n] : instances_by_query_type) out += fmt::format("  {:<28}{:>10}\n", q, n);
    out += "API calls per dialogue\n";
    out += fmt::format("  {:<28}{:>10}\n", "min", min_calls_per_dialogue);
    out += fmt::format("  {:<28}{:>10.2f}\n", "mean", avg_calls_per_dialogue);
    out += fmt::format("  {:<28}{:>10}\n", "max", max_calls_per_dialogue);
    if (!domain_group_dialogues.empty()) {
        out += "Dialogues with preference evidence, by domain and group\n";
        for (const auto& [domain, groups] : domain_group_dialogues) {
            for (const auto& [group, n] : groups) out += fmt::format("  {:<20}{:<18}{:>8}\n", domain, group, n);
        }
    }
    return out;
}

}  // namespace prefbench
