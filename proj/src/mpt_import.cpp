#include "prefbench/mpt_import.hpp"

#include "prefbench/error.hpp"
#include "prefbench/json_io.hpp"

#include <spdlog/spdlog.h>

#include <fstream>
#include <initializer_list>
#include <set>

namespace prefbench {

namespace {

using nlohmann::json;

const json* field(const json& j, std::initializer_list<const char*> names) {
    if (!j.is_object()) return nullptr;
    for (const char* n : names) {
        auto it = j.find(n);
        if (it != j.end() && !it->is_null()) return &*it;
    }
    return nullptr;
}

std::string id_of(const json& j, std::initializer_list<const char*> names, const std::string& fallback) {
    const json* f = field(j, names);
    if (!f) return fallback;
    return f->is_string() ? f->get<std::string>() : f->dump();
}

std::vector<ApiCall> calls_from(const json& j) {
    std::vector<ApiCall> out;
    if (j.is_string()) {
        if (!j.get<std::string>().empty()) {
            auto parsed = parse_call(j.get<std::string>());
            out.insert(out.end(), parsed.begin(), parsed.end());
        }
    } else if (j.is_array()) {
        for (const auto& c : j) {
            auto more = calls_from(c);
            out.insert(out.end(), more.begin(), more.end());
        }
    } else if (j.is_object()) {
        // SGD-style {"method": ..., "parameters": {...}}
        if (j.contains("method") && j.contains("parameters")) {
            ApiCall call{j.at("method").get<std::string>(), {}};
            for (const auto& [k, v] : j.at("parameters").items()) {
                call.args.emplace(k, value_from_json(v.is_array() && !v.empty() ? v.front() : v));
            }
            out.push_back(std::move(call));
        } else {
            out.push_back(call_from_json(j));
        }
    }
    return out;
}

Turn turn_from(const json& j, std::size_t position) {
    Turn t;
    if (j.is_string()) {
        t.speaker = position % 2 == 0 ? Speaker::user : Speaker::agent;
        t.text = j.get<std::string>();
        return t;
    }
    const json* speaker = field(j, {"speaker", "role", "from"});
    t.speaker = speaker ? parse_speaker(speaker->get<std::string>()) : (position % 2 == 0 ? Speaker::user : Speaker::agent);
    const json* text = field(j, {"text", "utterance", "content", "value"});
    t.text = text ? text->get<std::string>() : std::string();
    if (const json* calls = field(j, {"calls", "api_calls", "api_call", "actions"})) t.calls = calls_from(*calls);
    if (const json* frames = field(j, {"frames"})) {
        for (const auto& f : *frames) {
            if (const json* sc = field(f, {"service_call"})) {
                auto more = calls_from(*sc);
                t.calls.insert(t.calls.end(), more.begin(), more.end());
            }
        }
    }
    return t;
}

Session session_from(const json& j, const std::string& fallback_id) {
    Session s;
    const json* turns = &j;
    if (j.is_object()) {
        s.session_id = id_of(j, {"session_id", "dialogue_id", "id"}, fallback_id);
        turns = field(j, {"turns", "dialogue", "utterances", "conversation"});
        if (!turns) throw DataError("session " + s.session_id + " has no turns field");
    } else {
        s.session_id = fallback_id;
    }
    for (std::size_t i = 0; i < turns->size(); ++i) s.turns.push_back(turn_from((*turns)[i], i));
    if (j.is_object()) {
        if (const json* calls = field(j, {"api_calls", "calls", "api_call_list"})) {
            auto session_calls = calls_from(*calls);
            if (!session_calls.empty()) {
                Turn* last_agent = nullptr;
                for (auto& t : s.turns) {
                    if (t.speaker == Speaker::agent) last_agent = &t;
                }
                if (!last_agent) throw DataError("session " + s.session_id + " has calls but no agent turn");
                bool already = false;
                for (const auto& t : s.turns) already = already || !t.calls.empty();
                if (!already) last_agent->calls = std::move(session_calls);
            }
        }
    }
    return s;
}

std::vector<Turn> query_turns_from(const json& j) {
    std::vector<Turn> out;
    if (j.is_string()) {
        out.push_back({Speaker::user, j.get<std::string>(), {}});
        return out;
    }
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(turn_from(j[i], i));
    return out;
}

QueryInstance query_from(const json& q, const std::string& dialogue_id, const std::string& fallback_id,
                         const PreferenceTaxonomy& taxonomy) {
    QueryInstance inst;
    inst.instance_id = id_of(q, {"instance_id", "query_id", "id"}, fallback_id);
    inst.dialogue_id = dialogue_id;
    const json* type = field(q, {"query_type", "setting", "query_setting"});
    if (!type) throw DataError("no query type");
    inst.query_type = parse_query_type(type->get<std::string>());
    const json* turns = field(q, {"query_turns", "query", "turns", "context"});
    if (!turns) throw DataError("no query turns");
    inst.query_turns = query_turns_from(*turns);
    const json* gold = field(q, {"gold_call", "answer", "gold", "label", "target_api_call", "api_call"});
    if (!gold) throw DataError("no gold call");
    auto gold_calls = calls_from(*gold);
    if (gold_calls.size() != 1) throw DataError("gold must hold exactly one call");
    inst.gold_call = gold_calls.front();
    inst.target_domain = inst.gold_call.domain;
    if (const json* mt = field(q, {"modeling_type", "reasoning_type", "preference_type"})) {
        inst.modeling_type = parse_modeling_type(mt->get<std::string>());
    }
    const json* prefs = field(q, {"preference_args", "underspecified_args", "omitted_args", "preference_arguments"});
    if (!prefs) throw DataError("no preference arguments");
    auto add_pref = [&](const std::string& arg) {
        auto g = inst.gold_call.args.find(arg);
        if (g == inst.gold_call.args.end()) throw DataError("preference argument '" + arg + "' missing from gold");
        const PreferenceMapping* m = taxonomy.find(inst.target_domain, arg, g->second);
        inst.preference_args[arg] = m ? m->values : std::vector<Value>{g->second};
    };
    if (prefs->is_array()) {
        for (const auto& a : *prefs) add_pref(a.get<std::string>());
    } else if (prefs->is_object()) {
        for (const auto& [arg, vals] : prefs->items()) {
            auto& dst = inst.preference_args[arg];
            if (vals.is_array()) {
                for (const auto& v : vals) dst.push_back(value_from_json(v));
            } else {
                dst.push_back(value_from_json(vals));
            }
        }
    } else {
        add_pref(prefs->get<std::string>());
    }
    if (inst.query_type == QueryType::context_guided) {
        if (const json* ex = field(q, {"explicit_args", "explicit_arguments"})) {
            for (const auto& a : *ex) inst.explicit_args.insert(a.get<std::string>());
        } else {
            for (const auto& [arg, v] : inst.gold_call.args) {
                if (!inst.preference_args.count(arg)) inst.explicit_args.insert(arg);
            }
        }
    }
    return inst;
}

}  // namespace

std::vector<json> read_export_records(const std::filesystem::path& path) {
    std::string text = read_text_file(path);
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error&) {
        auto lines = read_jsonl(path);
        if (lines.empty()) throw DataError(path.string() + ": neither JSON nor JSON lines");
        return lines;
    }
    if (doc.is_array()) return doc.get<std::vector<json>>();
    if (doc.is_object()) {
        for (const char* key : {"data", "records", "examples", "dialogues"}) {
            if (doc.contains(key) && doc.at(key).is_array()) return doc.at(key).get<std::vector<json>>();
        }
        std::vector<json> out;
        for (const char* split : {"train", "validation", "test"}) {
            if (doc.contains(split) && doc.at(split).is_array()) {
                for (const auto& r : doc.at(split)) out.push_back(r);
            }
        }
        if (!out.empty()) return out;
        return {doc};
    }
    throw DataError(path.string() + ": unsupported export layout");
}

ImportResult import_mpt_records(const std::vector<json>& records,
                                const ApiSchema& schema,
                                const PreferenceTaxonomy& taxonomy,
                                std::size_t recall_min) {
    ImportResult result;
    auto skip = [&](const std::string& what) {
        spdlog::warn("import: skipped {}", what);
        result.skipped.push_back(what);
    };
    std::set<std::string> seen_dialogues;
    for (std::size_t r = 0; r < records.size(); ++r) {
        const json& rec = records[r];
        std::string did = id_of(rec, {"dialogue_id", "example_id", "user_id", "id"}, "record-" + std::to_string(r));
        try {
            const json* sessions = field(rec, {"sessions", "history", "dialogue_history", "dialogues"});
            if (!sessions || !sessions->is_array()) throw DataError("no sessions field");
            std::vector<Session> ss;
            for (std::size_t i = 0; i < sessions->size(); ++i) {
                ss.push_back(session_from((*sessions)[i], did + "-s" + std::to_string(i)));
            }
            Dialogue d(did, std::move(ss));
            for (const auto& ic : d.api_call_list()) {
                auto v = validate_call(ic.call, schema);
                if (!v) throw DataError("history call " + render_call(ic.call) + ": " + v.describe());
            }
            if (const json* stored = field(rec, {"api_call_list"})) {
                if (calls_from(*stored) != d.history_calls()) {
                    spdlog::warn("import: dialogue {} api_call_list disagrees with session calls; using session calls", did);
                }
            }
            if (!seen_dialogues.insert(did).second) throw DataError("duplicate dialogue id");

            std::vector<const json*> queries;
            if (const json* qs = field(rec, {"instances", "queries", "query_list", "test_queries"}); qs && qs->is_array()) {
                for (const auto& q : *qs) queries.push_back(&q);
            } else if (field(rec, {"query", "query_turns"})) {
                queries.push_back(&rec);
            }
            result.corpus.dialogues.push_back(std::move(d));
            for (std::size_t qi = 0; qi < queries.size(); ++qi) {
                std::string fallback = did + "-q" + std::to_string(qi);
                try {
                    QueryInstance inst = query_from(*queries[qi], did, fallback, taxonomy);
                    auto v = validate_call(inst.gold_call, schema);
                    if (!v) throw DataError("gold call: " + v.describe());
                    auto problems = inst.invariant_violations();
                    if (!problems.empty()) throw DataError(problems.front());
                    result.corpus.instances.push_back(std::move(inst));
                } catch (const std::exception& e) {
                    skip("query " + fallback + " of dialogue " + did + ": " + e.what());
                }
            }
        } catch (const std::exception& e) {
            skip("record " + did + ": " + e.what());
        }
    }
    result.label_disagreements = label_instances(result.corpus, taxonomy, recall_min);
    return result;
}

}  // namespace prefbench
