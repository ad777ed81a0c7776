#pragma once

#include "prefbench/api_call.hpp"
#include "prefbench/schema.hpp"
#include "prefbench/taxonomy.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace prefbench {

enum class Speaker { user, agent };
enum class QueryType { context_guided, context_free };
// Declaration order is difficulty order: recall < induction < transfer.
enum class ModelingType { recall, induction, transfer };

std::string_view to_string(Speaker s);
std::string_view to_string(QueryType q);
std::string_view to_string(ModelingType m);
Speaker parse_speaker(std::string_view s);
QueryType parse_query_type(std::string_view s);
ModelingType parse_modeling_type(std::string_view s);

struct Turn {
    Speaker speaker = Speaker::user;
    std::string text;
    std::vector<ApiCall> calls;  // agent turns only
};

struct Session {
    std::string session_id;
    std::vector<Turn> turns;

    std::vector<ApiCall> calls() const;
};

struct IndexedCall {
    std::size_t session_index = 0;
    ApiCall call;

    friend bool operator==(const IndexedCall&, const IndexedCall&) = default;
};

// A multi-session interaction history. The accumulated call list is derived
// from the sessions and cannot drift from them.
class Dialogue {
public:
    Dialogue() = default;
    // Throws DataError on an empty session or a user turn carrying calls.
    Dialogue(std::string dialogue_id, std::vector<Session> sessions);

    const std::string& id() const noexcept { return dialogue_id_; }
    const std::vector<Session>& sessions() const noexcept { return sessions_; }
    const std::vector<IndexedCall>& api_call_list() const noexcept { return api_call_list_; }
    std::vector<ApiCall> history_calls() const;
    std::size_t turn_count() const;

private:
    std::string dialogue_id_;
    std::vector<Session> sessions_;
    std::vector<IndexedCall> api_call_list_;
};

struct QueryInstance {
    std::string instance_id;
    std::string dialogue_id;
    QueryType query_type = QueryType::context_guided;
    std::vector<Turn> query_turns;
    std::string target_domain;
    ApiCall gold_call;
    std::set<std::string> explicit_args;
    std::map<std::string, std::vector<Value>> preference_args;  // arg -> accepted gold value set
    std::optional<ModelingType> modeling_type;

    // Checks the type invariants; returns a description of each violation.
    std::vector<std::string> invariant_violations() const;
};

struct QueryTemplate {
    std::string template_id;
    std::string target_domain;
    QueryType query_type = QueryType::context_guided;
    std::vector<Turn> turn_skeletons;  // text with {placeholder} slots
    std::set<std::string> omitted_args;
};

struct Corpus {
    std::vector<Dialogue> dialogues;
    std::vector<QueryInstance> instances;

    const Dialogue* find_dialogue(std::string_view id) const;
};

// Time and location arguments are never preference targets.
bool is_time_or_location_argument(std::string_view name);

struct CorpusLoadResult {
    Corpus corpus;
    std::vector<std::string> errors;  // each names the offending dialogue or instance
};

// Loads the corpus document, keeping every well-formed record and reporting
// the rest.
CorpusLoadResult load_corpus_collecting(const nlohmann::json& doc, const ApiSchema& schema);
// Strict variant: throws DataError listing the problems.
Corpus load_corpus(const nlohmann::json& doc, const ApiSchema& schema);
Corpus load_corpus_file(const std::filesystem::path& path, const ApiSchema& schema);

nlohmann::json turn_to_json(const Turn& t);
Turn turn_from_json(const nlohmann::json& j);
nlohmann::json session_to_json(const Session& s);
Session session_from_json(const nlohmann::json& j);
nlohmann::json instance_to_json(const QueryInstance& q);
nlohmann::json corpus_to_json(const Corpus& corpus);

struct GroupingManifest {
    std::string dialogue_id;
    std::vector<std::string> session_ids;
};

using SessionStore = std::map<std::string, Session, std::less<>>;

Dialogue assemble_dialogue(const GroupingManifest& manifest, const SessionStore& sessions);

// Rejects omitted time/location arguments, omitted arguments absent from the
// target domain, and argument placeholders in context-free templates.
QueryTemplate load_query_template(const nlohmann::json& j, const ApiSchema& schema);

// Renders the turns and derives explicit/preference arguments. modeling_type
// is left unset; ids are left empty for the caller to assign.
QueryInstance instantiate_query(const QueryTemplate& tmpl,
                                const std::map<std::string, std::string>& bindings,
                                const ApiCall& gold_call,
                                const PreferenceTaxonomy& taxonomy);

ModelingType classify_modeling_type(const QueryInstance& instance,
                                    const Dialogue& dialogue,
                                    const PreferenceTaxonomy& taxonomy,
                                    std::size_t recall_min = 2);

struct LabelDisagreement {
    std::string instance_id;
    ModelingType stored;
    ModelingType recomputed;
};

// Fills unset modeling types; stored labels win and disagreements are returned.
std::vector<LabelDisagreement> label_instances(Corpus& corpus,
                                               const PreferenceTaxonomy& taxonomy,
                                               std::size_t recall_min = 2);

struct CorpusStats {
    std::size_t dialogues = 0;
    std::size_t sessions = 0;
    std::size_t turns = 0;
    double avg_sessions_per_dialogue = 0.0;
    double avg_turns_per_session = 0.0;
    std::map<std::string, std::size_t> instances_by_modeling_type;
    std::map<std::string, std::size_t> instances_by_query_type;
    std::size_t unlabeled_instances = 0;
    // domain -> group -> number of dialogues with evidence for that group in that domain
    std::map<std::string, std::map<std::string, std::size_t>> domain_group_dialogues;
    std::map<std::string, std::size_t> calls_per_domain;
    std::size_t min_calls_per_dialogue = 0;
    std::size_t max_calls_per_dialogue = 0;
    double avg_calls_per_dialogue = 0.0;

    nlohmann::ordered_json to_json() const;
    std::string render() const;
};

CorpusStats corpus_stats(const Corpus& corpus, const PreferenceTaxonomy& taxonomy);

}  // namespace prefbench
