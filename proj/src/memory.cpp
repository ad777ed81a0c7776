#include "prefbench/memory.hpp"

#include "prefbench/json_io.hpp"

namespace prefbench {

std::string_view to_string(HypothesisOrigin o) { return o == HypothesisOrigin::generated ? "generated" : "refined"; }

std::string_view to_string(Criterion c) {
    switch (c) {
        case Criterion::evidence_support: return "evidence_support";
        case Criterion::abstraction_quality: return "abstraction_quality";
        case Criterion::actionability: return "actionability";
        case Criterion::temporal_consistency: return "temporal_consistency";
    }
    return "evidence_support";
}

Criterion parse_criterion(std::string_view s) {
    for (auto c : kCriteria) {
        if (to_string(c) == s) return c;
    }
    throw DataError("unknown criterion '" + std::string(s) + "'");
}

Verdict::Verdict(std::array<bool, 4> criteria, std::string feedback)
    : criteria_(criteria), feedback_(std::move(feedback)) {
    if (!passed() && feedback_.empty()) {
        feedback_ = "Failed:";
        for (auto c : kCriteria) {
            if (!criterion(c)) feedback_ += " " + std::string(to_string(c));
        }
        feedback_ += ".";
    }
}

Verdict Verdict::all_pass(std::string feedback) { return Verdict({true, true, true, true}, std::move(feedback)); }

bool Verdict::passed() const noexcept {
    for (bool b : criteria_) {
        if (!b) return false;
    }
    return true;
}

std::optional<Criterion> Verdict::first_failure() const noexcept {
    for (auto c : kCriteria) {
        if (!criterion(c)) return c;
    }
    return std::nullopt;
}

std::string MemoryState::hypothesis_after(std::size_t index) const {
    std::string text;
    for (const auto& e : trace) {
        if (e.session_index > index) break;
        if (e.verdict.passed()) text = e.hypothesis.text;
    }
    return text;
}

std::vector<std::vector<ApiCall>> SessionCallStore::record(const SessionContext& ctx) {
    std::lock_guard lock(mu_);
    auto it = store_.find(ctx.dialogue_id);
    if (it == store_.end()) it = store_.emplace(std::string(ctx.dialogue_id), std::map<std::size_t, std::vector<ApiCall>>{}).first;
    it->second[ctx.session_index] = std::vector<ApiCall>(ctx.session_calls.begin(), ctx.session_calls.end());
    std::vector<std::vector<ApiCall>> out;
    for (const auto& [index, calls] : it->second) {
        if (index > ctx.session_index) break;
        out.push_back(calls);
    }
    return out;
}

MemoryState update_memory(const MemoryState& memory,
                          std::size_t session_index,
                          const Session& session,
                          std::span<const ApiCall> session_calls,
                          HypothesisBackend& backend,
                          std::size_t max_rounds) {
    if (max_rounds < 1) throw ConfigError("max_rounds must be at least 1");
    MemoryState next = memory;
    SessionContext ctx{memory.dialogue_id, session_index, session, session_calls, memory};
    try {
        Hypothesis candidate{backend.generate(ctx), HypothesisOrigin::generated, 0};
        for (std::size_t round = 0; round < max_rounds; ++round) {
            if (candidate.text.empty()) throw BackendError("backend produced an empty hypothesis");
            Verdict verdict = backend.verify(ctx, candidate);
            next.trace.push_back({session_index, candidate, verdict});
            if (verdict.passed()) {
                next.hypothesis = candidate;
                next.accepted_at_session = session_index;
                return next;
            }
            if (round + 1 < max_rounds) {
                candidate = Hypothesis{backend.refine(ctx, candidate, verdict), HypothesisOrigin::refined, round + 1};
            }
        }
    } catch (const MemoryBuildError&) {
        throw;
    } catch (const std::exception& e) {
        throw MemoryBuildError(session_index, memory, e.what());
    }
    return next;
}

MemoryState build_memory(const Dialogue& dialogue, HypothesisBackend& backend, std::size_t max_rounds) {
    if (dialogue.sessions().empty()) throw DataError("dialogue " + dialogue.id() + " has no sessions");
    MemoryState memory;
    memory.dialogue_id = dialogue.id();
    for (std::size_t i = 0; i < dialogue.sessions().size(); ++i) {
        const Session& session = dialogue.sessions()[i];
        std::vector<ApiCall> calls = session.calls();
        memory = update_memory(memory, i, session, calls, backend, max_rounds);
    }
    return memory;
}

nlohmann::ordered_json memory_to_json(const MemoryState& memory) {
    nlohmann::ordered_json trace = nlohmann::ordered_json::array();
    for (const auto& e : memory.trace) {
        nlohmann::ordered_json criteria;
        for (auto c : kCriteria) criteria[std::string(to_string(c))] = e.verdict.criterion(c) ? "pass" : "fail";
        nlohmann::ordered_json entry;
        entry["session_index"] = e.session_index;
        entry["hypothesis_text"] = e.hypothesis.text;
        entry["origin"] = to_string(e.hypothesis.origin);
        entry["round"] = e.hypothesis.round;
        entry["decision"] = e.verdict.passed() ? "pass" : "reject";
        entry["criterion_results"] = std::move(criteria);
        entry["feedback"] = e.verdict.feedback();
        trace.push_back(std::move(entry));
    }
    nlohmann::ordered_json j;
    j["dialogue_id"] = memory.dialogue_id;
    j["hypothesis"] = memory.hypothesis ? nlohmann::ordered_json(memory.hypothesis->text) : nlohmann::ordered_json();
    j["accepted_at_session"] =
        memory.accepted_at_session ? nlohmann::ordered_json(*memory.accepted_at_session) : nlohmann::ordered_json();
    j["trace"] = std::move(trace);
    return j;
}

MemoryState memory_from_json(const nlohmann::json& j) {
    try {
        MemoryState m;
        m.dialogue_id = j.at("dialogue_id").get<std::string>();
        for (const auto& e : j.at("trace")) {
            std::array<bool, 4> criteria{true, true, true, true};
            for (const auto& [name, result] : e.at("criterion_results").items()) {
                criteria[static_cast<std::size_t>(parse_criterion(name))] = result.get<std::string>() == "pass";
            }
            TraceEntry entry;
            entry.session_index = e.at("session_index").get<std::size_t>();
            entry.hypothesis.text = e.at("hypothesis_text").get<std::string>();
            entry.hypothesis.origin =
                e.value("origin", std::string("generated")) == "refined" ? HypothesisOrigin::refined : HypothesisOrigin::generated;
            entry.hypothesis.round = e.value("round", std::size_t{0});
            entry.verdict = Verdict(criteria, e.value("feedback", std::string()));
            m.trace.push_back(std::move(entry));
        }
        if (!j.at("hypothesis").is_null()) {
            std::string text = j.at("hypothesis").get<std::string>();
            // Recover provenance from the accepting trace entry.
            Hypothesis h{text, HypothesisOrigin::generated, 0};
            for (const auto& e : m.trace) {
                if (e.verdict.passed() && e.hypothesis.text == text) h = e.hypothesis;
            }
            m.hypothesis = h;
        }
        if (j.contains("accepted_at_session") && !j.at("accepted_at_session").is_null()) {
            m.accepted_at_session = j.at("accepted_at_session").get<std::size_t>();
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed memory document: ") + e.what());
    }
}

MemoryState load_memory_file(const std::filesystem::path& path) { return memory_from_json(read_json_file(path)); }

}  // namespace prefbench
