#include "prefbench/model_backend.hpp"

#include "prefbench/error.hpp"

#include <nlohmann/json.hpp>

namespace prefbench {

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

std::string clean_model_text(const std::string& text) {
    std::string s = trim(text);
    if (s.rfind("```", 0) == 0) {
        auto nl = s.find('\n');
        s = nl == std::string::npos ? "" : s.substr(nl + 1);
        auto fence = s.rfind("```");
        if (fence != std::string::npos) s = s.substr(0, fence);
        s = trim(s);
    }
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = trim(s.substr(1, s.size() - 2));
    return s;
}

Verdict parse_verdict(const std::string& text) {
    auto open = text.find('{');
    auto close = text.rfind('}');
    if (open == std::string::npos || close == std::string::npos || close < open) {
        throw BackendError("verifier reply holds no JSON object");
    }
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text.substr(open, close - open + 1));
    } catch (const nlohmann::json::parse_error&) {
        throw BackendError("verifier reply is not valid JSON");
    }
    std::array<bool, 4> criteria{};
    for (auto c : kCriteria) {
        std::string key(to_string(c));
        if (!j.contains(key)) throw BackendError("verifier reply lacks '" + key + "'");
        const auto& v = j.at(key);
        if (v.is_boolean()) {
            criteria[static_cast<std::size_t>(c)] = v.get<bool>();
        } else if (v.is_string()) {
            std::string s = to_lower_ascii(v.get<std::string>());
            if (s != "pass" && s != "fail") throw BackendError("verifier reply has '" + s + "' for " + key);
            criteria[static_cast<std::size_t>(c)] = s == "pass";
        } else {
            throw BackendError("verifier reply has a non-string result for " + key);
        }
    }
    std::string feedback = j.contains("feedback") && j["feedback"].is_string() ? j["feedback"].get<std::string>() : "";
    return Verdict(criteria, feedback);
}

ModelHypothesisBackend::ModelHypothesisBackend(TextGateway& gateway, PromptLibrary prompts)
    : gateway_(gateway), prompts_(std::move(prompts)) {}

std::string ModelHypothesisBackend::identity() const {
    return "model:" + gateway_.identity() + "/prompts-v" + prompts_.version(PromptRole::generator);
}

std::string ModelHypothesisBackend::ask(PromptRole role, const PromptBundle& bundle) {
    GatewayRequest req{std::string(gateway_role(role)), prompts_.render(role, bundle), 512, 0.0};
    return gateway_.send(req).text;
}

std::string ModelHypothesisBackend::generate(const SessionContext& ctx) {
    store_.record(ctx);
    std::string text = clean_model_text(ask(PromptRole::generator,
                                            {{"memory", ctx.memory.hypothesis_text()},
                                             {"session", render_session(ctx.session)},
                                             {"session_calls", render_call_list(ctx.session_calls)}}));
    if (text.empty()) throw BackendError("generator returned an empty hypothesis");
    return text;
}

Verdict ModelHypothesisBackend::verify(const SessionContext& ctx, const Hypothesis& candidate) {
    auto sessions = store_.record(ctx);
    std::vector<IndexedCall> history;
    for (std::size_t i = 0; i < sessions.size(); ++i) {
        for (const auto& c : sessions[i]) history.push_back({i, c});
    }
    return parse_verdict(ask(PromptRole::verifier,
                             {{"hypothesis", candidate.text},
                              {"memory", ctx.memory.hypothesis_text()},
                              {"session", render_session(ctx.session)},
                              {"history_calls", render_indexed_calls(history)}}));
}

std::string ModelHypothesisBackend::refine(const SessionContext& ctx, const Hypothesis& candidate, const Verdict& verdict) {
    store_.record(ctx);
    std::string text = clean_model_text(ask(PromptRole::refiner,
                                            {{"hypothesis", candidate.text},
                                             {"feedback", verdict.feedback()},
                                             {"session", render_session(ctx.session)},
                                             {"session_calls", render_call_list(ctx.session_calls)}}));
    if (text.empty()) throw BackendError("refiner returned an empty hypothesis");
    return text;
}

}  // namespace prefbench
