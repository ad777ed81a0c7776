#pragma once

#include "prefbench/gateway.hpp"
#include "prefbench/memory.hpp"
#include "prefbench/prompts.hpp"

#include <string>

namespace prefbench {

// Hypothesis backend that sends the generator / verifier / refiner prompts
// through a text gateway. The verifier must answer with a JSON object holding
// one pass/fail entry per criterion plus `feedback`.
class ModelHypothesisBackend : public HypothesisBackend {
public:
    ModelHypothesisBackend(TextGateway& gateway, PromptLibrary prompts = PromptLibrary::builtin());

    std::string generate(const SessionContext& ctx) override;
    Verdict verify(const SessionContext& ctx, const Hypothesis& candidate) override;
    std::string refine(const SessionContext& ctx, const Hypothesis& candidate, const Verdict& verdict) override;
    std::string identity() const override;

private:
    std::string ask(PromptRole role, const PromptBundle& bundle);

    TextGateway& gateway_;
    PromptLibrary prompts_;
    SessionCallStore store_;
};

// Throws BackendError when the text holds no usable verdict object.
Verdict parse_verdict(const std::string& text);

// Trims whitespace, surrounding quotes and code fences from a model's free-text reply.
std::string clean_model_text(const std::string& text);

}  // namespace prefbench
