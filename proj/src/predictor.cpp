#include "prefbench/predictor.hpp"

#include "prefbench/error.hpp"

#include <spdlog/spdlog.h>

namespace prefbench {

namespace {

void validate_all(Prediction& p, const ApiSchema& schema) {
    for (const auto& c : p.calls) {
        auto v = validate_call(c, schema);
        if (!v) p.validation_issues.push_back(render_call(c) + ": " + v.describe());
    }
}

}  // namespace

GatewayPredictor::GatewayPredictor(TextGateway& gateway, PromptLibrary prompts) : gateway_(gateway), prompts_(std::move(prompts)) {}

std::string GatewayPredictor::identity() const { return "gateway:" + gateway_.identity(); }

std::string GatewayPredictor::prompt_for(const QueryInstance& instance, const Conditioning& conditioning, const ApiSchema& schema) const {
    std::string query = render_turns(instance.query_turns);
    std::string api = render_schema(schema);
    if (const auto* fh = std::get_if<FullHistory>(&conditioning)) {
        if (!fh->dialogue) throw ConfigError("full-history conditioning without a dialogue");
        return prompts_.render(PromptRole::inference_full_history,
                               {{"schema", api},
                                {"history", render_history(*fh->dialogue)},
                                {"api_calls", render_call_list(fh->dialogue->history_calls())},
                                {"query", query}});
    }
    if (const auto* rc = std::get_if<RetrievedConditioning>(&conditioning)) {
        return prompts_.render(PromptRole::inference_retrieved, {{"retrieved", rc->context.render()}, {"schema", api}, {"query", query}});
    }
    std::string memory;
    if (const auto* mc = std::get_if<MemoryConditioning>(&conditioning); mc && mc->memory) memory = mc->memory->hypothesis_text();
    return prompts_.render(PromptRole::inference_memory, {{"memory", memory}, {"schema", api}, {"query", query}});
}

Prediction GatewayPredictor::predict(const QueryInstance& instance, const Conditioning& conditioning, const ApiSchema& schema) {
    Prediction p;
    GatewayRequest req{"inference", prompt_for(instance, conditioning, schema), 256, 0.0};
    for (int attempt = 0; attempt < 2; ++attempt) {
        ++p.attempts;
        try {
            auto resp = gateway_.send(req);
            p.raw_text = resp.text;
            p.usage = resp.usage;
        } catch (const Error& e) {
            p.error = e.what();
            p.calls.clear();
            return p;
        }
        try {
            p.calls = parse_call(extract_call_region(p.raw_text));
            p.parse_failed = false;
            break;
        } catch (const DataError& e) {
            spdlog::debug("{}: unparseable reply (attempt {}): {}", instance.instance_id, attempt + 1, e.what());
            p.parse_failed = true;
        }
    }
    validate_all(p, schema);
    return p;
}

std::vector<ApiCall> ground_memory_deterministic(const QueryInstance& instance,
                                                 const MemoryState* memory,
                                                 const ApiSchema& schema,
                                                 const PreferenceTaxonomy& taxonomy) {
    const DomainSchema* target = schema.find(instance.target_domain);
    if (!target) throw DataError("target domain " + instance.target_domain + " is not in schema " + schema.id());
    ApiCall call{instance.target_domain, {}};
    for (const auto& name : instance.explicit_args) {
        auto it = instance.gold_call.args.find(name);
        if (it != instance.gold_call.args.end()) call.args.emplace(name, it->second);
    }
    if (!memory || !memory->hypothesis) return {call};
    auto named = taxonomy.recognize(memory->hypothesis->text);
    for (const auto& arg : target->arguments) {
        if (call.args.count(arg.name)) continue;
        for (const auto& m : taxonomy.mappings()) {
            if (m.domain != target->name || m.slot != arg.name || !m.signal) continue;
            if (std::find(named.begin(), named.end(), m.label()) == named.end()) continue;
            const Value* least = &m.values.front();
            for (const auto& v : m.values) {
                if (v.render() < least->render()) least = &v;
            }
            call.args.emplace(arg.name, *least);
            break;
        }
    }
    return {call};
}

GroundingPredictor::GroundingPredictor(PreferenceTaxonomy taxonomy) : taxonomy_(std::move(taxonomy)) {}

Prediction GroundingPredictor::predict(const QueryInstance& instance, const Conditioning& conditioning, const ApiSchema& schema) {
    Prediction p;
    p.attempts = 1;
    const MemoryState* memory = nullptr;
    if (const auto* mc = std::get_if<MemoryConditioning>(&conditioning)) memory = mc->memory;
    try {
        p.calls = ground_memory_deterministic(instance, memory, schema, taxonomy_);
    } catch (const Error& e) {
        p.error = e.what();
        return p;
    }
    p.raw_text = render_calls(p.calls);
    validate_all(p, schema);
    return p;
}

}  // namespace prefbench
