#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace prefbench {

struct GatewayUsage {
    std::size_t prompt_tokens = 0;
    std::size_t completion_tokens = 0;
};

struct GatewayRequest {
    std::string role;  // generator | verifier | refiner | inference
    std::string rendered_prompt;
    std::size_t max_tokens = 512;
    double temperature = 0.0;
};

struct GatewayResponse {
    std::string text;
    std::optional<GatewayUsage> usage;  // only when the provider reports it
};

// One text-completion exchange. Implementations throw BackendError on
// transport failure and must be safe to call from several threads.
class TextGateway {
public:
    virtual ~TextGateway() = default;
    virtual GatewayResponse send(const GatewayRequest& request) = 0;
    virtual std::string identity() const = 0;
};

// In-process gateway answering from a handler or a fixed queue of replies.
// Every request is recorded.
class ScriptedGateway : public TextGateway {
public:
    using Handler = std::function<GatewayResponse(const GatewayRequest&)>;

    explicit ScriptedGateway(Handler handler, std::string name = "scripted");
    // Replies are consumed in order; running out throws BackendError.
    explicit ScriptedGateway(std::vector<std::string> replies, std::string name = "scripted");

    GatewayResponse send(const GatewayRequest& request) override;
    std::string identity() const override { return name_; }

    std::vector<GatewayRequest> requests() const;

private:
    Handler handler_;
    std::deque<std::string> replies_;
    std::string name_;
    mutable std::mutex mu_;
    std::vector<GatewayRequest> log_;
};

void validate_request(const GatewayRequest& request);

}  // namespace prefbench
