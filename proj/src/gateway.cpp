#include "prefbench/gateway.hpp"

#include "prefbench/error.hpp"

namespace prefbench {

void validate_request(const GatewayRequest& request) {
    if (request.rendered_prompt.empty()) throw ConfigError("gateway request has an empty prompt");
    if (request.role != "generator" && request.role != "verifier" && request.role != "refiner" && request.role != "inference") {
        throw ConfigError("unknown gateway role '" + request.role + "'");
    }
}

ScriptedGateway::ScriptedGateway(Handler handler, std::string name) : handler_(std::move(handler)), name_(std::move(name)) {}

ScriptedGateway::ScriptedGateway(std::vector<std::string> replies, std::string name)
    : replies_(replies.begin(), replies.end()), name_(std::move(name)) {}

GatewayResponse ScriptedGateway::send(const GatewayRequest& request) {
    validate_request(request);
    Handler handler;
    {
        std::lock_guard lock(mu_);
        log_.push_back(request);
        if (!handler_) {
            if (replies_.empty()) throw BackendError("scripted gateway ran out of replies");
            GatewayResponse r{replies_.front(), std::nullopt};
            replies_.pop_front();
            return r;
        }
        handler = handler_;
    }
    return handler(request);
}

std::vector<GatewayRequest> ScriptedGateway::requests() const {
    std::lock_guard lock(mu_);
    return log_;
}

}  // namespace prefbench
