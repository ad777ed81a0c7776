#pragma once

#include "prefbench/embedding.hpp"
#include "prefbench/gateway.hpp"

#include <chrono>
#include <memory>
#include <string>

namespace prefbench {

struct EndpointSettings {
    std::string base_url;  // e.g. https://api.example.com/v1
    std::string model;
    std::string credential_env = "PREFBENCH_API_KEY";
    std::size_t in_flight = 4;
    std::size_t max_retries = 2;  // transport / 429 / 5xx only
    std::chrono::milliseconds timeout{60000};
};

// Reads the credential from the environment; throws ConfigError when the
// variable is unset or empty. Never reads credentials from disk.
std::string credential_from_env(const std::string& var);

// Chat-completions style adapter: the prompt is sent as a single user
// message and the first choice's content is returned.
class HttpGateway : public TextGateway {
public:
    explicit HttpGateway(EndpointSettings settings);
    ~HttpGateway() override;

    GatewayResponse send(const GatewayRequest& request) override;
    std::string identity() const override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// Embeddings endpoint adapter (`POST {base}/embeddings`).
class HttpEmbedder : public Embedder {
public:
    explicit HttpEmbedder(EndpointSettings settings);
    ~HttpEmbedder() override;

    std::vector<double> embed(const std::string& text) override;
    std::string identity() const override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace prefbench
