#include "prefbench/http_gateway.hpp"

#include "prefbench/error.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include <condition_variable>
#include <cstdlib>
#include <mutex>
#include <thread>

namespace prefbench {

namespace {

struct Endpoint {
    std::string origin;  // scheme://host[:port]
    std::string prefix;  // path without trailing slash
};

Endpoint parse_endpoint(const std::string& url) {
    auto scheme = url.find("://");
    if (scheme == std::string::npos) throw ConfigError("endpoint '" + url + "' has no scheme");
    auto slash = url.find('/', scheme + 3);
    Endpoint ep;
    ep.origin = url.substr(0, slash);
    ep.prefix = slash == std::string::npos ? "" : url.substr(slash);
    while (!ep.prefix.empty() && ep.prefix.back() == '/') ep.prefix.pop_back();
    return ep;
}

class InFlightLimit {
public:
    explicit InFlightLimit(std::size_t n) : free_(n == 0 ? 1 : n) {}
    void acquire() {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [&] { return free_ > 0; });
        --free_;
    }
    void release() {
        {
            std::lock_guard lock(mu_);
            ++free_;
        }
        cv_.notify_one();
    }

private:
    std::mutex mu_;
    std::condition_variable cv_;
    std::size_t free_;
};

// POSTs JSON with bounded retries on transport errors, 429 and 5xx.
class JsonPoster {
public:
    explicit JsonPoster(const EndpointSettings& s)
        : settings_(s), endpoint_(parse_endpoint(s.base_url)), key_(credential_from_env(s.credential_env)), limit_(s.in_flight) {
        if (s.model.empty()) throw ConfigError("endpoint model name is empty");
    }

    nlohmann::json post(const std::string& path, const nlohmann::json& body) {
        limit_.acquire();
        struct Release {
            InFlightLimit& l;
            ~Release() { l.release(); }
        } release{limit_};

        std::string last_error;
        for (std::size_t attempt = 0; attempt <= settings_.max_retries; ++attempt) {
            if (attempt) std::this_thread::sleep_for(std::chrono::milliseconds(200 * (1 << attempt)));
            httplib::Client cli(endpoint_.origin);
            auto secs = std::chrono::duration_cast<std::chrono::seconds>(settings_.timeout).count();
            cli.set_read_timeout(secs, 0);
            cli.set_connection_timeout(10, 0);
            httplib::Headers headers = {{"Authorization", "Bearer " + key_}};
            auto res = cli.Post(endpoint_.prefix + path, headers, body.dump(), "application/json");
            if (!res) {
                last_error = "transport error: " + httplib::to_string(res.error());
                spdlog::warn("{}{}{}: {} (attempt {})", endpoint_.origin, endpoint_.prefix, path, last_error, attempt + 1);
                continue;
            }
            if (res->status == 429 || res->status >= 500) {
                last_error = "HTTP " + std::to_string(res->status);
                spdlog::warn("{}{}{}: {} (attempt {})", endpoint_.origin, endpoint_.prefix, path, last_error, attempt + 1);
                continue;
            }
            if (res->status != 200) throw BackendError("HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200));
            try {
                return nlohmann::json::parse(res->body);
            } catch (const nlohmann::json::parse_error&) {
                throw BackendError("endpoint returned a non-JSON body");
            }
        }
        throw BackendError(settings_.base_url + path + ": " + last_error);
    }

    const EndpointSettings& settings() const { return settings_; }

private:
    EndpointSettings settings_;
    Endpoint endpoint_;
    std::string key_;
    InFlightLimit limit_;
};

}  // namespace

std::string credential_from_env(const std::string& var) {
    if (var.empty()) throw ConfigError("credential environment variable name is empty");
    const char* v = std::getenv(var.c_str());
    if (!v || !*v) throw ConfigError("credential environment variable " + var + " is not set");
    return v;
}

struct HttpGateway::Impl {
    JsonPoster poster;
};

HttpGateway::HttpGateway(EndpointSettings settings) : impl_(new Impl{JsonPoster(settings)}) {}
HttpGateway::~HttpGateway() = default;

std::string HttpGateway::identity() const { return "http:" + impl_->poster.settings().model; }

GatewayResponse HttpGateway::send(const GatewayRequest& request) {
    validate_request(request);
    nlohmann::json body = {
        {"model", impl_->poster.settings().model},
        {"messages", nlohmann::json::array({{{"role", "user"}, {"content", request.rendered_prompt}}})},
        {"max_tokens", request.max_tokens},
        {"temperature", request.temperature},
    };
    auto reply = impl_->poster.post("/chat/completions", body);
    GatewayResponse out;
    try {
        out.text = reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception&) {
        throw BackendError("completion reply has no choices[0].message.content");
    }
    if (reply.contains("usage") && reply["usage"].is_object()) {
        GatewayUsage u;
        u.prompt_tokens = reply["usage"].value("prompt_tokens", std::size_t{0});
        u.completion_tokens = reply["usage"].value("completion_tokens", std::size_t{0});
        out.usage = u;
    }
    return out;
}

struct HttpEmbedder::Impl {
    JsonPoster poster;
};

HttpEmbedder::HttpEmbedder(EndpointSettings settings) : impl_(new Impl{JsonPoster(settings)}) {}
HttpEmbedder::~HttpEmbedder() = default;

std::string HttpEmbedder::identity() const { return "http-embed:" + impl_->poster.settings().model; }

std::vector<double> HttpEmbedder::embed(const std::string& text) {
    nlohmann::json body = {{"model", impl_->poster.settings().model}, {"input", text}};
    auto reply = impl_->poster.post("/embeddings", body);
    try {
        return reply.at("data").at(0).at("embedding").get<std::vector<double>>();
    } catch (const nlohmann::json::exception&) {
        throw BackendError("embedding reply has no data[0].embedding");
    }
}

}  // namespace prefbench
