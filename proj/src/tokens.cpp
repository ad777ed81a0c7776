#include "prefbench/tokens.hpp"

#include "prefbench/error.hpp"

#include <cctype>

namespace prefbench {

std::size_t WhitespaceCounter::count(std::string_view text) const {
    std::size_t n = 0;
    bool in_token = false;
    for (unsigned char c : text) {
        bool space = std::isspace(c);
        if (!space && !in_token) ++n;
        in_token = !space;
    }
    return n;
}

std::unique_ptr<TokenCounter> make_token_counter(std::string_view name) {
    if (name == "whitespace") return std::make_unique<WhitespaceCounter>();
    throw ConfigError("unknown token counter '" + std::string(name) + "'");
}

std::size_t count_tokens(std::string_view text, const TokenCounter& counter) { return counter.count(text); }

std::size_t count_tokens(std::string_view text, const TokenCounter& counter, std::optional<std::size_t> provider_count) {
    return provider_count ? *provider_count : counter.count(text);
}

}  // namespace prefbench
