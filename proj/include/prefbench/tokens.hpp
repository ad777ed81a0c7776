#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

namespace prefbench {

class TokenCounter {
public:
    virtual ~TokenCounter() = default;
    virtual std::size_t count(std::string_view text) const = 0;
    virtual std::string identity() const = 0;
};

// Runs of non-whitespace.
class WhitespaceCounter : public TokenCounter {
public:
    std::size_t count(std::string_view text) const override;
    std::string identity() const override { return "whitespace"; }
};

std::unique_ptr<TokenCounter> make_token_counter(std::string_view name);

std::size_t count_tokens(std::string_view text, const TokenCounter& counter);
// A provider-reported count, when present, wins over local counting.
std::size_t count_tokens(std::string_view text, const TokenCounter& counter, std::optional<std::size_t> provider_count);

}  // namespace prefbench
