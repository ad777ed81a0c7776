#pragma once

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <string_view>

namespace prefbench {

// Scalar argument value: text or boolean. Numerals are carried as text.
//
// `quoted` records whether the text was written as a quoted string in its
// source. Quoted text on both sides of a comparison is compared
// case-sensitively; everything else compares case-insensitively.
class Value {
public:
    Value() = default;

    static Value text(std::string s, bool quoted = false);
    static Value boolean(bool b);
    // Classifies an unquoted token: True/False (any case) become booleans.
    static Value bare(std::string_view token);

    bool is_boolean() const noexcept { return is_bool_; }
    bool as_bool() const noexcept { return bool_; }
    const std::string& str() const noexcept { return text_; }
    bool quoted() const noexcept { return quoted_; }

    // Present when the text is an optionally signed decimal integer that fits in 64 bits.
    std::optional<long long> as_integer() const;

    // Text as it should appear in a rendered call: `True`, `Economy`, `"Tent site"`.
    std::string render() const;
    // Display text without quoting: `True`, `Tent site`.
    std::string plain() const;

    bool needs_quotes() const;

    // Structural equality (kind, text, quoting); comparison rules live in values_match.
    friend bool operator==(const Value&, const Value&) = default;

private:
    std::string text_;
    bool is_bool_ = false;
    bool bool_ = false;
    bool quoted_ = false;
};

// Benchmark comparison rule: integers numerically, booleans by value, text
// case-insensitively unless both sides are quoted.
bool values_match(const Value& a, const Value& b);

// Total order used wherever value lists must be deterministic: integers
// numerically first, then by plain text.
bool value_less(const Value& a, const Value& b);

Value canonicalize(const Value& v);

// JSON: booleans map to JSON booleans, canonical decimal integers to JSON
// numbers, everything else to strings. Strings read back through Value::bare.
nlohmann::json value_to_json(const Value& v);
Value value_from_json(const nlohmann::json& j);

std::string to_lower_ascii(std::string_view s);

}  // namespace prefbench
