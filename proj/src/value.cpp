#include "prefbench/value.hpp"

#include "prefbench/error.hpp"

#include <algorithm>
#include <charconv>
#include <cctype>

namespace prefbench {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

bool iequals(std::string_view a, std::string_view b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::tolower(static_cast<unsigned char>(a[i])) != std::tolower(static_cast<unsigned char>(b[i]))) {
            return false;
        }
    }
    return true;
}

}  // namespace

std::string to_lower_ascii(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

Value Value::text(std::string s, bool quoted) {
    Value v;
    v.text_ = std::move(s);
    v.quoted_ = quoted;
    return v;
}

Value Value::boolean(bool b) {
    Value v;
    v.is_bool_ = true;
    v.bool_ = b;
    v.text_ = b ? "True" : "False";
    return v;
}

Value Value::bare(std::string_view token) {
    if (iequals(token, "true")) return boolean(true);
    if (iequals(token, "false")) return boolean(false);
    return text(std::string(token), false);
}

std::optional<long long> Value::as_integer() const {
    if (is_bool_ || text_.empty()) return std::nullopt;
    std::string_view s = text_;
    if (s.front() == '+') s.remove_prefix(1);
    if (s.empty()) return std::nullopt;
    long long out = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return out;
}

bool Value::needs_quotes() const {
    if (is_bool_) return false;
    if (quoted_ || text_.empty()) return true;
    if (is_space(text_.front()) || is_space(text_.back())) return true;
    if (iequals(text_, "true") || iequals(text_, "false")) return true;
    for (char c : text_) {
        switch (c) {
            case ' ': case ',': case ';': case '(': case ')': case '=':
            case '"': case '\'': case '\\': case '\t': case '\n': case '\r':
                return true;
            default:
                break;
        }
    }
    return false;
}

std::string Value::plain() const { return text_; }

std::string Value::render() const {
    if (is_bool_) return text_;
    if (!needs_quotes()) return text_;
    std::string out;
    out.reserve(text_.size() + 2);
    out.push_back('"');
    for (char c : text_) {
        if (c == '"' || c == '\\') out.push_back('\\');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

bool values_match(const Value& a, const Value& b) {
    if (a.is_boolean() || b.is_boolean()) {
        return a.is_boolean() && b.is_boolean() && a.as_bool() == b.as_bool();
    }
    auto ia = a.as_integer();
    auto ib = b.as_integer();
    if (ia && ib) return *ia == *ib;
    if (a.quoted() && b.quoted()) return a.str() == b.str();
    return iequals(a.str(), b.str());
}

bool value_less(const Value& a, const Value& b) {
    auto ia = a.as_integer();
    auto ib = b.as_integer();
    if (ia && ib) return *ia < *ib;
    if (ia.has_value() != ib.has_value()) return ia.has_value();
    return a.plain() < b.plain();
}

Value canonicalize(const Value& v) {
    if (v.is_boolean()) return v;
    return Value::text(v.str(), v.needs_quotes());
}

nlohmann::json value_to_json(const Value& v) {
    if (v.is_boolean()) return v.as_bool();
    if (!v.quoted()) {
        if (auto n = v.as_integer(); n && std::to_string(*n) == v.str()) return *n;
    }
    return v.str();
}

Value value_from_json(const nlohmann::json& j) {
    if (j.is_boolean()) return Value::boolean(j.get<bool>());
    if (j.is_number_integer()) return Value::text(std::to_string(j.get<long long>()));
    if (j.is_number()) return Value::text(j.dump());
    if (j.is_string()) return Value::bare(j.get<std::string>());
    throw DataError("argument value must be a string, number or boolean, got " + j.dump());
}

}  // namespace prefbench
