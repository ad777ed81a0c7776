#include "prefbench/api_call.hpp"

#include "prefbench/error.hpp"

#include <cctype>

namespace prefbench {

namespace {

bool is_ws(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }
bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

class CallParser {
public:
    explicit CallParser(std::string_view s) : s_(s) {}

    std::vector<ApiCall> parse() {
        skip_ws();
        if (at_end()) throw ParseError(0, "empty input");
        std::vector<ApiCall> calls;
        while (true) {
            calls.push_back(parse_one());
            skip_ws();
            if (at_end()) break;
            char sep = s_[i_];
            if (sep == ')') throw ParseError(i_, "unbalanced parentheses: unexpected ')'");
            if (sep != ';' && sep != ',') throw ParseError(i_, "expected ';' or ',' between calls");
            ++i_;
            skip_ws();
            if (at_end()) {
                if (sep == ';') break;
                throw ParseError(i_, "expected a call after ','");
            }
        }
        return calls;
    }

private:
    bool at_end() const { return i_ >= s_.size(); }

    void skip_ws() {
        while (!at_end() && is_ws(s_[i_])) ++i_;
    }

    std::string identifier(bool allow_dot, const char* what) {
        if (at_end() || !is_ident_start(s_[i_])) throw ParseError(i_, std::string("expected ") + what);
        std::size_t start = i_;
        while (!at_end() && (is_ident_char(s_[i_]) || (allow_dot && s_[i_] == '.'))) ++i_;
        return std::string(s_.substr(start, i_ - start));
    }

    [[noreturn]] void unbalanced(std::size_t open) const {
        throw ParseError(open, "unbalanced parentheses: missing ')'");
    }

    ApiCall parse_one() {
        ApiCall call;
        call.domain = identifier(true, "call name");
        skip_ws();
        if (at_end() || s_[i_] != '(') throw ParseError(i_, "expected '(' after call name");
        std::size_t open = i_++;
        skip_ws();
        if (at_end()) unbalanced(open);
        if (s_[i_] == ')') {
            ++i_;
            return call;
        }
        while (true) {
            skip_ws();
            if (at_end()) unbalanced(open);
            std::size_t key_pos = i_;
            std::string key = identifier(false, "argument name");
            skip_ws();
            if (at_end()) unbalanced(open);
            if (s_[i_] != '=') throw ParseError(i_, "expected '=' after argument name");
            ++i_;
            skip_ws();
            Value value = parse_value(open);
            if (!call.args.emplace(std::move(key), std::move(value)).second) {
                throw ParseError(key_pos, "duplicate argument");
            }
            skip_ws();
            if (at_end()) unbalanced(open);
            if (s_[i_] == ')') {
                ++i_;
                return call;
            }
            if (s_[i_] != ',') throw ParseError(i_, "expected ',' or ')'");
            ++i_;
        }
    }

    Value parse_value(std::size_t open) {
        if (at_end()) unbalanced(open);
        char c = s_[i_];
        if (c == '"' || c == '\'') return quoted(c);
        std::size_t start = i_;
        while (!at_end() && s_[i_] != ',' && s_[i_] != ')') {
            char ch = s_[i_];
            if (ch == '(' || ch == '=' || ch == ';' || ch == '"' || ch == '\\') {
                throw ParseError(i_, "unexpected character in value");
            }
            ++i_;
        }
        if (at_end()) unbalanced(open);
        std::size_t end = i_;
        while (end > start && is_ws(s_[end - 1])) --end;
        if (end == start) throw ParseError(start, "missing value");
        return Value::bare(s_.substr(start, end - start));
    }

    Value quoted(char quote) {
        std::size_t start = i_++;
        std::string out;
        while (true) {
            if (at_end()) throw ParseError(start, "unterminated string");
            char ch = s_[i_++];
            if (ch == quote) break;
            if (ch == '\\') {
                if (at_end()) throw ParseError(start, "unterminated string");
                ch = s_[i_++];
            }
            out.push_back(ch);
        }
        return Value::text(std::move(out), true);
    }

    std::string_view s_;
    std::size_t i_ = 0;
};

std::size_t find_call_start(std::string_view text, bool get_prefix_only) {
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (!is_ident_start(text[i]) || (i > 0 && is_ident_char(text[i - 1]))) continue;
        if (get_prefix_only && text.substr(i, 3) != "Get") continue;
        std::size_t j = i;
        while (j < text.size() && (is_ident_char(text[j]) || text[j] == '.')) ++j;
        if (j < text.size() && text[j] == '(') return i;
        i = j == i ? i : j - 1;
    }
    return std::string_view::npos;
}

}  // namespace

std::vector<ApiCall> parse_call(std::string_view text) { return CallParser(text).parse(); }

std::string render_call(const ApiCall& call) {
    std::string out = call.domain;
    out.push_back('(');
    bool first = true;
    for (const auto& [name, value] : call.args) {
        if (!first) out += ", ";
        first = false;
        out += name;
        out.push_back('=');
        out += value.render();
    }
    out.push_back(')');
    return out;
}

std::string render_calls(const std::vector<ApiCall>& calls) {
    std::string out;
    for (std::size_t i = 0; i < calls.size(); ++i) {
        if (i) out += "; ";
        out += render_call(calls[i]);
    }
    return out;
}

ApiCall canonicalize(const ApiCall& call) {
    ApiCall out{call.domain, {}};
    for (const auto& [name, value] : call.args) out.args.emplace(name, canonicalize(value));
    return out;
}

std::string_view extract_call_region(std::string_view text) {
    if (auto fence = text.find("```"); fence != std::string_view::npos) {
        auto body = text.find('\n', fence);
        if (body != std::string_view::npos) {
            auto close = text.find("```", body);
            text = text.substr(body + 1, close == std::string_view::npos ? std::string_view::npos : close - body - 1);
        }
    }
    std::size_t start = find_call_start(text, true);
    if (start == std::string_view::npos) start = find_call_start(text, false);
    if (start == std::string_view::npos) return text;
    std::size_t end = text.rfind(')');
    if (end == std::string_view::npos || end < start) return text.substr(start);
    return text.substr(start, end - start + 1);
}

nlohmann::json call_to_json(const ApiCall& call) {
    nlohmann::json args = nlohmann::json::object();
    for (const auto& [name, value] : call.args) args[name] = value_to_json(value);
    return {{"text", render_call(call)}, {"domain", call.domain}, {"args", std::move(args)}};
}

ApiCall call_from_json(const nlohmann::json& j) {
    if (j.is_string()) {
        auto calls = parse_call(j.get<std::string>());
        if (calls.size() != 1) throw DataError("expected exactly one call in '" + j.get<std::string>() + "'");
        return std::move(calls.front());
    }
    if (!j.is_object()) throw DataError("call must be a string or an object");
    if (!j.contains("domain")) {
        if (j.contains("text")) return call_from_json(j.at("text"));
        throw DataError("call object needs `domain` or `text`");
    }
    ApiCall call;
    call.domain = j.at("domain").get<std::string>();
    if (j.contains("args")) {
        for (const auto& [name, value] : j.at("args").items()) call.args.emplace(name, value_from_json(value));
    }
    if (j.contains("text")) {
        ApiCall from_text = call_from_json(j.at("text"));
        bool agree = from_text.domain == call.domain && from_text.args.size() == call.args.size();
        for (const auto& [name, value] : from_text.args) {
            auto it = call.args.find(name);
            agree = agree && it != call.args.end() && values_match(it->second, value);
        }
        if (!agree) {
            throw DataError("call text '" + j.at("text").get<std::string>() + "' disagrees with its structured args");
        }
    }
    return call;
}

}  // namespace prefbench
