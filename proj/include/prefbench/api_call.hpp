#pragma once

#include "prefbench/value.hpp"

#include <nlohmann/json.hpp>

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace prefbench {

// One tool invocation. Arguments are kept in name order, which is the
// canonical rendering order.
struct ApiCall {
    std::string domain;
    std::map<std::string, Value> args;

    friend bool operator==(const ApiCall&, const ApiCall&) = default;
};

// Grammar:
//   calls := call ((';' | ',') call)* [';']
//   call  := Name '(' [arg (',' arg)*] ')'
//   arg   := key '=' value
//   value := "quoted" | 'quoted' | bare text up to the next ',' or ')'
// Bare True/False (any case) are booleans. Throws ParseError on failure.
std::vector<ApiCall> parse_call(std::string_view text);

// `Domain(k1=v1, k2=v2)`; booleans as True/False, spaced values quoted.
std::string render_call(const ApiCall& call);
// Calls joined with "; ".
std::string render_calls(const std::vector<ApiCall>& calls);

ApiCall canonicalize(const ApiCall& call);

// Narrows free-form model output to the span that should hold call text:
// strips code fences and leading prose before the first `Name(`.
std::string_view extract_call_region(std::string_view text);

// {"text": "<canonical>", "domain": ..., "args": {...}}
nlohmann::json call_to_json(const ApiCall& call);
// Accepts either a call string or an object with `domain` + `args` (and an
// optional `text` that must agree with them).
ApiCall call_from_json(const nlohmann::json& j);

}  // namespace prefbench
