#include "prefbench/prompts.hpp"

#include "prefbench/error.hpp"
#include "prefbench/json_io.hpp"

#include <array>
#include <sstream>

namespace prefbench {

namespace {

constexpr std::array<PromptRole, 6> kRoles = {
    PromptRole::generator,
    PromptRole::verifier,
    PromptRole::refiner,
    PromptRole::inference_full_history,
    PromptRole::inference_memory,
    PromptRole::inference_retrieved,
};

// Splits off the leading `#` header lines.
std::pair<std::string, std::string> split_header(const std::string& src) {
    std::size_t pos = 0;
    while (pos < src.size() && src[pos] == '#') {
        auto nl = src.find('\n', pos);
        if (nl == std::string::npos) return {src, ""};
        pos = nl + 1;
    }
    return {src.substr(0, pos), src.substr(pos)};
}

}  // namespace

std::string_view to_string(PromptRole r) {
    switch (r) {
        case PromptRole::generator: return "generator";
        case PromptRole::verifier: return "verifier";
        case PromptRole::refiner: return "refiner";
        case PromptRole::inference_full_history: return "inference_full_history";
        case PromptRole::inference_memory: return "inference_memory";
        case PromptRole::inference_retrieved: return "inference_retrieved";
    }
    return "generator";
}

std::string_view gateway_role(PromptRole r) {
    switch (r) {
        case PromptRole::generator:
        case PromptRole::verifier:
        case PromptRole::refiner: return to_string(r);
        default: return "inference";
    }
}

PromptLibrary PromptLibrary::builtin() {
    PromptLibrary lib;
    const auto& raw = detail::builtin_prompt_templates();
    for (auto r : kRoles) {
        auto it = raw.find(std::string(to_string(r)));
        if (it == raw.end()) throw ConfigError("no built-in template for role " + std::string(to_string(r)));
        lib.templates_[r] = it->second;
    }
    return lib;
}

PromptLibrary PromptLibrary::with_overrides(const std::filesystem::path& dir) {
    PromptLibrary lib = builtin();
    for (auto r : kRoles) {
        auto path = dir / (std::string(to_string(r)) + ".txt");
        if (std::filesystem::exists(path)) lib.templates_[r] = read_text_file(path);
    }
    return lib;
}

const std::string& PromptLibrary::source(PromptRole r) const { return templates_.at(r); }

std::string PromptLibrary::version(PromptRole r) const {
    auto header = split_header(source(r)).first;
    auto pos = header.find("version:");
    if (pos == std::string::npos) return "unversioned";
    pos += 8;
    while (pos < header.size() && header[pos] == ' ') ++pos;
    auto end = header.find_first_of(" \n|", pos);
    return header.substr(pos, end - pos);
}

std::set<std::string> PromptLibrary::fields(PromptRole r) const {
    std::set<std::string> out;
    const std::string body = split_header(source(r)).second;
    for (std::size_t pos = body.find("{{"); pos != std::string::npos; pos = body.find("{{", pos + 2)) {
        auto end = body.find("}}", pos + 2);
        if (end == std::string::npos) break;
        out.insert(body.substr(pos + 2, end - pos - 2));
    }
    return out;
}

std::string PromptLibrary::render(PromptRole r, const PromptBundle& bundle) const {
    auto needed = fields(r);
    for (const auto& f : needed) {
        if (!bundle.count(f)) {
            throw ConfigError("prompt '" + std::string(to_string(r)) + "' requires field '" + f + "'");
        }
    }
    for (const auto& [k, v] : bundle) {
        if (!needed.count(k)) throw ConfigError("prompt '" + std::string(to_string(r)) + "' has no field '" + k + "'");
    }
    const std::string body = split_header(source(r)).second;
    std::string out;
    std::size_t pos = 0;
    while (true) {
        auto open = body.find("{{", pos);
        if (open == std::string::npos) break;
        auto close = body.find("}}", open + 2);
        if (close == std::string::npos) break;
        out.append(body, pos, open - pos);
        const std::string& value = bundle.at(body.substr(open + 2, close - open - 2));
        out += value.empty() ? std::string("(none)") : value;
        pos = close + 2;
    }
    out.append(body, pos, std::string::npos);
    return out;
}

std::string render_prompt(PromptRole r, const PromptBundle& bundle) {
    static const PromptLibrary lib = PromptLibrary::builtin();
    return lib.render(r, bundle);
}

std::string render_turns(std::span<const Turn> turns) {
    std::ostringstream os;
    for (const auto& t : turns) {
        os << (t.speaker == Speaker::user ? "User: " : "Agent: ") << t.text << '\n';
        if (!t.calls.empty()) os << "  [API] " << render_calls(t.calls) << '\n';
    }
    std::string s = os.str();
    if (!s.empty()) s.pop_back();
    return s;
}

std::string render_session(const Session& s) { return render_turns(s.turns); }

std::string render_history(const Dialogue& d) {
    std::ostringstream os;
    for (std::size_t i = 0; i < d.sessions().size(); ++i) {
        if (i) os << "\n\n";
        os << "[Session " << i + 1 << "]\n" << render_session(d.sessions()[i]);
    }
    return os.str();
}

std::string render_call_list(std::span<const ApiCall> calls) {
    std::ostringstream os;
    for (std::size_t i = 0; i < calls.size(); ++i) {
        if (i) os << '\n';
        os << "- " << render_call(calls[i]);
    }
    return os.str();
}

std::string render_indexed_calls(std::span<const IndexedCall> calls) {
    std::ostringstream os;
    for (std::size_t i = 0; i < calls.size(); ++i) {
        if (i) os << '\n';
        os << "- [session " << calls[i].session_index + 1 << "] " << render_call(calls[i].call);
    }
    return os.str();
}

}  // namespace prefbench
