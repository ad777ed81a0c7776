#pragma once

#include "prefbench/corpus.hpp"

#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>

namespace prefbench {

enum class PromptRole { generator, verifier, refiner, inference_full_history, inference_memory, inference_retrieved };

std::string_view to_string(PromptRole r);
// Gateway-level role: inference templates all report "inference".
std::string_view gateway_role(PromptRole r);

using PromptBundle = std::map<std::string, std::string>;

// Versioned templates keyed by role. Leading `#` lines are a header (version
// and provenance) and are not sent. Placeholders are `{{field}}`.
class PromptLibrary {
public:
    static PromptLibrary builtin();
    // Files named <role>.txt in `dir` replace the built-in template for that role.
    static PromptLibrary with_overrides(const std::filesystem::path& dir);

    const std::string& source(PromptRole r) const;
    std::string version(PromptRole r) const;
    std::set<std::string> fields(PromptRole r) const;

    // Pure substitution. Throws ConfigError when the bundle misses a field the
    // template needs or carries one it does not use.
    std::string render(PromptRole r, const PromptBundle& bundle) const;

private:
    std::map<PromptRole, std::string> templates_;
};

std::string render_prompt(PromptRole r, const PromptBundle& bundle);

// Text renderings shared by the model-backed components.
std::string render_turns(std::span<const Turn> turns);
std::string render_session(const Session& s);
std::string render_history(const Dialogue& d);
std::string render_call_list(std::span<const ApiCall> calls);
std::string render_indexed_calls(std::span<const IndexedCall> calls);

namespace detail {
const std::map<std::string, std::string>& builtin_prompt_templates();
}

}  // namespace prefbench
