#pragma once

#include "prefbench/corpus.hpp"
#include "prefbench/error.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace prefbench {

enum class HypothesisOrigin { generated, refined };

std::string_view to_string(HypothesisOrigin o);

struct Hypothesis {
    std::string text;
    HypothesisOrigin origin = HypothesisOrigin::generated;
    std::size_t round = 0;

    friend bool operator==(const Hypothesis&, const Hypothesis&) = default;
};

// Rubric order; refinement fixes the first failing criterion in this order.
enum class Criterion { evidence_support, abstraction_quality, actionability, temporal_consistency };

inline constexpr std::array<Criterion, 4> kCriteria = {
    Criterion::evidence_support,
    Criterion::abstraction_quality,
    Criterion::actionability,
    Criterion::temporal_consistency,
};

std::string_view to_string(Criterion c);
Criterion parse_criterion(std::string_view s);

// Verifier outcome. The decision is the conjunction of the four criteria, so
// the two cannot disagree.
class Verdict {
public:
    Verdict() = default;
    // An empty feedback on rejection is replaced by the list of failed criteria.
    Verdict(std::array<bool, 4> criteria, std::string feedback);

    static Verdict all_pass(std::string feedback = "Stable and memory-worthy preference.");

    bool passed() const noexcept;
    bool criterion(Criterion c) const noexcept { return criteria_[static_cast<std::size_t>(c)]; }
    std::optional<Criterion> first_failure() const noexcept;
    const std::array<bool, 4>& criteria() const noexcept { return criteria_; }
    const std::string& feedback() const noexcept { return feedback_; }

    friend bool operator==(const Verdict&, const Verdict&) = default;

private:
    std::array<bool, 4> criteria_{true, true, true, true};
    std::string feedback_;
};

struct TraceEntry {
    std::size_t session_index = 0;
    Hypothesis hypothesis;
    Verdict verdict;

    friend bool operator==(const TraceEntry&, const TraceEntry&) = default;
};

// The single accepted latent-preference hypothesis plus its audit trail.
struct MemoryState {
    std::string dialogue_id;
    std::optional<Hypothesis> hypothesis;
    std::optional<std::size_t> accepted_at_session;
    std::vector<TraceEntry> trace;  // append-only, chronological

    std::string hypothesis_text() const { return hypothesis ? hypothesis->text : std::string(); }
    // Accepted hypothesis text as of the end of session `index` (empty if none yet).
    std::string hypothesis_after(std::size_t index) const;

    friend bool operator==(const MemoryState&, const MemoryState&) = default;
};

// What a backend sees for one session update.
struct SessionContext {
    std::string_view dialogue_id;
    std::size_t session_index = 0;
    const Session& session;
    std::span<const ApiCall> session_calls;
    const MemoryState& memory;
};

// generate / verify / refine. Implementations must tolerate concurrent calls
// from different dialogue builds; failures are reported as BackendError.
class HypothesisBackend {
public:
    virtual ~HypothesisBackend() = default;

    virtual std::string generate(const SessionContext& ctx) = 0;
    virtual Verdict verify(const SessionContext& ctx, const Hypothesis& candidate) = 0;
    virtual std::string refine(const SessionContext& ctx, const Hypothesis& candidate, const Verdict& verdict) = 0;
    virtual std::string identity() const = 0;
};

// Per-dialogue record of the calls a backend has been shown, so that a backend
// can look back over earlier sessions. Safe for concurrent dialogues.
class SessionCallStore {
public:
    // Records this session's calls; returns every recorded session up to and
    // including it, oldest first.
    std::vector<std::vector<ApiCall>> record(const SessionContext& ctx);

private:
    std::mutex mu_;
    std::map<std::string, std::map<std::size_t, std::vector<ApiCall>>, std::less<>> store_;
};

// Backend failure during a dialogue build; carries the memory as of the last
// completed session.
class MemoryBuildError : public BackendError {
public:
    MemoryBuildError(std::size_t session_index, MemoryState partial, const std::string& what)
        : BackendError("session " + std::to_string(session_index) + ": " + what),
          session_index_(session_index),
          partial_(std::move(partial)) {}

    std::size_t session_index() const noexcept { return session_index_; }
    const MemoryState& partial() const noexcept { return partial_; }

private:
    std::size_t session_index_;
    MemoryState partial_;
};

inline constexpr std::size_t kDefaultMaxRounds = 3;

// One capped generate-verify-refine pass. verify runs at most max_rounds
// times and refine at most max_rounds - 1 times. On exhaustion the hypothesis
// is retained and only the trace grows. On backend failure throws
// MemoryBuildError; the input memory is untouched.
MemoryState update_memory(const MemoryState& memory,
                          std::size_t session_index,
                          const Session& session,
                          std::span<const ApiCall> session_calls,
                          HypothesisBackend& backend,
                          std::size_t max_rounds = kDefaultMaxRounds);

// Left fold of update_memory over the dialogue's sessions.
MemoryState build_memory(const Dialogue& dialogue, HypothesisBackend& backend, std::size_t max_rounds = kDefaultMaxRounds);

nlohmann::ordered_json memory_to_json(const MemoryState& memory);
MemoryState memory_from_json(const nlohmann::json& j);
MemoryState load_memory_file(const std::filesystem::path& path);

}  // namespace prefbench
