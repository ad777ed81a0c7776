#pragma once

#include "prefbench/corpus.hpp"
#include "prefbench/embedding.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace prefbench {

struct RetrievedItem {
    std::string text;
    double score = 0.0;
    std::size_t position = 0;  // utterance index in the flattened history
};

// At most k items, scores non-increasing, ties in history order.
struct RetrievedContext {
    std::vector<RetrievedItem> items;
    std::size_t k = 5;

    std::string render() const;
};

inline constexpr std::size_t kDefaultRetrievalK = 5;

// Every utterance of every session, in order.
std::vector<std::string> history_utterances(const Dialogue& dialogue);

RetrievedContext retrieve_topk(std::span<const Turn> query_turns,
                               const Dialogue& dialogue,
                               std::size_t k,
                               Embedder& embedder);

nlohmann::json retrieved_to_json(const RetrievedContext& ctx);

}  // namespace prefbench
