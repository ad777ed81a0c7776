#include "prefbench/retrieval.hpp"

#include "prefbench/error.hpp"

#include <algorithm>
#include <sstream>

namespace prefbench {

std::vector<std::string> history_utterances(const Dialogue& dialogue) {
    std::vector<std::string> out;
    for (const auto& s : dialogue.sessions()) {
        for (const auto& t : s.turns) out.push_back(t.text);
    }
    return out;
}

RetrievedContext retrieve_topk(std::span<const Turn> query_turns, const Dialogue& dialogue, std::size_t k, Embedder& embedder) {
    if (k < 1) throw ConfigError("retrieval k must be at least 1");
    std::string query;
    for (const auto& t : query_turns) {
        if (!query.empty()) query += '\n';
        query += t.text;
    }
    auto q = embedder.embed(query);
    auto utterances = history_utterances(dialogue);
    std::vector<RetrievedItem> items;
    items.reserve(utterances.size());
    for (std::size_t i = 0; i < utterances.size(); ++i) {
        auto v = embedder.embed(utterances[i]);
        double score = std::clamp(cosine_similarity(q, v), -1.0, 1.0);
        items.push_back({utterances[i], score, i});
    }
    std::stable_sort(items.begin(), items.end(), [](const RetrievedItem& a, const RetrievedItem& b) { return a.score > b.score; });
    if (items.size() > k) items.resize(k);
    return {std::move(items), k};
}

std::string RetrievedContext::render() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) os << '\n';
        os << i + 1 << ". " << items[i].text;
    }
    return os.str();
}

nlohmann::json retrieved_to_json(const RetrievedContext& ctx) {
    nlohmann::json items = nlohmann::json::array();
    for (const auto& it : ctx.items) items.push_back({{"text", it.text}, {"score", it.score}, {"position", it.position}});
    return {{"k", ctx.k}, {"items", items}};
}

}  // namespace prefbench
