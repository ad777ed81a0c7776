#pragma once

#include "prefbench/api_call.hpp"
#include "prefbench/corpus.hpp"
#include "prefbench/json_io.hpp"
#include "prefbench/run_config.hpp"
#include "prefbench/schema.hpp"
#include "prefbench/taxonomy.hpp"

#include <filesystem>
#include <random>
#include <string>

#include <unistd.h>

namespace testing {

inline std::filesystem::path data_dir() { return PREFBENCH_DATA_DIR; }

inline const prefbench::ApiSchema& base_schema() {
    static const auto s = prefbench::resolve_schema("mpt-base", data_dir());
    return s;
}
inline const prefbench::ApiSchema& full_schema() {
    static const auto s = prefbench::resolve_schema("mpt-base+mpt-extended", data_dir());
    return s;
}
inline const prefbench::PreferenceTaxonomy& base_taxonomy() {
    static const auto t = prefbench::resolve_taxonomy("mpt-base", data_dir());
    return t;
}
inline const prefbench::PreferenceTaxonomy& full_taxonomy() {
    static const auto t = prefbench::resolve_taxonomy("mpt-base+mpt-extended", data_dir());
    return t;
}
inline const prefbench::Corpus& synthetic_corpus() {
    static const auto c = prefbench::load_corpus_file(data_dir() / "synthetic" / "corpus.json", base_schema());
    return c;
}

inline prefbench::ApiCall call(std::string_view text) {
    auto calls = prefbench::parse_call(text);
    if (calls.size() != 1) throw std::runtime_error("fixture must hold one call");
    return calls.front();
}

// Session with one user turn and one agent turn carrying `calls`.
inline prefbench::Session session(std::string id, std::vector<std::string_view> calls) {
    prefbench::Session s;
    s.session_id = std::move(id);
    s.turns.push_back({prefbench::Speaker::user, "request", {}});
    prefbench::Turn agent{prefbench::Speaker::agent, "ok", {}};
    for (auto c : calls) agent.calls.push_back(call(c));
    s.turns.push_back(std::move(agent));
    return s;
}

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("prefbench-test-" + name + "-" + std::to_string(::getpid()));
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

}  // namespace testing
