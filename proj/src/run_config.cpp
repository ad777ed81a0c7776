#include "prefbench/run_config.hpp"

#include "prefbench/error.hpp"
#include "prefbench/json_io.hpp"

namespace prefbench {

namespace {

std::vector<std::string> split_ids(std::string_view id) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        auto plus = id.find('+', start);
        out.emplace_back(id.substr(start, plus == std::string_view::npos ? std::string_view::npos : plus - start));
        if (plus == std::string_view::npos) break;
        start = plus + 1;
    }
    for (const auto& s : out) {
        if (s.empty()) throw ConfigError("malformed id '" + std::string(id) + "'");
    }
    return out;
}

std::filesystem::path relative_to(const std::filesystem::path& p, const std::filesystem::path& base) {
    return p.is_absolute() || base.empty() ? p : (base / p).lexically_normal();
}

EndpointSettings endpoint_from_json(const nlohmann::json& j) {
    EndpointSettings e;
    e.base_url = j.value("base_url", std::string());
    e.model = j.value("model", std::string());
    e.credential_env = j.value("credential_env", e.credential_env);
    e.in_flight = j.value("in_flight", e.in_flight);
    e.max_retries = j.value("max_retries", e.max_retries);
    e.timeout = std::chrono::milliseconds(j.value("timeout_ms", static_cast<long long>(e.timeout.count())));
    return e;
}

nlohmann::ordered_json endpoint_to_json(const EndpointSettings& e) {
    nlohmann::ordered_json j;
    j["base_url"] = e.base_url;
    j["model"] = e.model;
    j["credential_env"] = e.credential_env;
    j["in_flight"] = e.in_flight;
    j["max_retries"] = e.max_retries;
    j["timeout_ms"] = e.timeout.count();
    return j;
}

void reject_credentials(const nlohmann::json& j, const std::string& where) {
    if (!j.is_object()) return;
    for (const auto& [k, v] : j.items()) {
        std::string key = to_lower_ascii(k);
        if (key == "api_key" || key == "apikey" || key == "key" || key == "token" || key == "secret" || key == "password") {
            throw ConfigError(where + "." + k + ": credentials are read from the environment only (see credential_env)");
        }
        if (v.is_object()) reject_credentials(v, where + "." + k);
    }
}

}  // namespace

std::string_view to_string(Method m) {
    switch (m) {
        case Method::base: return "base";
        case Method::retrieval: return "retrieval";
        case Method::prefine: return "prefine";
        case Method::deterministic_ground: return "deterministic-ground";
    }
    return "base";
}

Method parse_method(std::string_view s) {
    std::string k = to_lower_ascii(s);
    if (k == "base") return Method::base;
    if (k == "retrieval" || k == "rag") return Method::retrieval;
    if (k == "prefine" || k == "memory") return Method::prefine;
    if (k == "deterministic-ground" || k == "deterministic_ground" || k == "ground") return Method::deterministic_ground;
    throw ConfigError("unknown method '" + std::string(s) + "'");
}

void RunConfig::validate() const {
    if (max_rounds < 1) throw ConfigError("max_rounds must be at least 1");
    if (retrieval_k < 1) throw ConfigError("retrieval k must be at least 1");
    if (recall_min < 1) throw ConfigError("recall_min must be at least 1");
    if (recency_window < 1) throw ConfigError("recency_window must be at least 1");
    if (jobs < 1) throw ConfigError("jobs must be at least 1");
    if (!std::filesystem::exists(corpus)) throw ConfigError("corpus file " + corpus.string() + " does not exist");
    if (memory_backend != "rule-oracle" && memory_backend != "model") throw ConfigError("unknown memory backend '" + memory_backend + "'");
    if (inference_backend != "deterministic" && inference_backend != "http") {
        throw ConfigError("unknown inference backend '" + inference_backend + "'");
    }
    if (embedder != "bow" && embedder != "http") throw ConfigError("unknown embedder '" + embedder + "'");
    if (prompts_dir && !std::filesystem::is_directory(*prompts_dir)) throw ConfigError("prompts_dir " + prompts_dir->string() + " is not a directory");
    for (const auto& id : {schema_id, memory_schema_id.value_or(schema_id)}) {
        for (const auto& part : split_ids(id)) {
            auto p = data_dir / "schemas" / (part + ".json");
            if (!std::filesystem::exists(p)) throw ConfigError("schema '" + part + "' not found at " + p.string());
        }
    }
    for (const auto& part : split_ids(taxonomy_id)) {
        auto p = data_dir / "taxonomies" / (part + ".json");
        if (!std::filesystem::exists(p)) throw ConfigError("taxonomy '" + part + "' not found at " + p.string());
    }
    bool needs_http = inference_backend == "http" || (method == Method::prefine && memory_backend == "model");
    if (needs_http && (endpoint.base_url.empty() || endpoint.model.empty())) {
        throw ConfigError("an http backend needs endpoint.base_url and endpoint.model");
    }
}

RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
    reject_credentials(j, "config");
    RunConfig c;
    try {
        if (j.contains("data_dir")) c.data_dir = relative_to(j.at("data_dir").get<std::string>(), base_dir);
        if (j.contains("corpus")) c.corpus = relative_to(j.at("corpus").get<std::string>(), base_dir);
        c.schema_id = j.value("schema_id", c.schema_id);
        c.taxonomy_id = j.value("taxonomy_id", c.taxonomy_id);
        if (j.contains("memory_schema_id")) c.memory_schema_id = j.at("memory_schema_id").get<std::string>();
        if (j.contains("method")) c.method = parse_method(j.at("method").get<std::string>());
        c.memory_backend = j.value("memory_backend", c.memory_backend);
        c.inference_backend = j.value("inference_backend", c.inference_backend);
        c.embedder = j.value("embedder", c.embedder);
        if (j.contains("endpoint")) c.endpoint = endpoint_from_json(j.at("endpoint"));
        if (j.contains("embedding_endpoint")) c.embedding_endpoint = endpoint_from_json(j.at("embedding_endpoint"));
        if (j.contains("prompts_dir")) c.prompts_dir = relative_to(j.at("prompts_dir").get<std::string>(), base_dir);
        c.max_rounds = j.value("max_rounds", c.max_rounds);
        c.retrieval_k = j.value("retrieval_k", c.retrieval_k);
        c.recall_min = j.value("recall_min", c.recall_min);
        c.recency_window = j.value("recency_window", c.recency_window);
        c.token_counter = j.value("token_counter", c.token_counter);
        if (j.contains("out_dir")) c.out_dir = relative_to(j.at("out_dir").get<std::string>(), base_dir);
        if (j.contains("memory_dir")) c.memory_dir = relative_to(j.at("memory_dir").get<std::string>(), base_dir);
        c.seed = j.value("seed", c.seed);
        if (j.contains("sample") && !j.at("sample").is_null()) c.sample = j.at("sample").get<std::size_t>();
        c.jobs = j.value("jobs", c.jobs);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed run config: ") + e.what());
    }
    return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
        j = read_json_file(path);
    } catch (const DataError& e) {
        throw ConfigError(e.what());
    }
    return run_config_from_json(j, path.parent_path());
}

nlohmann::ordered_json run_config_to_json(const RunConfig& c) {
    nlohmann::ordered_json j;
    j["data_dir"] = c.data_dir.string();
    j["corpus"] = c.corpus.string();
    j["schema_id"] = c.schema_id;
    j["taxonomy_id"] = c.taxonomy_id;
    j["memory_schema_id"] = c.memory_schema_id.value_or(c.schema_id);
    j["method"] = to_string(c.method);
    j["memory_backend"] = c.memory_backend;
    j["inference_backend"] = c.inference_backend;
    j["embedder"] = c.embedder;
    j["endpoint"] = endpoint_to_json(c.endpoint);
    j["embedding_endpoint"] = c.embedding_endpoint ? endpoint_to_json(*c.embedding_endpoint) : nlohmann::ordered_json();
    j["prompts_dir"] = c.prompts_dir ? nlohmann::ordered_json(c.prompts_dir->string()) : nlohmann::ordered_json();
    j["max_rounds"] = c.max_rounds;
    j["retrieval_k"] = c.retrieval_k;
    j["recall_min"] = c.recall_min;
    j["recency_window"] = c.recency_window;
    j["token_counter"] = c.token_counter;
    j["out_dir"] = c.out_dir.string();
    j["memory_dir"] = c.memory_path().string();
    j["seed"] = c.seed;
    j["sample"] = c.sample ? nlohmann::ordered_json(*c.sample) : nlohmann::ordered_json();
    j["jobs"] = c.jobs;
    return j;
}

ApiSchema resolve_schema(std::string_view id, const std::filesystem::path& data_dir) {
    auto parts = split_ids(id);
    ApiSchema out = load_schema_file(data_dir / "schemas" / (parts[0] + ".json"));
    for (std::size_t i = 1; i < parts.size(); ++i) out = ApiSchema::merge(out, load_schema_file(data_dir / "schemas" / (parts[i] + ".json")));
    return out;
}

PreferenceTaxonomy resolve_taxonomy(std::string_view id, const std::filesystem::path& data_dir) {
    auto parts = split_ids(id);
    PreferenceTaxonomy out = load_taxonomy_file(data_dir / "taxonomies" / (parts[0] + ".json"));
    for (std::size_t i = 1; i < parts.size(); ++i) {
        out = PreferenceTaxonomy::merge(out, load_taxonomy_file(data_dir / "taxonomies" / (parts[i] + ".json")));
    }
    return out;
}

}  // namespace prefbench
