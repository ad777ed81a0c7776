#include "prefbench/commands.hpp"

#include "prefbench/error.hpp"
#include "prefbench/http_gateway.hpp"
#include "prefbench/json_io.hpp"
#include "prefbench/model_backend.hpp"
#include "prefbench/mpt_import.hpp"
#include "prefbench/retrieval.hpp"
#include "prefbench/rule_oracle.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <fstream>
#include <mutex>
#include <ostream>
#include <random>
#include <thread>

namespace prefbench {

namespace fs = std::filesystem;

namespace {

void write_ordered(const fs::path& path, const nlohmann::ordered_json& j) { write_text_atomic(path, j.dump(2) + "\n"); }

// Runs fn(i) for i in [0, n) on up to `jobs` threads. Exceptions escaping fn
// are rethrown after all workers stop.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t jobs, Fn fn) {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mu;
    auto worker = [&] {
        while (true) {
            std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(failure_mu);
                if (!failure) failure = std::current_exception();
                next.store(n);
                return;
            }
        }
    };
    std::size_t threads = std::max<std::size_t>(1, std::min(jobs, n));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);
}

std::vector<fs::path> id_files(std::string_view id, const fs::path& dir, const char* kind) {
    std::vector<fs::path> out;
    std::size_t start = 0;
    while (true) {
        auto plus = id.find('+', start);
        auto part = id.substr(start, plus == std::string_view::npos ? std::string_view::npos : plus - start);
        out.push_back(dir / kind / (std::string(part) + ".json"));
        if (plus == std::string_view::npos) break;
        start = plus + 1;
    }
    return out;
}

nlohmann::ordered_json input_digests(const RunConfig& c) {
    nlohmann::ordered_json j;
    j["corpus"] = {{"path", c.corpus.string()}, {"sha256", file_sha256(c.corpus)}};
    nlohmann::ordered_json schemas = nlohmann::ordered_json::array();
    for (const auto& p : id_files(c.schema_id, c.data_dir, "schemas")) schemas.push_back({{"path", p.string()}, {"sha256", file_sha256(p)}});
    if (c.memory_schema_id && *c.memory_schema_id != c.schema_id) {
        for (const auto& p : id_files(*c.memory_schema_id, c.data_dir, "schemas")) {
            schemas.push_back({{"path", p.string()}, {"sha256", file_sha256(p)}});
        }
    }
    j["schemas"] = std::move(schemas);
    nlohmann::ordered_json taxonomies = nlohmann::ordered_json::array();
    for (const auto& p : id_files(c.taxonomy_id, c.data_dir, "taxonomies")) taxonomies.push_back({{"path", p.string()}, {"sha256", file_sha256(p)}});
    j["taxonomies"] = std::move(taxonomies);
    PromptLibrary prompts = c.prompts_dir ? PromptLibrary::with_overrides(*c.prompts_dir) : PromptLibrary::builtin();
    std::string all;
    for (auto r : {PromptRole::generator, PromptRole::verifier, PromptRole::refiner, PromptRole::inference_full_history,
                   PromptRole::inference_memory, PromptRole::inference_retrieved}) {
        all += prompts.source(r);
    }
    j["prompts_sha256"] = sha256_hex(all);
    return j;
}

nlohmann::ordered_json manifest(const std::string& command, const RunConfig& c) {
    nlohmann::ordered_json j;
    j["tool"] = "prefbench";
    j["version"] = PREFBENCH_VERSION;
    j["command"] = command;
    j["config"] = run_config_to_json(c);
    j["inputs"] = input_digests(c);
    return j;
}

std::size_t history_tokens(const Dialogue& d, const TokenCounter& counter) {
    std::size_t n = 0;
    for (const auto& u : history_utterances(d)) n += counter.count(u);
    return n;
}

}  // namespace

int exit_code_for(ErrorClass c) {
    switch (c) {
        case ErrorClass::config: return exit_config;
        case ErrorClass::data: return exit_data;
        case ErrorClass::backend: return exit_backend;
    }
    return exit_data;
}

RunConfig effective_config(const GlobalOptions& opts) {
    RunConfig c = opts.config ? load_run_config(*opts.config) : RunConfig{};
    if (opts.out) c.out_dir = *opts.out;
    if (opts.jobs) c.jobs = *opts.jobs;
    if (opts.seed) c.seed = *opts.seed;
    return c;
}

Workspace load_workspace(const RunConfig& config) {
    config.validate();
    Workspace ws{config,
                 resolve_schema(config.schema_id, config.data_dir),
                 resolve_schema(config.memory_schema_id.value_or(config.schema_id), config.data_dir),
                 resolve_taxonomy(config.taxonomy_id, config.data_dir),
                 {},
                 file_sha256(config.corpus)};
    ws.corpus = load_corpus_file(config.corpus, ws.schema);
    for (const auto& d : label_instances(ws.corpus, ws.taxonomy, config.recall_min)) {
        spdlog::warn("instance {}: stored modeling type {} but the classifier says {}", d.instance_id, to_string(d.stored),
                     to_string(d.recomputed));
    }
    return ws;
}

HypothesisBackendHandle make_hypothesis_backend(const Workspace& ws) {
    HypothesisBackendHandle h;
    const auto& c = ws.config;
    if (c.memory_backend == "rule-oracle") {
        h.backend = std::make_unique<RuleOracleBackend>(ws.memory_schema, ws.taxonomy, c.recency_window);
    } else {
        h.gateway = std::make_unique<HttpGateway>(c.endpoint);
        PromptLibrary prompts = c.prompts_dir ? PromptLibrary::with_overrides(*c.prompts_dir) : PromptLibrary::builtin();
        h.backend = std::make_unique<ModelHypothesisBackend>(*h.gateway, std::move(prompts));
    }
    return h;
}

PredictorHandle make_predictor(const Workspace& ws) {
    PredictorHandle h;
    const auto& c = ws.config;
    if (c.method == Method::deterministic_ground || c.inference_backend == "deterministic") {
        h.predictor = std::make_unique<GroundingPredictor>(ws.taxonomy);
    } else {
        h.gateway = std::make_unique<HttpGateway>(c.endpoint);
        PromptLibrary prompts = c.prompts_dir ? PromptLibrary::with_overrides(*c.prompts_dir) : PromptLibrary::builtin();
        h.predictor = std::make_unique<GatewayPredictor>(*h.gateway, std::move(prompts));
    }
    if (c.method == Method::retrieval) {
        if (c.embedder == "http") {
            h.embedder = std::make_unique<HttpEmbedder>(c.embedding_endpoint.value_or(c.endpoint));
        } else {
            h.embedder = std::make_unique<BagOfWordsEmbedder>();
        }
    }
    return h;
}

std::string memory_file_name(const std::string& dialogue_id) {
    std::string safe;
    bool changed = false;
    for (char ch : dialogue_id) {
        bool ok = std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_' || ch == '.';
        safe += ok ? ch : '_';
        changed = changed || !ok;
    }
    if (safe.empty() || safe[0] == '.') {
        safe = "_" + safe;
        changed = true;
    }
    if (changed) safe += "-" + sha256_hex(dialogue_id).substr(0, 8);
    return safe + ".json";
}

MemoryBuildSummary build_memories(const Workspace& ws, HypothesisBackend& backend, bool force) {
    const auto& c = ws.config;
    fs::path dir = c.memory_path();
    fs::create_directories(dir);
    const auto& dialogues = ws.corpus.dialogues;
    std::vector<std::optional<MemoryState>> memories(dialogues.size());
    std::vector<std::string> failures(dialogues.size());
    std::vector<char> reused(dialogues.size(), 0);

    parallel_for(dialogues.size(), c.jobs, [&](std::size_t i) {
        const Dialogue& d = dialogues[i];
        fs::path file = dir / memory_file_name(d.id());
        fs::path partial = file;
        partial.replace_extension(".partial.json");
        if (!force && fs::exists(file)) {
            memories[i] = load_memory_file(file);
            reused[i] = 1;
            return;
        }
        try {
            MemoryState m = build_memory(d, backend, c.max_rounds);
            write_ordered(file, memory_to_json(m));
            if (fs::exists(partial)) fs::remove(partial);
            memories[i] = std::move(m);
        } catch (const MemoryBuildError& e) {
            spdlog::error("dialogue {}: {}", d.id(), e.what());
            failures[i] = d.id() + ": " + e.what();
            write_ordered(partial, memory_to_json(e.partial()));
        }
    });

    MemoryBuildSummary s;
    std::vector<MemoryState> done;
    std::vector<std::size_t> hist;
    auto counter = make_token_counter(c.token_counter);
    for (std::size_t i = 0; i < dialogues.size(); ++i) {
        if (memories[i]) {
            (reused[i] ? s.reused : s.built)++;
            done.push_back(*memories[i]);
            hist.push_back(history_tokens(dialogues[i], *counter));
        } else {
            ++s.failed;
            s.failures.push_back(failures[i]);
        }
    }
    s.footprint = footprint(done, *counter, hist);

    nlohmann::ordered_json m = manifest("memory build", c);
    m["memory_backend"] = backend.identity();
    m["max_rounds"] = c.max_rounds;
    m["memory_schema_id"] = ws.memory_schema.id();
    m["taxonomy_id"] = ws.taxonomy.id();
    write_ordered(dir / "manifest.json", m);
    nlohmann::ordered_json summary;
    summary["dialogues"] = dialogues.size();
    summary["complete"] = s.built + s.reused;
    summary["failed"] = s.failed;
    summary["failures"] = s.failures;
    summary["footprint"] = footprint_to_json(s.footprint);
    write_ordered(dir / "summary.json", summary);
    return s;
}

EvalSummary run_eval(const Workspace& ws, CallPredictor& predictor, Embedder* embedder, bool force) {
    const auto& c = ws.config;
    fs::create_directories(c.out_dir);
    fs::path results_path = c.out_dir / "results.jsonl";

    std::vector<const QueryInstance*> instances;
    for (const auto& q : ws.corpus.instances) instances.push_back(&q);
    if (c.sample && *c.sample < instances.size()) {
        std::mt19937_64 rng(c.seed);
        std::shuffle(instances.begin(), instances.end(), rng);
        instances.resize(*c.sample);
    }
    std::sort(instances.begin(), instances.end(), [](const QueryInstance* a, const QueryInstance* b) { return a->instance_id < b->instance_id; });
    std::set<std::string> wanted;
    for (const auto* q : instances) wanted.insert(q->instance_id);

    bool uses_memory = c.method == Method::prefine || c.method == Method::deterministic_ground;
    std::map<std::string, MemoryState> memories;
    if (uses_memory) {
        fs::path dir = c.memory_path();
        if (!fs::is_directory(dir)) throw ConfigError("memory directory " + dir.string() + " does not exist; run `memory build` first");
        for (const auto& d : ws.corpus.dialogues) {
            fs::path file = dir / memory_file_name(d.id());
            if (fs::exists(file)) memories.emplace(d.id(), load_memory_file(file));
        }
    }
    if (c.method == Method::retrieval && !embedder) throw ConfigError("retrieval needs an embedder");

    // resume
    std::map<std::string, EvalRecord> records;
    if (fs::exists(results_path)) {
        if (force) {
            fs::remove(results_path);
        } else {
            for (const auto& j : read_jsonl(results_path)) {
                EvalRecord r = record_from_json(j);
                if (wanted.count(r.instance_id)) records.emplace(r.instance_id, std::move(r));
            }
            std::string text;
            for (const auto& [id, r] : records) text += record_to_json(r).dump() + "\n";
            write_text_atomic(results_path, text);
        }
    }
    EvalSummary summary;
    summary.reused = records.size();

    std::vector<const QueryInstance*> pending;
    for (const auto* q : instances) {
        if (!records.count(q->instance_id)) pending.push_back(q);
    }

    std::mutex mu;
    std::ofstream append(results_path, std::ios::app);
    if (!append) throw DataError("cannot open " + results_path.string() + " for appending");

    parallel_for(pending.size(), c.jobs, [&](std::size_t i) {
        const QueryInstance& q = *pending[i];
        const Dialogue* d = ws.corpus.find_dialogue(q.dialogue_id);
        Prediction p;
        std::optional<std::size_t> retrieved;
        std::optional<std::string> note;
        try {
            Conditioning cond;
            switch (c.method) {
                case Method::base: cond = FullHistory{d}; break;
                case Method::retrieval: {
                    auto ctx = retrieve_topk(q.query_turns, *d, c.retrieval_k, *embedder);
                    retrieved = ctx.items.size();
                    cond = RetrievedConditioning{std::move(ctx)};
                    break;
                }
                case Method::prefine:
                case Method::deterministic_ground: {
                    auto it = memories.find(q.dialogue_id);
                    if (it == memories.end()) note = "no memory export for dialogue " + q.dialogue_id;
                    cond = MemoryConditioning{it == memories.end() ? nullptr : &it->second};
                    break;
                }
            }
            p = predictor.predict(q, cond, ws.schema);
        } catch (const Error& e) {
            p = Prediction{};
            p.error = e.what();
        }
        if (note && !p.error) p.error = note;
        EvalRecord r = score_instance(q, p);
        r.retrieved_items = retrieved;
        std::string line = record_to_json(r).dump() + "\n";
        std::lock_guard lock(mu);
        append << line;
        append.flush();
        records.emplace(r.instance_id, std::move(r));
    });
    append.close();

    std::vector<EvalRecord> ordered;
    std::string text;
    for (auto& [id, r] : records) {
        text += record_to_json(r).dump() + "\n";
        if (r.error) ++summary.errored;
        ordered.push_back(r);
    }
    write_text_atomic(results_path, text);
    summary.scored = pending.size();
    summary.results_path = results_path;

    auto counter = make_token_counter(c.token_counter);
    MethodResults res;
    res.method = std::string(to_string(c.method));
    res.fingerprint = {ws.schema.id(), ws.taxonomy.id(), c.recall_min, counter->identity(), predictor.identity(), ws.corpus_digest};
    if (!ordered.empty()) res.report = aggregate(ordered);
    if (uses_memory) {
        std::vector<MemoryState> ms;
        std::vector<std::size_t> hist;
        for (const auto& d : ws.corpus.dialogues) {
            auto it = memories.find(d.id());
            if (it == memories.end()) continue;
            ms.push_back(it->second);
            hist.push_back(history_tokens(d, *counter));
        }
        res.footprint = footprint(ms, *counter, hist);
    }
    res.source = c.out_dir.string();
    summary.results = res;

    nlohmann::ordered_json m = manifest("eval run", c);
    m["method"] = res.method;
    m["fingerprint"] = fingerprint_to_json(res.fingerprint);
    if (uses_memory && fs::exists(c.memory_path() / "manifest.json")) {
        auto mm = read_json_file(c.memory_path() / "manifest.json");
        m["memory_backend"] = mm.value("memory_backend", std::string());
        m["memory_manifest_sha256"] = file_sha256(c.memory_path() / "manifest.json");
    }
    m["outputs"] = {{"results", results_path.string()}, {"results_sha256", file_sha256(results_path)}};
    write_ordered(c.out_dir / "manifest.json", m);
    if (!ordered.empty()) {
        write_ordered(c.out_dir / "report.json", render_report_json({res}));
        write_text_atomic(c.out_dir / "report.txt", render_report_text({res}));
    }
    return summary;
}

MethodResults load_method_results(const fs::path& path) {
    fs::path results = fs::is_directory(path) ? path / "results.jsonl" : path;
    fs::path dir = results.parent_path();
    if (!fs::exists(results)) throw ConfigError("no results at " + results.string());
    fs::path mpath = dir / "manifest.json";
    if (!fs::exists(mpath)) throw ConfigError("results " + results.string() + " have no manifest.json beside them");
    auto m = read_json_file(mpath);
    MethodResults r;
    r.method = m.value("method", std::string("unknown"));
    r.fingerprint = fingerprint_from_json(m.at("fingerprint"));
    r.source = fs::is_directory(path) ? path.string() : results.string();
    std::vector<EvalRecord> records;
    for (const auto& j : read_jsonl(results)) records.push_back(record_from_json(j));
    r.report = aggregate(records);
    if (fs::exists(dir / "report.json")) {
        auto rep = read_json_file(dir / "report.json");
        if (rep.contains("methods") && !rep["methods"].empty() && !rep["methods"][0]["footprint"].is_null()) {
            r.footprint = footprint_from_json(rep["methods"][0]["footprint"]);
        }
    }
    return r;
}

int cmd_dataset_import(const RunConfig& config, const fs::path& export_file, const fs::path& output, std::ostream& out) {
    auto schema = resolve_schema(config.schema_id, config.data_dir);
    auto taxonomy = resolve_taxonomy(config.taxonomy_id, config.data_dir);
    auto records = read_export_records(export_file);
    auto result = import_mpt_records(records, schema, taxonomy, config.recall_min);
    nlohmann::json doc = corpus_to_json(result.corpus);
    doc["schema_id"] = schema.id();
    doc["taxonomy_id"] = taxonomy.id();
    if (!output.parent_path().empty()) fs::create_directories(output.parent_path());
    write_text_atomic(output, doc.dump(1) + "\n");
    nlohmann::ordered_json report;
    report["records"] = records.size();
    report["dialogues"] = result.corpus.dialogues.size();
    report["instances"] = result.corpus.instances.size();
    report["skipped"] = result.skipped;
    nlohmann::ordered_json dis = nlohmann::ordered_json::array();
    for (const auto& d : result.label_disagreements) {
        dis.push_back({{"instance_id", d.instance_id}, {"stored", to_string(d.stored)}, {"recomputed", to_string(d.recomputed)}});
    }
    report["label_disagreements"] = std::move(dis);
    fs::path side = output;
    side.replace_extension(".import.json");
    write_ordered(side, report);
    out << fmt::format("imported {} dialogues, {} instances from {} records ({} skipped, {} label disagreements)\n",
                       result.corpus.dialogues.size(), result.corpus.instances.size(), records.size(), result.skipped.size(),
                       result.label_disagreements.size());
    out << "wrote " << output.string() << " and " << side.string() << "\n";
    if (result.corpus.dialogues.empty()) throw DataError("nothing could be imported from " + export_file.string());
    return exit_ok;
}

int cmd_dataset_build(const RunConfig& config, const fs::path& source_dir, const fs::path& output, std::ostream& out) {
    auto schema = resolve_schema(config.schema_id, config.data_dir);
    auto taxonomy = resolve_taxonomy(config.taxonomy_id, config.data_dir);
    try {
        const auto sessions_doc = read_json_file(source_dir / "sessions.json");
        const auto manifests_doc = read_json_file(source_dir / "manifests.json");
        const auto templates_doc = read_json_file(source_dir / "templates.json");
        const auto queries_doc = read_json_file(source_dir / "queries.json");
        SessionStore store;
        for (const auto& sj : sessions_doc.at("sessions")) {
            Session s = session_from_json(sj);
            if (!store.emplace(s.session_id, s).second) throw DataError("duplicate session id " + s.session_id);
        }
        Corpus corpus;
        for (const auto& mj : manifests_doc.at("dialogues")) {
            GroupingManifest gm{mj.at("dialogue_id").get<std::string>(), mj.at("session_ids").get<std::vector<std::string>>()};
            corpus.dialogues.push_back(assemble_dialogue(gm, store));
        }
        std::map<std::string, QueryTemplate> templates;
        for (const auto& tj : templates_doc.at("templates")) {
            auto t = load_query_template(tj, schema);
            templates.emplace(t.template_id, std::move(t));
        }
        std::map<std::string, ModelingType> expected;
        for (const auto& qj : queries_doc.at("queries")) {
            std::string id = qj.at("instance_id").get<std::string>();
            auto t = templates.find(qj.at("template_id").get<std::string>());
            if (t == templates.end()) throw DataError("query " + id + " names unknown template");
            auto gold = parse_call(qj.at("gold_call").get<std::string>());
            if (gold.size() != 1) throw DataError("query " + id + " gold must be one call");
            std::map<std::string, std::string> bindings;
            if (qj.contains("bindings")) bindings = qj.at("bindings").get<std::map<std::string, std::string>>();
            QueryInstance q = instantiate_query(t->second, bindings, gold.front(), taxonomy);
            q.instance_id = id;
            q.dialogue_id = qj.at("dialogue_id").get<std::string>();
            if (qj.contains("modeling_type")) expected[id] = parse_modeling_type(qj.at("modeling_type").get<std::string>());
            corpus.instances.push_back(std::move(q));
        }
        for (const auto& q : corpus.instances) {
            const Dialogue* d = corpus.find_dialogue(q.dialogue_id);
            if (!d) throw DataError("instance " + q.instance_id + ": dangling reference to dialogue " + q.dialogue_id);
        }
        label_instances(corpus, taxonomy, config.recall_min);
        std::vector<std::string> problems;
        for (const auto& q : corpus.instances) {
            auto e = expected.find(q.instance_id);
            if (e != expected.end() && q.modeling_type != e->second) {
                problems.push_back(fmt::format("{}: expected {}, classified {}", q.instance_id, to_string(e->second),
                                               to_string(*q.modeling_type)));
            }
        }
        if (!problems.empty()) {
            std::string msg = "modeling-type expectations not met:";
            for (const auto& p : problems) msg += "\n  " + p;
            throw DataError(msg);
        }
        nlohmann::json doc = corpus_to_json(corpus);
        doc["schema_id"] = schema.id();
        doc["taxonomy_id"] = taxonomy.id();
        // round-trip through the strict loader before writing
        load_corpus(doc, schema);
        if (!output.parent_path().empty()) fs::create_directories(output.parent_path());
        write_text_atomic(output, doc.dump(1) + "\n");
        out << fmt::format("built {} dialogues, {} instances -> {}\n", corpus.dialogues.size(), corpus.instances.size(), output.string());
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed build input: ") + e.what());
    }
    return exit_ok;
}

int cmd_dataset_stats(const RunConfig& config, bool as_json, std::ostream& out) {
    config.validate();
    auto schema = resolve_schema(config.schema_id, config.data_dir);
    auto taxonomy = resolve_taxonomy(config.taxonomy_id, config.data_dir);
    auto loaded = load_corpus_collecting(read_json_file(config.corpus), schema);
    for (const auto& e : loaded.errors) spdlog::warn("{}", e);
    label_instances(loaded.corpus, taxonomy, config.recall_min);
    auto stats = corpus_stats(loaded.corpus, taxonomy);
    if (as_json) {
        out << stats.to_json().dump(2) << "\n";
    } else {
        out << stats.render();
    }
    return loaded.errors.empty() ? exit_ok : exit_data;
}

int cmd_dataset_validate(const RunConfig& config, std::ostream& out) {
    nlohmann::ordered_json errors = nlohmann::ordered_json::array();
    auto add = [&](const std::string& where, const std::string& what) { errors.push_back({{"where", where}, {"message", what}}); };
    std::optional<ApiSchema> schema;
    std::optional<PreferenceTaxonomy> taxonomy;
    try {
        schema = resolve_schema(config.schema_id, config.data_dir);
    } catch (const Error& e) {
        add("schema " + config.schema_id, e.what());
    }
    try {
        taxonomy = resolve_taxonomy(config.taxonomy_id, config.data_dir);
    } catch (const Error& e) {
        add("taxonomy " + config.taxonomy_id, e.what());
    }
    if (schema && taxonomy) {
        for (const auto& m : taxonomy->mappings()) {
            const DomainSchema* d = schema->find(m.domain);
            if (d && !d->find(m.slot)) add("taxonomy " + taxonomy->id(), m.domain + "." + m.slot + " is not an argument of the schema");
        }
    }
    if (schema) {
        try {
            auto loaded = load_corpus_collecting(read_json_file(config.corpus), *schema);
            for (const auto& e : loaded.errors) {
                auto colon = e.find(": ");
                add(colon == std::string::npos ? "corpus" : e.substr(0, colon), colon == std::string::npos ? e : e.substr(colon + 2));
            }
            if (taxonomy) {
                for (const auto& d : label_instances(loaded.corpus, *taxonomy, config.recall_min)) {
                    add("instance " + d.instance_id,
                        fmt::format("stored modeling type {} disagrees with classifier ({})", to_string(d.stored), to_string(d.recomputed)));
                }
            }
        } catch (const Error& e) {
            add("corpus " + config.corpus.string(), e.what());
        }
    }
    nlohmann::ordered_json j;
    j["ok"] = errors.empty();
    j["corpus"] = config.corpus.string();
    j["errors"] = std::move(errors);
    out << j.dump(2) << "\n";
    return j["ok"].get<bool>() ? exit_ok : exit_data;
}

int cmd_memory_build(const RunConfig& config, bool force, std::ostream& out) {
    Workspace ws = load_workspace(config);
    auto handle = make_hypothesis_backend(ws);
    auto s = build_memories(ws, *handle.backend, force);
    out << fmt::format("memory: {} built, {} reused, {} failed -> {}\n", s.built, s.reused, s.failed, config.memory_path().string());
    out << fmt::format("footprint: {:.2f} tokens per dialogue ({})\n", s.footprint.average_tokens, s.footprint.counter);
    for (const auto& f : s.failures) out << "  failed: " << f << "\n";
    return s.failed ? exit_backend : exit_ok;
}

int cmd_eval_run(const RunConfig& config, bool force, std::ostream& out) {
    Workspace ws = load_workspace(config);
    auto handle = make_predictor(ws);
    auto s = run_eval(ws, *handle.predictor, handle.embedder.get(), force);
    out << fmt::format("eval: {} scored, {} reused, {} errored -> {}\n", s.scored, s.reused, s.errored, s.results_path.string());
    if (s.results.report.total) out << "\n" << render_report_text({s.results});
    return exit_ok;
}

int cmd_report(const std::vector<fs::path>& inputs, bool force, const std::optional<fs::path>& out_dir, std::ostream& out) {
    if (inputs.empty()) throw ConfigError("report needs at least one results path");
    std::vector<MethodResults> all;
    for (const auto& p : inputs) all.push_back(load_method_results(p));
    std::map<std::string, int> seen;
    for (const auto& r : all) ++seen[r.method];
    for (auto& r : all) {
        if (seen[r.method] > 1) r.method += " [" + fs::path(r.source).filename().string() + "]";
    }
    check_comparable(all, force);
    std::string text = render_report_text(all);
    out << text;
    if (out_dir) {
        fs::create_directories(*out_dir);
        write_text_atomic(*out_dir / "report.txt", text);
        write_ordered(*out_dir / "report.json", render_report_json(all));
    }
    return exit_ok;
}

}  // namespace prefbench
