// Acceptance run: one PASS / FAIL / SKIP line per criterion.

#include "fixtures.hpp"
#include "support.hpp"

#include "prefbench/commands.hpp"
#include "prefbench/metrics.hpp"
#include "prefbench/mpt_import.hpp"
#include "prefbench/predictor.hpp"
#include "prefbench/report.hpp"
#include "prefbench/rule_oracle.hpp"
#include "prefbench/tokens.hpp"

#include <fmt/core.h>
#include <spdlog/spdlog.h>

#include <array>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>

using namespace prefbench;
namespace fs = std::filesystem;

namespace {

struct Skip {
    std::string reason;
};

// Collects failed expectations; a criterion passes when none were recorded.
class Checks {
public:
    void expect(bool ok, const std::string& what) {
        if (!ok) failures_.push_back(what);
    }
    bool ok() const { return failures_.empty(); }
    std::string summary() const {
        std::string s;
        for (std::size_t i = 0; i < failures_.size() && i < 5; ++i) s += (i ? "; " : "") + failures_[i];
        if (failures_.size() > 5) s += fmt::format("; ... {} more", failures_.size() - 5);
        return s;
    }

private:
    std::vector<std::string> failures_;
};

using Outcome = std::variant<Checks, Skip>;

struct Item {
    int number;
    const char* title;
    double budget_s;  // 0: no runtime bound
    std::function<Outcome()> run;
};

nlohmann::json config_json(const fs::path& out, const char* method, const char* corpus = "corpus.json") {
    return {{"corpus", (testing::data_dir() / "synthetic" / corpus).string()},
            {"method", method},
            {"memory_backend", "rule-oracle"},
            {"max_rounds", 3},
            {"out_dir", out.string()}};
}

std::vector<EvalRecord> read_records(const fs::path& results) {
    std::vector<EvalRecord> out;
    std::ifstream in(results);
    for (std::string line; std::getline(in, line);) {
        if (!line.empty()) out.push_back(record_from_json(nlohmann::json::parse(line)));
    }
    return out;
}

// Builds rule-oracle memories (when the method needs them) and scores the corpus.
std::vector<EvalRecord> pipeline(const nlohmann::json& cfg_json, const fs::path& base) {
    auto cfg = run_config_from_json(cfg_json, base);
    auto ws = load_workspace(cfg);
    if (cfg.method == Method::deterministic_ground || cfg.method == Method::prefine) {
        auto backend = make_hypothesis_backend(ws);
        auto summary = build_memories(ws, *backend.backend, true);
        if (summary.failed) throw std::runtime_error(fmt::format("{} memory builds failed", summary.failed));
    }
    auto handle = make_predictor(ws);
    auto eval = run_eval(ws, *handle.predictor, handle.embedder.get(), true);
    return read_records(eval.results_path);
}

const ApiCall* first_in_domain(const EvalRecord& r) {
    for (const auto& c : r.predicted) {
        if (c.domain == r.gold.domain) return &c;
    }
    return nullptr;
}

Outcome schema_fidelity() {
    Checks c;
    auto check = [&](const ApiSchema& s, const std::map<std::string, std::vector<std::string>>& table, const char* which) {
        c.expect(s.domains().size() == table.size(), fmt::format("{}: {} domains", which, s.domains().size()));
        for (const auto& [domain, args] : table) {
            const auto* d = s.find(domain);
            if (!d) {
                c.expect(false, fmt::format("{}: missing {}", which, domain));
                continue;
            }
            std::vector<std::string> names;
            for (const auto& a : d->arguments) names.push_back(a.name);
            std::sort(names.begin(), names.end());
            auto want = args;
            std::sort(want.begin(), want.end());
            c.expect(names == want, fmt::format("{}: argument list of {}", which, domain));
        }
    };
    check(load_schema_file(testing::data_dir() / "schemas" / "mpt-base.json"), testing::kBaseTable, "base");
    check(load_schema_file(testing::data_dir() / "schemas" / "mpt-extended.json"), testing::kExtendedTable, "extended");
    c.expect(testing::kBaseTable.size() == 14 && testing::kExtendedTable.size() == 7, "table sizes");
    return c;
}

Outcome taxonomy_fidelity() {
    Checks c;
    auto rows = [&](std::span<const testing::Row> table, const PreferenceTaxonomy& tax) {
        for (const auto& r : table) {
            auto l = classify_argument(r.domain, r.slot, Value::bare(r.value), tax);
            c.expect(l && l->group == r.group && l->preference == r.preference,
                     fmt::format("{}.{}={}", r.domain, r.slot, r.value));
        }
    };
    rows(testing::kBaseRows, testing::base_taxonomy());
    rows(testing::kExtendedRows, testing::full_taxonomy());
    std::size_t negatives = 0;
    for (const auto& [d, s, v] : testing::kNonPreference) {
        ++negatives;
        c.expect(!classify_argument(d, s, Value::bare(v), testing::full_taxonomy()), fmt::format("{}.{}={} classified", d, s, v));
    }
    c.expect(negatives == 20, "20 non-preference triples");
    return c;
}

Outcome evidence_record() {
    Checks c;
    std::vector<ApiCall> calls;
    for (int i = 0; i < 4; ++i) calls.push_back(testing::call("GetHotels(average_star=4)"));
    for (int i = 0; i < 2; ++i) calls.push_back(testing::call("GetHotels(average_star=5)"));
    calls.push_back(testing::call("GetFlights(passengers=1)"));
    calls.push_back(testing::call("GetEvents(number_of_tickets=1)"));
    auto ev = aggregate_evidence(calls, testing::base_taxonomy());
    const auto* budget = find_evidence(ev, {"budget_conscious", "high_cost"});
    c.expect(budget != nullptr, "no budget record");
    if (budget) {
        c.expect(budget->count == 6, fmt::format("budget count {}", budget->count));
        c.expect(budget->per_slot.size() == 1, "one hotel slot");
        if (budget->per_slot.size() == 1) {
            const auto& vs = budget->per_slot[0].values;
            c.expect(vs.size() == 2 && vs[0].value.render() == "4" && vs[0].count == 4 && vs[1].value.render() == "5" &&
                         vs[1].count == 2,
                     "value breakdown 4:4 / 5:2");
        }
    }
    const auto* solo = find_evidence(ev, {"travel", "solo_usage"});
    c.expect(solo && solo->count == 2 && solo->per_slot.size() == 2, "solo count 2 over two slots");
    auto j = evidence_to_json(ev);
    c.expect(j.is_array() && !j.empty() && j[0].contains("group_preference") && j[0].contains("count") && j[0].contains("evidence"),
             "record shape");
    c.expect(evidence_from_json(nlohmann::json::parse(j.dump())) == ev, "record round-trip");
    return c;
}

Outcome parser_round_trip() {
    Checks c;
    std::mt19937_64 rng(20240601);
    std::size_t failures = 0;
    for (int i = 0; i < 1000; ++i) {
        auto call = testing::random_call(rng, testing::full_schema());
        if (!validate_call(call, testing::full_schema()).ok()) {
            c.expect(false, "generator produced an invalid call");
            continue;
        }
        auto back = parse_call(render_call(call));
        if (back.size() != 1 || back[0] != canonicalize(call)) ++failures;
    }
    c.expect(failures == 0, fmt::format("{} round-trip failures", failures));
    return c;
}

// Independent matcher: every predicted argument is compared against every
// gold argument; preference alternatives widen the gold value.
struct BruteCounts {
    std::size_t m = 0, p = 0, g = 0;
};

Ratio safe_ratio(std::size_t a, std::size_t b) { return b ? Ratio(std::int64_t(a), std::int64_t(b)) : Ratio(); }

PRF as_prf(const BruteCounts& b) { return {safe_ratio(b.m, b.p), safe_ratio(b.m, b.g), safe_ratio(2 * b.m, b.p + b.g)}; }

Outcome metric_oracle() {
    Checks c;
    std::mt19937_64 rng(500);
    const std::array<const char*, 6> names = {"a", "b", "c", "d", "e", "f"};
    const std::array<const char*, 3> values = {"x", "y", "z"};
    auto args = [&] {
        std::map<std::string, Value> a;
        std::size_t n = rng() % 7;
        for (std::size_t i = 0; i < n; ++i) a[names[rng() % 6]] = Value::bare(values[rng() % 3]);
        return a;
    };
    std::size_t mismatches = 0;
    for (int trial = 0; trial < 500; ++trial) {
        ApiCall gold{"GetX", args()};
        if (gold.args.empty()) gold.args["a"] = Value::bare("x");
        ApiCall predicted{rng() % 8 ? "GetX" : "GetY", args()};
        QueryInstance q;
        q.instance_id = fmt::format("t{}", trial);
        q.gold_call = gold;
        q.target_domain = gold.domain;
        for (const auto& [n, v] : gold.args) {
            if (rng() % 2) {
                q.explicit_args.insert(n);
            } else {
                q.preference_args[n] = {v};
                if (rng() % 2) q.preference_args[n].push_back(Value::bare(values[rng() % 3]));
            }
        }
        if (q.preference_args.empty()) {
            const auto& [n, v] = *gold.args.begin();
            q.explicit_args.erase(n);
            q.preference_args[n] = {v};
        }
        auto accepts = [&](const std::string& name, const Value& v) {
            std::vector<std::string> ok = {gold.args.at(name).render()};
            if (q.preference_args.count(name)) {
                for (const auto& alt : q.preference_args.at(name)) ok.push_back(alt.render());
            }
            return std::find(ok.begin(), ok.end(), v.render()) != ok.end();
        };
        auto brute = [&](const std::set<std::string>* subset) {
            BruteCounts b;
            for (const auto& [n, v] : gold.args) b.g += !subset || subset->count(n);
            for (const auto& [n, v] : predicted.args) {
                if (subset && !subset->count(n)) continue;
                ++b.p;
                b.m += predicted.domain == gold.domain && gold.args.count(n) && accepts(n, v);
            }
            return b;
        };
        std::vector<ApiCall> pv = {predicted};
        auto s = score_context_guided(pv, q);
        bool p_em = predicted.domain == gold.domain;
        std::size_t pref_hits = 0;
        for (const auto& [n, vs] : q.preference_args) {
            auto it = predicted.args.find(n);
            bool hit = predicted.domain == gold.domain && it != predicted.args.end() && accepts(n, it->second);
            pref_hits += hit;
            p_em = p_em && hit;
        }
        bool same = s.oa == as_prf(brute(nullptr)) && s.ea == as_prf(brute(&q.explicit_args)) && s.p_em == p_em;
        q.query_type = QueryType::context_free;
        std::size_t pref_count = q.preference_args.size();
        q.explicit_args.clear();
        auto f = score_context_free(pv, q);
        same = same && f.cf == as_prf({pref_hits, predicted.args.size(), pref_count});
        mismatches += !same;
    }
    c.expect(mismatches == 0, fmt::format("{} of 500 pairs disagree", mismatches));
    return c;
}

QueryInstance instance(const char* gold, std::set<std::string> explicit_args, std::map<std::string, std::vector<const char*>> prefs,
                       QueryType qt) {
    QueryInstance q;
    q.instance_id = "fixture";
    q.query_type = qt;
    q.gold_call = testing::call(gold);
    q.target_domain = q.gold_call.domain;
    q.explicit_args = std::move(explicit_args);
    for (const auto& [a, vs] : prefs) {
        for (const auto* v : vs) q.preference_args[a].push_back(Value::bare(v));
    }
    return q;
}

Outcome worked_metrics() {
    Checks c;
    auto q = instance("GetFlights(origin=London, destination=Paris, flight_class=Economy)", {"origin", "destination"},
                      {{"flight_class", {"Economy"}}}, QueryType::context_guided);
    auto wrong = score_context_guided(parse_call("GetFlights(origin=London, destination=Paris, flight_class=Business)"), q);
    c.expect(wrong.oa.f1 == Ratio(2, 3) && !wrong.p_em && wrong.ea.f1 == Ratio(1, 1), "oa_f1 2/3 case");
    auto spurious =
        score_context_guided(parse_call("GetFlights(origin=London, destination=Paris, flight_class=Business, airlines=Delta)"), q);
    c.expect(spurious.oa.precision == Ratio(1, 2) && spurious.oa.recall == Ratio(2, 3) && spurious.oa.f1 == Ratio(4, 7),
             "oa_f1 4/7 case");
    c.expect(std::abs(wrong.oa.f1.to_double() - 0.667) < 5e-4 && std::abs(spurious.oa.f1.to_double() - 0.571) < 5e-4,
             "rounded values");
    auto free = instance("GetFlights(flight_class=Economy, passengers=1)", {}, {{"flight_class", {"Economy"}}, {"passengers", {"1"}}},
                         QueryType::context_free);
    auto half = score_context_free(parse_call("GetFlights(flight_class=Economy)"), free);
    c.expect(half.cf.precision == Ratio(1, 1) && half.cf.recall == Ratio(1, 2) && half.cf.f1 == Ratio(2, 3), "cf_f1 2/3 case");
    return c;
}

Outcome mpt_statistics() {
    const char* path = std::getenv("PREFBENCH_MPT_EXPORT");
    if (!path || !*path) return Skip{"PREFBENCH_MPT_EXPORT not set; the released export is not bundled"};
    Checks c;
    auto imported = import_mpt_records(read_export_records(path), testing::base_schema(), testing::base_taxonomy());
    auto s = corpus_stats(imported.corpus, testing::base_taxonomy());
    auto at = [&](const char* k) { return s.instances_by_modeling_type.count(k) ? s.instances_by_modeling_type.at(k) : 0; };
    c.expect(s.dialogues == 265, fmt::format("dialogues {}", s.dialogues));
    c.expect(s.sessions == 2020, fmt::format("sessions {}", s.sessions));
    c.expect(s.turns == 39884, fmt::format("turns {}", s.turns));
    c.expect(fmt::format("{:.1f}", s.avg_sessions_per_dialogue) == "7.6", fmt::format("sessions/dialogue {:.2f}", s.avg_sessions_per_dialogue));
    c.expect(fmt::format("{:.1f}", s.avg_turns_per_session) == "19.7", fmt::format("turns/session {:.2f}", s.avg_turns_per_session));
    c.expect(at("recall") == 332, fmt::format("recall {}", at("recall")));
    c.expect(at("induction") == 293, fmt::format("induction {}", at("induction")));
    c.expect(at("transfer") == 472, fmt::format("transfer {}", at("transfer")));
    return c;
}

Outcome loop_contract() {
    Checks c;
    const auto& corpus = testing::synthetic_corpus();
    std::vector<std::string> first, second;
    for (int pass = 0; pass < 2; ++pass) {
        RuleOracleBackend backend(testing::base_schema(), testing::base_taxonomy());
        for (const auto& d : corpus.dialogues) {
            auto m = build_memory(d, backend, 3);
            (pass ? second : first).push_back(memory_to_json(m).dump());
            if (pass) continue;
            for (std::size_t s = 0; s < d.sessions().size(); ++s) {
                std::size_t verdicts = 0;
                bool accepted = false;
                for (const auto& e : m.trace) {
                    if (e.session_index != s) continue;
                    ++verdicts;
                    accepted = accepted || e.verdict.passed();
                }
                c.expect(verdicts <= 3, fmt::format("{} session {}: {} verdicts", d.id(), s, verdicts));
                if (!accepted) {
                    std::string prior = s ? m.hypothesis_after(s - 1) : std::string();
                    c.expect(m.hypothesis_after(s) == prior, fmt::format("{} session {} did not retain prior", d.id(), s));
                }
            }
        }
    }
    c.expect(first == second, "reruns differ");
    return c;
}

// Dominant preference of each group over a dialogue's history.
bool planted(const EvalRecord& r, const Corpus& corpus, const PreferenceTaxonomy& tax) {
    const Dialogue* d = nullptr;
    for (const auto& x : corpus.dialogues) {
        if (x.id() == r.dialogue_id) d = &x;
    }
    if (!d || r.preference_args.empty()) return false;
    auto calls = d->history_calls();
    auto ev = aggregate_evidence(calls, tax);
    for (const auto& [arg, vs] : r.preference_args) {
        auto l = classify_argument(r.gold.domain, arg, r.gold.args.at(arg), tax);
        if (!l) return false;
        auto dom = dominant_preference(ev, l->group);
        if (!dom || dom->first != l->preference) return false;
    }
    return true;
}

Outcome end_to_end(const fs::path& scratch) {
    Checks c;
    auto ground = pipeline(config_json(scratch / "ground", "deterministic-ground"), scratch);
    auto base = pipeline(config_json(scratch / "base", "base"), scratch);
    c.expect(ground.size() == testing::synthetic_corpus().instances.size() && base.size() == ground.size(), "record counts");
    std::map<std::string, const EvalRecord*> base_by_id;
    for (const auto& r : base) base_by_id[r.instance_id] = &r;

    Ratio g_pem, b_pem, g_cf, b_cf;
    std::size_t guided = 0, free = 0;
    for (const auto& r : ground) {
        const auto* b = base_by_id.count(r.instance_id) ? base_by_id.at(r.instance_id) : nullptr;
        if (!b) {
            c.expect(false, "base lacks " + r.instance_id);
            continue;
        }
        if (r.guided && (r.modeling_type == ModelingType::recall || r.modeling_type == ModelingType::transfer)) {
            ++guided;
            c.expect(r.guided->p_em, r.instance_id + " P-EM");
            g_pem = g_pem + Ratio(r.guided->p_em ? 1 : 0, 1);
            b_pem = b_pem + Ratio(b->guided->p_em ? 1 : 0, 1);
        }
        if (r.free && planted(r, testing::synthetic_corpus(), testing::base_taxonomy())) {
            ++free;
            c.expect(r.free->cf.f1 == Ratio(1, 1), r.instance_id + " cf_f1");
            g_cf = g_cf + r.free->cf.f1;
            b_cf = b_cf + b->free->cf.f1;
        }
    }
    c.expect(guided > 0 && free > 0, fmt::format("{} guided / {} free instances in scope", guided, free));
    c.expect(b_pem < g_pem, "base P-EM not lower");
    c.expect(b_cf < g_cf, "base cf_f1 not lower");
    return c;
}

Outcome dynamic_schema(const fs::path& scratch) {
    Checks c;
    auto cfg = config_json(scratch / "extended", "deterministic-ground", "corpus-extended.json");
    cfg["schema_id"] = "mpt-base+mpt-extended";
    cfg["taxonomy_id"] = "mpt-base+mpt-extended";
    cfg["memory_schema_id"] = "mpt-base";
    auto records = pipeline(cfg, scratch);
    bool tent = false, admission = false;
    for (const auto& r : records) {
        c.expect(r.validation_issues.empty() && !r.error, r.instance_id + " has issues");
        for (const auto& call : r.predicted) c.expect(validate_call(call, testing::full_schema()).ok(), render_call(call) + " invalid");
        const auto* call = first_in_domain(r);
        if (!call) continue;
        auto site = call->args.find("site_type");
        if (call->domain == "GetCampground" && site != call->args.end() && site->second.render() == "\"Tent site\"") tent = true;
        auto ticket = call->args.find("ticket_type");
        if (call->domain == "GetThemePark" && ticket != call->args.end() && ticket->second.render() == "\"General admission\"") {
            admission = true;
        }
    }
    c.expect(tent, "no GetCampground site_type=\"Tent site\"");
    c.expect(admission, "no GetThemePark ticket_type=\"General admission\"");
    return c;
}

std::string reference_text() {
    MethodResults mr;
    mr.method = "deterministic-ground";
    EvalRecord e;
    e.instance_id = "x";
    e.guided = GuidedScores{};
    mr.report = aggregate(std::span<const EvalRecord>(&e, 1));
    return render_report_text({mr});
}

bool labelled_reference(const std::string& text, const std::string& value) {
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) {
        if (line.find(value) != std::string::npos) return true;
    }
    return false;
}

Outcome memory_boundedness() {
    Checks c;
    const Dialogue* longest = nullptr;
    for (const auto& d : testing::synthetic_corpus().dialogues) {
        if (d.sessions().size() == 10) longest = &d;
    }
    if (!longest) {
        c.expect(false, "no 10-session dialogue");
        return c;
    }
    RuleOracleBackend backend(testing::base_schema(), testing::base_taxonomy());
    auto m = build_memory(*longest, backend, 3);
    WhitespaceCounter ws;
    // fluctuation allowance: the longest sentence a single template can add
    std::size_t bound = 0;
    for (const auto& mapping : testing::base_taxonomy().mappings()) {
        bound = std::max(bound, ws.count(RuleOracleBackend::template_for(mapping.label())));
    }
    std::optional<std::size_t> previous;
    for (std::size_t s = 0; s < longest->sessions().size(); ++s) {
        std::size_t n = ws.count(m.hypothesis_after(s));
        c.expect(n <= 64, fmt::format("session {}: {} tokens", s, n));
        if (previous) c.expect(n <= *previous + bound, fmt::format("session {} grew by more than one template", s));
        if (m.accepted_at_session && s >= *m.accepted_at_session) previous = n;
    }
    c.expect(m.accepted_at_session.has_value(), "memory never accepted");
    auto text = reference_text();
    c.expect(text.find("23.28") != std::string::npos, "23.28 reference row missing");
    c.expect(text.find("not asserted") != std::string::npos, "reference rows unlabelled");
    return c;
}

Outcome calibration_arithmetic() {
    Checks c;
    auto rec = [](QueryType qt, std::size_t predicted, std::size_t gold) {
        EvalRecord e;
        e.instance_id = "x";
        e.query_type = qt;
        if (qt == QueryType::context_guided) {
            e.guided = GuidedScores{};
        } else {
            e.free = FreeScores{};
        }
        e.predicted_arg_count = predicted;
        e.gold_arg_count = gold;
        return e;
    };
    std::vector<EvalRecord> off = {rec(QueryType::context_guided, 3, 3), rec(QueryType::context_guided, 4, 3)};
    c.expect(calibration(off).at("context_guided") == Ratio(1, 2), "[3,4] vs [3,3]");
    std::vector<EvalRecord> same = {rec(QueryType::context_free, 2, 2), rec(QueryType::context_free, 5, 5)};
    c.expect(calibration(same).at("context_free") == Ratio(), "identical counts");
    auto text = reference_text();
    c.expect(labelled_reference(text, "0.77 -> 0.56"), "0.77 -> 0.56 reference row missing");
    c.expect(text.find("not asserted") != std::string::npos, "reference rows unlabelled");
    return c;
}

}  // namespace

int main() {
    spdlog::set_level(spdlog::level::warn);
    auto scratch = testing::scratch_dir("acceptance");
    std::vector<Item> criteria = {
        {1, "schema fidelity", 1.0, schema_fidelity},
        {2, "taxonomy fidelity", 1.0, taxonomy_fidelity},
        {3, "evidence record reproduction", 0, evidence_record},
        {4, "parser round-trip", 5.0, parser_round_trip},
        {5, "metric oracle equivalence", 10.0, metric_oracle},
        {6, "worked-metric fixtures", 0, worked_metrics},
        {7, "released corpus statistics", 0, mpt_statistics},
        {8, "refinement loop contract", 0, loop_contract},
        {9, "end-to-end deterministic pipeline", 30.0, [&] { return end_to_end(scratch); }},
        {10, "dynamic-schema grounding", 0, [&] { return dynamic_schema(scratch); }},
        {11, "memory boundedness", 0, memory_boundedness},
        {12, "calibration arithmetic", 0, calibration_arithmetic},
    };
    int failed = 0;
    for (const auto& cr : criteria) {
        auto start = std::chrono::steady_clock::now();
        std::string status, detail;
        try {
            auto outcome = cr.run();
            double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            if (auto* skip = std::get_if<Skip>(&outcome)) {
                status = "SKIP";
                detail = skip->reason;
            } else {
                const auto& checks = std::get<Checks>(outcome);
                status = checks.ok() ? "PASS" : "FAIL";
                detail = checks.summary();
                if (checks.ok() && cr.budget_s > 0 && secs > cr.budget_s) {
                    status = "FAIL";
                    detail = fmt::format("over the {:.0f} s budget", cr.budget_s);
                }
            }
        } catch (const std::exception& e) {
            status = "FAIL";
            detail = e.what();
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        failed += status == "FAIL";
        fmt::print("criterion {:>2}: {} ({:.3f} s) {}{}{}\n", cr.number, status, secs, cr.title, detail.empty() ? "" : " - ",
                   detail);
    }
    fs::remove_all(scratch);
    return failed ? 1 : 0;
}
