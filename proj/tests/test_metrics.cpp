#include "support.hpp"

#include "prefbench/error.hpp"
#include "prefbench/metrics.hpp"
#include "prefbench/rule_oracle.hpp"

#include <doctest.h>

using namespace prefbench;
using testing::call;

namespace {

QueryInstance guided(const char* gold, std::set<std::string> explicit_args, std::map<std::string, std::vector<std::string>> prefs) {
    QueryInstance q;
    q.instance_id = "q";
    q.dialogue_id = "d";
    q.query_type = QueryType::context_guided;
    q.gold_call = call(gold);
    q.target_domain = q.gold_call.domain;
    q.explicit_args = std::move(explicit_args);
    for (auto& [a, vs] : prefs) {
        for (auto& v : vs) q.preference_args[a].push_back(Value::bare(v));
    }
    return q;
}

QueryInstance free_query(const char* gold, std::map<std::string, std::vector<std::string>> prefs) {
    auto q = guided(gold, {}, std::move(prefs));
    q.query_type = QueryType::context_free;
    return q;
}

std::vector<ApiCall> pred(const char* text) { return parse_call(text); }

Ratio r(std::int64_t n, std::int64_t d) { return Ratio(n, d); }

EvalRecord record(QueryType qt, std::optional<ModelingType> mt, bool p_em, std::size_t predicted_args, std::size_t gold_args) {
    EvalRecord e;
    e.instance_id = "x";
    e.query_type = qt;
    e.modeling_type = mt;
    if (qt == QueryType::context_guided) {
        GuidedScores g;
        g.p_em = g.p_em_strict = p_em;
        e.guided = g;
    } else {
        e.free = FreeScores{};
    }
    e.predicted_arg_count = predicted_args;
    e.gold_arg_count = gold_args;
    return e;
}

}  // namespace

TEST_CASE("Ratio arithmetic") {
    CHECK(r(2, 4) == r(1, 2));
    CHECK(r(2, 4).str() == "1/2");
    CHECK(r(3, 3).str() == "1");
    CHECK(Ratio().str() == "0");
    CHECK(Ratio::of(1, 0) == Ratio());
    CHECK(r(1, 3) + r(1, 6) == r(1, 2));
    CHECK(r(1, 2) - r(1, 3) == r(1, 6));
    CHECK(r(1, 2) / 3 == r(1, 6));
    CHECK(r(1, 3) < r(1, 2));
    CHECK(Ratio::parse("4/7") == r(4, 7));
    CHECK(Ratio::parse("1") == r(1, 1));
    CHECK_THROWS_AS(Ratio::parse("x/y"), DataError);
}

TEST_CASE("match_args examples") {
    std::map<std::string, std::vector<Value>> stars = {{"average_star", {Value::bare("4"), Value::bare("5")}}};
    auto m = match_args(call("GetHotels(average_star=5)"), call("GetHotels(average_star=4)"), nullptr, stars);
    CHECK(m.matched == 1);
    CHECK(match_args(call("GetHotels(average_star=5)"), call("GetHotels(average_star=4)"), nullptr, {}).matched == 0);

    auto wrong_tool = match_args(call("GetBuses(origin=Boston)"), call("GetFlights(origin=Boston)"), nullptr, {});
    CHECK(wrong_tool.matched == 0);
    CHECK(wrong_tool.predicted == 1);
    CHECK(wrong_tool.gold == 1);

    CHECK(match_args(call("GetFlights(flight_class=Economy)"), call("GetFlights(flight_class=Economy)"), nullptr, {}).matched == 1);

    std::set<std::string> subset = {"origin"};
    auto sub = match_args(call("GetFlights(origin=Boston, flight_class=Economy)"),
                          call("GetFlights(origin=Boston, destination=Denver, flight_class=Economy)"), &subset, {});
    CHECK(sub.matched == 1);
    CHECK(sub.predicted == 1);
    CHECK(sub.gold == 1);
}

TEST_CASE("context-guided worked fixtures") {
    auto q = guided("GetFlights(origin=London, destination=Paris, flight_class=Economy)", {"origin", "destination"},
                    {{"flight_class", {"Economy"}}});

    SUBCASE("wrong preference value") {
        auto s = score_context_guided(pred("GetFlights(origin=London, destination=Paris, flight_class=Business)"), q);
        CHECK_FALSE(s.p_em);
        CHECK(s.ea.f1 == r(1, 1));
        CHECK(s.oa.precision == r(2, 3));
        CHECK(s.oa.recall == r(2, 3));
        CHECK(s.oa.f1 == r(2, 3));
        CHECK(s.ea_out_of_set == 1);
    }
    SUBCASE("plus a spurious argument") {
        auto s = score_context_guided(pred("GetFlights(origin=London, destination=Paris, flight_class=Business, airlines=Delta)"), q);
        CHECK(s.oa.precision == r(1, 2));
        CHECK(s.oa.recall == r(2, 3));
        CHECK(s.oa.f1 == r(4, 7));
        CHECK(s.ea.precision == r(1, 1));
        CHECK(s.ea_out_of_set == 2);
    }
    SUBCASE("identity") {
        auto s = score_context_guided(std::vector<ApiCall>{q.gold_call}, q);
        CHECK(s.p_em);
        CHECK(s.p_em_strict);
        CHECK(s.ea == PRF{r(1, 1), r(1, 1), r(1, 1)});
        CHECK(s.oa == PRF{r(1, 1), r(1, 1), r(1, 1)});
    }
    SUBCASE("empty prediction") {
        auto s = score_context_guided({}, q);
        CHECK_FALSE(s.p_em);
        CHECK(s.oa == PRF{});
        CHECK(s.ea == PRF{});
    }
    SUBCASE("grouped and strict preference matching") {
        auto h = guided("GetHotels(location=Denver, average_star=4)", {"location"}, {{"average_star", {"4", "5"}}});
        auto s = score_context_guided(pred("GetHotels(location=Denver, average_star=5)"), h);
        CHECK(s.p_em);
        CHECK_FALSE(s.p_em_strict);
    }
    SUBCASE("multi-call predictions score the gold-domain call") {
        auto s = score_context_guided(pred("GetWeather(city=Paris); GetFlights(origin=London, destination=Paris, flight_class=Economy)"), q);
        CHECK(s.p_em);
        CHECK(s.oa.f1 == r(1, 1));
        auto none = score_context_guided(pred("GetWeather(city=Paris)"), q);
        CHECK(none.oa.precision == Ratio());
        CHECK_FALSE(none.p_em);
    }
}

TEST_CASE("context-free worked fixtures") {
    auto q = free_query("GetFlights(flight_class=Economy, passengers=1)", {{"flight_class", {"Economy"}}, {"passengers", {"1"}}});
    auto half = score_context_free(pred("GetFlights(flight_class=Economy)"), q);
    CHECK(half.cf.precision == r(1, 1));
    CHECK(half.cf.recall == r(1, 2));
    CHECK(half.cf.f1 == r(2, 3));
    CHECK(score_context_free({}, q).cf == PRF{});
    CHECK(score_context_free(std::vector<ApiCall>{q.gold_call}, q).cf == PRF{r(1, 1), r(1, 1), r(1, 1)});
    auto extra = score_context_free(pred("GetFlights(flight_class=Economy, passengers=1, origin=Boston)"), q);
    CHECK(extra.cf.precision == r(2, 3));
    CHECK(extra.cf.recall == r(1, 1));
}

TEST_CASE("score_instance keeps only the metrics for its query type") {
    auto q = free_query("GetFlights(flight_class=Economy)", {{"flight_class", {"Economy"}}});
    Prediction p;
    p.calls = pred("GetFlights(flight_class=Economy, passengers=2)");
    p.attempts = 1;
    auto rec = score_instance(q, p);
    CHECK(rec.free);
    CHECK_FALSE(rec.guided);
    CHECK(rec.predicted_arg_count == 2);
    CHECK(rec.gold_arg_count == 1);
    auto g = guided("GetFlights(origin=A, flight_class=Economy)", {"origin"}, {{"flight_class", {"Economy"}}});
    auto grec = score_instance(g, Prediction{});
    CHECK(grec.guided);
    CHECK_FALSE(grec.free);
    CHECK(grec.predicted_arg_count == 0);
}

TEST_CASE("aggregate") {
    std::vector<EvalRecord> recs = {record(QueryType::context_guided, ModelingType::recall, true, 3, 3),
                                    record(QueryType::context_guided, ModelingType::recall, false, 4, 3)};
    auto rep = aggregate(recs);
    REQUIRE(rep.cells.count("context_guided"));
    const auto& cell = rep.cells.at("context_guided").at("recall");
    CHECK(cell.count == 2);
    CHECK(cell.means.at("p_em") == r(1, 2));
    CHECK(cell.means.at("p_em").to_double() * 100 == doctest::Approx(50.00));
    CHECK_FALSE(rep.cells.at("context_guided").count("transfer"));
    CHECK_FALSE(rep.cells.count("context_free"));
    CHECK(rep.total == 2);
    CHECK(rep.calibration_mad.at("context_guided") == r(1, 2));
    CHECK_THROWS_AS(aggregate({}), DataError);

    auto j = report_to_json(rep);
    auto back = report_from_json(nlohmann::json::parse(j.dump()));
    CHECK(back.cells.at("context_guided").at("recall").means == cell.means);
    CHECK(back.total == 2);
}

TEST_CASE("calibration") {
    std::vector<EvalRecord> a = {record(QueryType::context_guided, ModelingType::recall, true, 3, 3),
                                 record(QueryType::context_guided, ModelingType::recall, true, 4, 3)};
    CHECK(calibration(a).at("context_guided") == r(1, 2));
    std::vector<EvalRecord> b = {record(QueryType::context_free, ModelingType::transfer, true, 2, 2),
                                 record(QueryType::context_free, ModelingType::transfer, true, 1, 1)};
    CHECK(calibration(b).at("context_free") == Ratio());
}

TEST_CASE("footprint") {
    WhitespaceCounter ws;
    auto empty = footprint({}, ws);
    CHECK(empty.average_tokens == 0.0);
    CHECK(empty.dialogues == 0);
    CHECK(empty.curve.empty());

    MemoryState a, b;
    a.dialogue_id = "a";
    a.hypothesis = Hypothesis{"one two three four", HypothesisOrigin::generated, 0};
    a.accepted_at_session = 1;
    a.trace = {{0, {"x", HypothesisOrigin::generated, 0}, Verdict({false, true, true, true}, "")},
               {1, *a.hypothesis, Verdict::all_pass()}};
    b.dialogue_id = "b";
    b.trace = {{0, {"y", HypothesisOrigin::generated, 0}, Verdict({false, true, true, true}, "")}};
    std::vector<MemoryState> ms = {a, b};
    std::vector<std::size_t> hist = {100, 100};
    auto f = footprint(ms, ws, hist);
    CHECK(f.average_tokens == doctest::Approx(2.0));
    REQUIRE(f.curve.size() == 2);
    CHECK(f.curve[0].mean_tokens == 0.0);
    CHECK(f.curve[0].dialogues == 2);
    CHECK(f.curve[1].dialogues == 1);
    CHECK(f.curve[1].max_tokens == 4);
    REQUIRE(f.history_share_percent);
    CHECK(*f.history_share_percent == doctest::Approx(2.0));
    auto back = footprint_from_json(nlohmann::json::parse(footprint_to_json(f).dump()));
    CHECK(back.curve.size() == 2);
    CHECK(back.average_tokens == doctest::Approx(2.0));
    std::vector<std::size_t> wrong = {1};
    CHECK_THROWS_AS(footprint(ms, ws, wrong), DataError);
}

TEST_CASE("rule-oracle memories stay within 64 tokens at every session") {
    RuleOracleBackend b(testing::base_schema(), testing::base_taxonomy());
    std::vector<MemoryState> ms;
    for (const auto& d : testing::synthetic_corpus().dialogues) ms.push_back(build_memory(d, b));
    auto f = footprint(ms, WhitespaceCounter());
    CHECK(f.dialogues == ms.size());
    for (const auto& p : f.curve) CHECK(p.max_tokens <= 64);
}

TEST_CASE("property: metric kernel equals a brute-force oracle") {
    std::mt19937_64 rng(2024);
    const char* names[] = {"a", "b", "c", "d", "e", "f"};
    const char* values[] = {"x", "y", "z"};
    auto random_args = [&](std::size_t max) {
        std::map<std::string, Value> args;
        std::size_t n = rng() % (max + 1);
        for (std::size_t i = 0; i < n; ++i) args[names[rng() % 6]] = Value::bare(values[rng() % 3]);
        return args;
    };
    for (int trial = 0; trial < 500; ++trial) {
        ApiCall gold{"GetX", random_args(6)};
        if (gold.args.empty()) gold.args["a"] = Value::bare("x");
        ApiCall predicted{rng() % 8 ? "GetX" : "GetY", random_args(6)};
        std::set<std::string> explicit_args;
        std::map<std::string, std::vector<Value>> prefs;
        for (const auto& [n, v] : gold.args) {
            if (rng() % 2) {
                explicit_args.insert(n);
            } else {
                prefs[n] = {v};
                if (rng() % 2) prefs[n].push_back(Value::bare(values[rng() % 3]));
            }
        }
        // instances always carry a preference argument
        if (prefs.empty()) {
            auto first = gold.args.begin();
            explicit_args.erase(first->first);
            prefs[first->first] = {first->second};
        }

        // oracle: compare every predicted argument against every gold argument
        auto literal = [](const Value& v) { return v.render(); };
        auto brute = [&](const std::set<std::string>* subset) {
            std::size_t m = 0, p = 0, g = 0;
            for (const auto& [gn, gv] : gold.args) g += !subset || subset->count(gn);
            for (const auto& [pn, pv] : predicted.args) {
                if (subset && !subset->count(pn)) continue;
                ++p;
                if (predicted.domain != gold.domain) continue;
                bool hit = false;
                for (const auto& [gn, gv] : gold.args) {
                    if (gn != pn) continue;
                    if (literal(pv) == literal(gv)) hit = true;
                    if (prefs.count(gn)) {
                        for (const auto& alt : prefs.at(gn)) hit = hit || literal(alt) == literal(pv);
                    }
                }
                m += hit;
            }
            return std::array<std::size_t, 3>{m, p, g};
        };
        auto expect_prf = [](std::array<std::size_t, 3> c) {
            auto div = [](std::size_t a, std::size_t b) { return b ? Ratio(std::int64_t(a), std::int64_t(b)) : Ratio(); };
            return PRF{div(c[0], c[1]), div(c[0], c[2]), div(2 * c[0], c[1] + c[2])};
        };

        QueryInstance q;
        q.instance_id = "q";
        q.gold_call = gold;
        q.target_domain = gold.domain;
        q.explicit_args = explicit_args;
        q.preference_args = prefs;
        std::vector<ApiCall> pv = {predicted};

        auto s = score_context_guided(pv, q);
        CHECK(s.oa == expect_prf(brute(nullptr)));
        CHECK(s.ea == expect_prf(brute(&explicit_args)));

        bool all_prefs = predicted.domain == gold.domain;
        std::size_t pref_hits = 0;
        for (const auto& [n, vs] : prefs) {
            auto it = predicted.args.find(n);
            bool hit = false;
            if (it != predicted.args.end() && predicted.domain == gold.domain) {
                for (const auto& v : vs) hit = hit || literal(v) == literal(it->second);
            }
            pref_hits += hit;
            all_prefs = all_prefs && hit;
        }
        CHECK(s.p_em == all_prefs);

        q.query_type = QueryType::context_free;
        q.explicit_args.clear();
        auto f = score_context_free(pv, q);
        CHECK(f.cf == expect_prf({pref_hits, predicted.args.size(), prefs.size()}));

        // bounds
        for (const auto& x : {s.oa, s.ea, f.cf}) {
            for (const auto& v : {x.precision, x.recall, x.f1}) {
                CHECK(v >= Ratio());
                CHECK(v <= Ratio(1, 1));
            }
        }
    }
}

TEST_CASE("property: monotonicity") {
    std::mt19937_64 rng(11);
    const char* names[] = {"a", "b", "c", "d", "e"};
    for (int trial = 0; trial < 200; ++trial) {
        ApiCall gold{"GetX", {}};
        for (auto n : names) {
            if (rng() % 2) gold.args[n] = Value::bare(rng() % 2 ? "x" : "y");
        }
        if (gold.args.empty()) gold.args["a"] = Value::bare("x");
        QueryInstance q;
        q.query_type = QueryType::context_free;
        q.gold_call = gold;
        q.target_domain = "GetX";
        for (const auto& [n, v] : gold.args) q.preference_args[n] = {v};

        ApiCall p{"GetX", {}};
        auto before_free = score_context_free(std::vector<ApiCall>{p}, q);
        auto g = q;
        g.query_type = QueryType::context_guided;
        auto before_guided = score_context_guided(std::vector<ApiCall>{p}, g);
        for (const auto& [n, v] : gold.args) {
            p.args[n] = v;  // a correct preference argument
            auto after_free = score_context_free(std::vector<ApiCall>{p}, q);
            auto after_guided = score_context_guided(std::vector<ApiCall>{p}, g);
            CHECK(after_free.cf.recall >= before_free.cf.recall);
            CHECK(after_guided.p_em >= before_guided.p_em);
            before_free = after_free;
            before_guided = after_guided;
        }
        // a wrong argument never raises OA precision
        auto wrong = p;
        wrong.args["zz"] = Value::bare("x");
        CHECK(score_context_guided(std::vector<ApiCall>{wrong}, g).oa.precision <= score_context_guided(std::vector<ApiCall>{p}, g).oa.precision);
        // identity
        CHECK(score_context_guided(std::vector<ApiCall>{gold}, g).oa.f1 == Ratio(1, 1));
        CHECK(score_context_free(std::vector<ApiCall>{gold}, q).cf.f1 == Ratio(1, 1));
    }
}

TEST_CASE("property: aggregation ignores record order; records round-trip") {
    std::mt19937_64 rng(5);
    std::vector<EvalRecord> recs;
    const auto& corpus = testing::synthetic_corpus();
    for (const auto& q : corpus.instances) {
        Prediction p;
        p.attempts = 1;
        if (rng() % 3) p.calls = {q.gold_call};
        if (rng() % 5 == 0) p.calls = pred("GetWeather(city=Paris)");
        recs.push_back(score_instance(q, p));
    }
    auto base = report_to_json(aggregate(recs)).dump();
    std::size_t cell_total = 0;
    for (const auto& [qt, row] : aggregate(recs).cells) {
        for (const auto& [mt, cell] : row) {
            cell_total += cell.count;
            for (const auto& [name, v] : cell.means) {
                CHECK(v >= Ratio());
                CHECK(v <= Ratio(1, 1));
            }
        }
    }
    CHECK(cell_total == recs.size());
    for (int i = 0; i < 20; ++i) {
        std::shuffle(recs.begin(), recs.end(), rng);
        CHECK(report_to_json(aggregate(recs)).dump() == base);
    }
    for (const auto& rec : recs) {
        auto j = record_to_json(rec);
        auto back = record_from_json(nlohmann::json::parse(j.dump()));
        CHECK(record_to_json(back).dump() == j.dump());
        if (rec.query_type == QueryType::context_free) {
            CHECK(j["metrics"].contains("cf_f1"));
            CHECK_FALSE(j["metrics"].contains("p_em"));
        } else {
            CHECK(j["metrics"].contains("p_em"));
            CHECK_FALSE(j["metrics"].contains("cf_f1"));
        }
    }
}
