#include "prefbench/metrics.hpp"

#include "prefbench/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <numeric>

namespace prefbench {

Ratio::Ratio(std::int64_t num, std::int64_t den) {
    if (den == 0) throw std::invalid_argument("ratio with zero denominator");
    if (den < 0) {
        num = -num;
        den = -den;
    }
    std::int64_t g = std::gcd(num < 0 ? -num : num, den);
    if (g == 0) g = 1;
    num_ = num / g;
    den_ = den / g;
}

Ratio Ratio::of(std::int64_t num, std::int64_t den) { return den == 0 ? Ratio() : Ratio(num, den); }

std::string Ratio::str() const { return den_ == 1 ? std::to_string(num_) : fmt::format("{}/{}", num_, den_); }

Ratio Ratio::parse(std::string_view s) {
    try {
        auto slash = s.find('/');
        if (slash == std::string_view::npos) return Ratio(std::stoll(std::string(s)), 1);
        return Ratio(std::stoll(std::string(s.substr(0, slash))), std::stoll(std::string(s.substr(slash + 1))));
    } catch (const std::exception&) {
        throw DataError("malformed ratio '" + std::string(s) + "'");
    }
}

Ratio Ratio::operator+(const Ratio& o) const {
    std::int64_t l = std::lcm(den_, o.den_);
    return Ratio(num_ * (l / den_) + o.num_ * (l / o.den_), l);
}

Ratio Ratio::operator-(const Ratio& o) const { return *this + Ratio(-o.num_, o.den_); }

Ratio Ratio::operator/(std::int64_t n) const {
    if (n == 0) throw std::invalid_argument("ratio divided by zero");
    return Ratio(num_, den_ * n);
}

std::strong_ordering Ratio::operator<=>(const Ratio& o) const {
    return static_cast<__int128>(num_) * o.den_ <=> static_cast<__int128>(o.num_) * den_;
}

namespace {

bool arg_matches(const std::string& name,
                 const Value& predicted,
                 const ApiCall& gold,
                 const std::map<std::string, std::vector<Value>>* value_sets) {
    auto g = gold.args.find(name);
    if (g == gold.args.end()) return false;
    if (values_match(predicted, g->second)) return true;
    if (!value_sets) return false;
    auto vs = value_sets->find(name);
    if (vs == value_sets->end()) return false;
    return std::any_of(vs->second.begin(), vs->second.end(), [&](const Value& v) { return values_match(predicted, v); });
}

// all preference args matched
bool preference_exact(const ApiCall* call, const QueryInstance& inst, bool grouped) {
    for (const auto& [name, values] : inst.preference_args) {
        if (!call || call->domain != inst.gold_call.domain) return false;
        auto it = call->args.find(name);
        if (it == call->args.end()) return false;
        if (!arg_matches(name, it->second, inst.gold_call, grouped ? &inst.preference_args : nullptr)) return false;
    }
    return true;
}

std::int64_t i64(std::size_t n) { return static_cast<std::int64_t>(n); }

}  // namespace

MatchCounts match_args(const ApiCall& predicted,
                       const ApiCall& gold,
                       const std::set<std::string>* subset,
                       const std::map<std::string, std::vector<Value>>& value_sets) {
    MatchCounts c;
    for (const auto& [name, v] : gold.args) {
        if (!subset || subset->count(name)) ++c.gold;
    }
    bool same_domain = predicted.domain == gold.domain;
    for (const auto& [name, v] : predicted.args) {
        if (subset && !subset->count(name)) continue;
        ++c.predicted;
        if (same_domain && arg_matches(name, v, gold, &value_sets)) ++c.matched;
    }
    return c;
}

PRF prf(const MatchCounts& c) {
    return {Ratio::of(i64(c.matched), i64(c.predicted)), Ratio::of(i64(c.matched), i64(c.gold)),
            Ratio::of(2 * i64(c.matched), i64(c.predicted + c.gold))};
}

const ApiCall* scored_call(std::span<const ApiCall> predicted, const ApiCall& gold) {
    for (const auto& c : predicted) {
        if (c.domain == gold.domain) return &c;
    }
    return predicted.empty() ? nullptr : &predicted.front();
}

GuidedScores score_context_guided(std::span<const ApiCall> predicted, const QueryInstance& instance) {
    GuidedScores s;
    const ApiCall* call = scored_call(predicted, instance.gold_call);
    ApiCall empty{instance.gold_call.domain, {}};
    const ApiCall& c = call ? *call : empty;
    s.p_em = preference_exact(call, instance, true);
    s.p_em_strict = preference_exact(call, instance, false);
    s.ea = prf(match_args(c, instance.gold_call, &instance.explicit_args, instance.preference_args));
    s.oa = prf(match_args(c, instance.gold_call, nullptr, instance.preference_args));
    for (const auto& [name, v] : c.args) {
        if (!instance.explicit_args.count(name)) ++s.ea_out_of_set;
    }
    return s;
}

FreeScores score_context_free(std::span<const ApiCall> predicted, const QueryInstance& instance) {
    const ApiCall* call = scored_call(predicted, instance.gold_call);
    MatchCounts c;
    c.gold = instance.preference_args.size();
    if (call) {
        c.predicted = call->args.size();
        if (call->domain == instance.gold_call.domain) {
            for (const auto& [name, values] : instance.preference_args) {
                auto it = call->args.find(name);
                if (it != call->args.end() && arg_matches(name, it->second, instance.gold_call, &instance.preference_args)) ++c.matched;
            }
        }
    }
    return {prf(c)};
}

EvalRecord score_instance(const QueryInstance& instance, const Prediction& prediction) {
    EvalRecord r;
    r.instance_id = instance.instance_id;
    r.dialogue_id = instance.dialogue_id;
    r.query_type = instance.query_type;
    r.modeling_type = instance.modeling_type;
    r.predicted = prediction.calls;
    r.gold = instance.gold_call;
    r.explicit_args = instance.explicit_args;
    r.preference_args = instance.preference_args;
    if (instance.query_type == QueryType::context_guided) {
        r.guided = score_context_guided(r.predicted, instance);
    } else {
        r.free = score_context_free(r.predicted, instance);
    }
    const ApiCall* call = scored_call(r.predicted, r.gold);
    r.predicted_arg_count = call ? call->args.size() : 0;
    r.gold_arg_count = r.gold.args.size();
    r.attempts = prediction.attempts;
    r.parse_failed = prediction.parse_failed;
    r.error = prediction.error;
    r.validation_issues = prediction.validation_issues;
    r.usage = prediction.usage;
    return r;
}

namespace {

std::vector<std::pair<std::string, Ratio>> metric_values(const EvalRecord& r) {
    std::vector<std::pair<std::string, Ratio>> out;
    auto add_prf = [&](const std::string& prefix, const PRF& p) {
        out.emplace_back(prefix + "_precision", p.precision);
        out.emplace_back(prefix + "_recall", p.recall);
        out.emplace_back(prefix + "_f1", p.f1);
    };
    if (r.guided) {
        out.emplace_back("p_em", Ratio(r.guided->p_em ? 1 : 0, 1));
        out.emplace_back("p_em_strict", Ratio(r.guided->p_em_strict ? 1 : 0, 1));
        add_prf("ea", r.guided->ea);
        add_prf("oa", r.guided->oa);
    }
    if (r.free) add_prf("cf", r.free->cf);
    return out;
}

PRF prf_from(const nlohmann::json& exact, const std::string& prefix) {
    return {Ratio::parse(exact.at(prefix + "_precision").get<std::string>()),
            Ratio::parse(exact.at(prefix + "_recall").get<std::string>()),
            Ratio::parse(exact.at(prefix + "_f1").get<std::string>())};
}

}  // namespace

std::string_view modeling_key(const std::optional<ModelingType>& m) { return m ? to_string(*m) : "unlabeled"; }

nlohmann::ordered_json record_to_json(const EvalRecord& r) {
    nlohmann::ordered_json j;
    j["instance_id"] = r.instance_id;
    j["dialogue_id"] = r.dialogue_id;
    j["query_type"] = to_string(r.query_type);
    j["modeling_type"] = r.modeling_type ? nlohmann::ordered_json(to_string(*r.modeling_type)) : nlohmann::ordered_json();
    nlohmann::ordered_json predicted = nlohmann::ordered_json::array();
    for (const auto& c : r.predicted) predicted.push_back(render_call(c));
    j["predicted"] = std::move(predicted);
    j["gold"] = render_call(r.gold);
    j["explicit_args"] = r.explicit_args;
    nlohmann::ordered_json prefs = nlohmann::ordered_json::object();
    for (const auto& [name, values] : r.preference_args) {
        nlohmann::ordered_json vs = nlohmann::ordered_json::array();
        for (const auto& v : values) vs.push_back(nlohmann::ordered_json::parse(value_to_json(v).dump()));
        prefs[name] = std::move(vs);
    }
    j["preference_args"] = std::move(prefs);
    nlohmann::ordered_json metrics, exact;
    for (const auto& [name, v] : metric_values(r)) {
        metrics[name] = v.to_double();
        exact[name] = v.str();
    }
    j["metrics"] = std::move(metrics);
    j["exact"] = std::move(exact);
    if (r.guided) j["ea_out_of_set"] = r.guided->ea_out_of_set;
    j["predicted_arg_count"] = r.predicted_arg_count;
    j["gold_arg_count"] = r.gold_arg_count;
    j["attempts"] = r.attempts;
    j["parse_failed"] = r.parse_failed;
    j["error"] = r.error ? nlohmann::ordered_json(*r.error) : nlohmann::ordered_json();
    j["validation_issues"] = r.validation_issues;
    if (r.retrieved_items) j["retrieved_items"] = *r.retrieved_items;
    if (r.usage) j["usage"] = {{"prompt_tokens", r.usage->prompt_tokens}, {"completion_tokens", r.usage->completion_tokens}};
    return j;
}

EvalRecord record_from_json(const nlohmann::json& j) {
    try {
        EvalRecord r;
        r.instance_id = j.at("instance_id").get<std::string>();
        r.dialogue_id = j.value("dialogue_id", std::string());
        r.query_type = parse_query_type(j.at("query_type").get<std::string>());
        if (!j.at("modeling_type").is_null()) r.modeling_type = parse_modeling_type(j.at("modeling_type").get<std::string>());
        for (const auto& p : j.at("predicted")) {
            auto calls = parse_call(p.get<std::string>());
            r.predicted.insert(r.predicted.end(), calls.begin(), calls.end());
        }
        auto gold = parse_call(j.at("gold").get<std::string>());
        if (gold.size() != 1) throw DataError("record gold must be a single call");
        r.gold = gold.front();
        r.explicit_args = j.at("explicit_args").get<std::set<std::string>>();
        for (const auto& [name, values] : j.at("preference_args").items()) {
            for (const auto& v : values) r.preference_args[name].push_back(value_from_json(v));
        }
        const auto& exact = j.at("exact");
        if (r.query_type == QueryType::context_guided) {
            GuidedScores g;
            g.p_em = Ratio::parse(exact.at("p_em").get<std::string>()) == Ratio(1, 1);
            g.p_em_strict = Ratio::parse(exact.at("p_em_strict").get<std::string>()) == Ratio(1, 1);
            g.ea = prf_from(exact, "ea");
            g.oa = prf_from(exact, "oa");
            g.ea_out_of_set = j.value("ea_out_of_set", std::size_t{0});
            r.guided = g;
        } else {
            r.free = FreeScores{prf_from(exact, "cf")};
        }
        r.predicted_arg_count = j.at("predicted_arg_count").get<std::size_t>();
        r.gold_arg_count = j.at("gold_arg_count").get<std::size_t>();
        r.attempts = j.value("attempts", std::size_t{0});
        r.parse_failed = j.value("parse_failed", false);
        if (j.contains("error") && !j.at("error").is_null()) r.error = j.at("error").get<std::string>();
        if (j.contains("validation_issues")) r.validation_issues = j.at("validation_issues").get<std::vector<std::string>>();
        if (j.contains("retrieved_items")) r.retrieved_items = j.at("retrieved_items").get<std::size_t>();
        if (j.contains("usage")) {
            r.usage = GatewayUsage{j["usage"].value("prompt_tokens", std::size_t{0}), j["usage"].value("completion_tokens", std::size_t{0})};
        }
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed result record: ") + e.what());
    }
}

std::map<std::string, Ratio> calibration(std::span<const EvalRecord> records) {
    std::map<std::string, std::pair<Ratio, std::int64_t>> acc;
    for (const auto& r : records) {
        auto& [sum, n] = acc[std::string(to_string(r.query_type))];
        std::int64_t d = i64(r.predicted_arg_count) - i64(r.gold_arg_count);
        sum = sum + Ratio(d < 0 ? -d : d, 1);
        ++n;
    }
    std::map<std::string, Ratio> out;
    for (const auto& [qt, sn] : acc) out[qt] = sn.first / sn.second;
    return out;
}

MetricReport aggregate(std::span<const EvalRecord> records) {
    if (records.empty()) throw DataError("no records to aggregate");
    std::vector<const EvalRecord*> ordered;
    for (const auto& r : records) ordered.push_back(&r);
    std::stable_sort(ordered.begin(), ordered.end(), [](const EvalRecord* a, const EvalRecord* b) { return a->instance_id < b->instance_id; });

    MetricReport rep;
    for (const auto* r : ordered) {
        auto& cell = rep.cells[std::string(to_string(r->query_type))][std::string(modeling_key(r->modeling_type))];
        ++cell.count;
        for (const auto& [name, v] : metric_values(*r)) cell.means[name] = cell.means[name] + v;
        ++rep.total;
        if (r->error) ++rep.errored;
        if (r->parse_failed) ++rep.parse_failures;
        if (!r->validation_issues.empty()) ++rep.validation_failures;
    }
    for (auto& [qt, row] : rep.cells) {
        for (auto& [mt, cell] : row) {
            for (auto& [name, sum] : cell.means) sum = sum / i64(cell.count);
        }
    }
    rep.calibration_mad = calibration(records);
    return rep;
}

Footprint footprint(std::span<const MemoryState> memories, const TokenCounter& counter, std::span<const std::size_t> history_tokens) {
    Footprint f;
    f.counter = counter.identity();
    f.dialogues = memories.size();
    if (memories.empty()) return f;
    std::size_t total = 0;
    std::map<std::size_t, std::vector<std::size_t>> per_session;
    for (const auto& m : memories) {
        total += counter.count(m.hypothesis_text());
        std::size_t sessions = 0;
        for (const auto& e : m.trace) sessions = std::max(sessions, e.session_index + 1);
        for (std::size_t i = 0; i < sessions; ++i) per_session[i].push_back(counter.count(m.hypothesis_after(i)));
    }
    f.average_tokens = static_cast<double>(total) / static_cast<double>(memories.size());
    for (const auto& [i, counts] : per_session) {
        FootprintPoint p;
        p.session_index = i;
        p.dialogues = counts.size();
        std::size_t sum = 0;
        for (auto c : counts) {
            sum += c;
            p.max_tokens = std::max(p.max_tokens, c);
        }
        p.mean_tokens = static_cast<double>(sum) / static_cast<double>(counts.size());
        f.curve.push_back(p);
    }
    if (!history_tokens.empty()) {
        if (history_tokens.size() != memories.size()) throw DataError("history token counts do not line up with memories");
        std::size_t hist = std::accumulate(history_tokens.begin(), history_tokens.end(), std::size_t{0});
        if (hist > 0) f.history_share_percent = 100.0 * static_cast<double>(total) / static_cast<double>(hist);
    }
    return f;
}

nlohmann::ordered_json report_to_json(const MetricReport& r) {
    nlohmann::ordered_json cells = nlohmann::ordered_json::object();
    for (const auto& [qt, row] : r.cells) {
        for (const auto& [mt, cell] : row) {
            nlohmann::ordered_json c;
            c["count"] = cell.count;
            nlohmann::ordered_json means, exact;
            for (const auto& [name, v] : cell.means) {
                means[name] = v.to_double();
                exact[name] = v.str();
            }
            c["means"] = std::move(means);
            c["exact"] = std::move(exact);
            cells[qt][mt] = std::move(c);
        }
    }
    nlohmann::ordered_json cal = nlohmann::ordered_json::object();
    for (const auto& [qt, v] : r.calibration_mad) cal[qt] = {{"mad", v.to_double()}, {"exact", v.str()}};
    nlohmann::ordered_json j;
    j["total"] = r.total;
    j["errored"] = r.errored;
    j["parse_failures"] = r.parse_failures;
    j["validation_failures"] = r.validation_failures;
    j["cells"] = std::move(cells);
    j["calibration"] = std::move(cal);
    return j;
}

MetricReport report_from_json(const nlohmann::json& j) {
    try {
        MetricReport r;
        r.total = j.at("total").get<std::size_t>();
        r.errored = j.value("errored", std::size_t{0});
        r.parse_failures = j.value("parse_failures", std::size_t{0});
        r.validation_failures = j.value("validation_failures", std::size_t{0});
        for (const auto& [qt, row] : j.at("cells").items()) {
            for (const auto& [mt, c] : row.items()) {
                MetricCell cell;
                cell.count = c.at("count").get<std::size_t>();
                for (const auto& [name, v] : c.at("exact").items()) cell.means[name] = Ratio::parse(v.get<std::string>());
                r.cells[qt][mt] = std::move(cell);
            }
        }
        for (const auto& [qt, v] : j.at("calibration").items()) r.calibration_mad[qt] = Ratio::parse(v.at("exact").get<std::string>());
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed metric report: ") + e.what());
    }
}

nlohmann::ordered_json footprint_to_json(const Footprint& f) {
    nlohmann::ordered_json curve = nlohmann::ordered_json::array();
    for (const auto& p : f.curve) {
        curve.push_back({{"session_index", p.session_index},
                         {"dialogues", p.dialogues},
                         {"mean_tokens", p.mean_tokens},
                         {"max_tokens", p.max_tokens}});
    }
    nlohmann::ordered_json j;
    j["counter"] = f.counter;
    j["dialogues"] = f.dialogues;
    j["average_tokens"] = f.average_tokens;
    j["history_share_percent"] = f.history_share_percent ? nlohmann::ordered_json(*f.history_share_percent) : nlohmann::ordered_json();
    j["curve"] = std::move(curve);
    return j;
}

Footprint footprint_from_json(const nlohmann::json& j) {
    try {
        Footprint f;
        f.counter = j.at("counter").get<std::string>();
        f.dialogues = j.at("dialogues").get<std::size_t>();
        f.average_tokens = j.at("average_tokens").get<double>();
        if (!j.at("history_share_percent").is_null()) f.history_share_percent = j.at("history_share_percent").get<double>();
        for (const auto& p : j.at("curve")) {
            f.curve.push_back({p.at("session_index").get<std::size_t>(), p.at("dialogues").get<std::size_t>(),
                               p.at("mean_tokens").get<double>(), p.at("max_tokens").get<std::size_t>()});
        }
        return f;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed footprint: ") + e.what());
    }
}

}  // namespace prefbench
