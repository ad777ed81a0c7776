#include "prefbench/report.hpp"

#include "prefbench/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <sstream>

namespace prefbench {

namespace {

constexpr const char* kModelingOrder[] = {"recall", "induction", "transfer"};

class TextTable {
public:
    explicit TextTable(std::vector<std::string> header) { rows_.push_back(std::move(header)); }
    void add(std::vector<std::string> row) { rows_.push_back(std::move(row)); }

    std::string render() const {
        std::vector<std::size_t> width;
        for (const auto& r : rows_) {
            if (width.size() < r.size()) width.resize(r.size(), 0);
            for (std::size_t i = 0; i < r.size(); ++i) width[i] = std::max(width[i], r[i].size());
        }
        std::ostringstream os;
        for (std::size_t ri = 0; ri < rows_.size(); ++ri) {
            std::string line;
            for (std::size_t i = 0; i < rows_[ri].size(); ++i) {
                if (i == 0) {
                    line += fmt::format("{:<{}}", rows_[ri][i], width[i]);
                } else {
                    line += fmt::format("  {:>{}}", rows_[ri][i], width[i]);
                }
            }
            while (!line.empty() && line.back() == ' ') line.pop_back();
            os << line << '\n';
            if (ri == 0) {
                std::size_t total = 0;
                for (auto w : width) total += w + 2;
                os << std::string(total - 2, '-') << '\n';
            }
        }
        return os.str();
    }

private:
    std::vector<std::vector<std::string>> rows_;
};

const MetricCell* find_cell(const MetricReport& r, const std::string& qt, const std::string& mt) {
    auto row = r.cells.find(qt);
    if (row == r.cells.end()) return nullptr;
    auto cell = row->second.find(mt);
    return cell == row->second.end() ? nullptr : &cell->second;
}

std::string metric_or_dash(const MetricCell* cell, const std::string& name) {
    if (!cell) return "-";
    auto it = cell->means.find(name);
    return it == cell->means.end() ? "-" : percent(it->second);
}

// Mean of one metric across the modeling-type cells that exist.
std::string row_average(const MetricReport& r, const std::string& qt, const std::string& name) {
    Ratio sum;
    std::int64_t n = 0;
    for (const char* mt : kModelingOrder) {
        const MetricCell* c = find_cell(r, qt, mt);
        if (!c) continue;
        auto it = c->means.find(name);
        if (it == c->means.end()) continue;
        sum = sum + it->second;
        ++n;
    }
    return n ? percent(sum / n) : "-";
}

}  // namespace

std::vector<std::string> Fingerprint::differences(const Fingerprint& o) const {
    std::vector<std::string> out;
    auto cmp = [&](const char* name, const std::string& a, const std::string& b) {
        if (a != b) out.push_back(fmt::format("{}: '{}' vs '{}'", name, a, b));
    };
    cmp("schema_id", schema_id, o.schema_id);
    cmp("taxonomy_id", taxonomy_id, o.taxonomy_id);
    cmp("recall_min", std::to_string(recall_min), std::to_string(o.recall_min));
    cmp("token_counter", token_counter, o.token_counter);
    cmp("inference_backend", inference_backend, o.inference_backend);
    cmp("corpus_digest", corpus_digest, o.corpus_digest);
    return out;
}

nlohmann::ordered_json fingerprint_to_json(const Fingerprint& f) {
    nlohmann::ordered_json j;
    j["schema_id"] = f.schema_id;
    j["taxonomy_id"] = f.taxonomy_id;
    j["recall_min"] = f.recall_min;
    j["token_counter"] = f.token_counter;
    j["inference_backend"] = f.inference_backend;
    j["corpus_digest"] = f.corpus_digest;
    return j;
}

Fingerprint fingerprint_from_json(const nlohmann::json& j) {
    try {
        return {j.at("schema_id").get<std::string>(),      j.at("taxonomy_id").get<std::string>(),
                j.at("recall_min").get<std::size_t>(),     j.at("token_counter").get<std::string>(),
                j.at("inference_backend").get<std::string>(), j.at("corpus_digest").get<std::string>()};
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed fingerprint: ") + e.what());
    }
}

const std::vector<ReferenceRow>& published_reference_rows() {
    static const std::vector<ReferenceRow> rows = {
        {"memory footprint (tokens per dialogue)", "preference memory", "23.28"},
        {"memory footprint (share of full history)", "preference memory", "1.24%"},
        {"argument-count MAD", "context-guided, full history -> memory", "0.77 -> 0.56"},
        {"argument-count MAD", "context-free, full history -> memory", "1.08 -> 0.77"},
    };
    return rows;
}

void check_comparable(const std::vector<MethodResults>& results, bool force) {
    if (results.empty()) throw ConfigError("no results to report");
    std::vector<std::string> problems;
    for (std::size_t i = 1; i < results.size(); ++i) {
        for (const auto& d : results[0].fingerprint.differences(results[i].fingerprint)) {
            problems.push_back(results[i].source + " vs " + results[0].source + ": " + d);
        }
    }
    if (problems.empty() || force) return;
    std::string msg = "results are not comparable (use --force to override):";
    for (const auto& p : problems) msg += "\n  " + p;
    throw ConfigError(msg);
}

std::string percent(const Ratio& r) { return fmt::format("{:.2f}", r.to_double() * 100.0); }

std::string render_report_text(const std::vector<MethodResults>& results) {
    std::ostringstream os;
    if (results.empty()) return "";

    os << "Context-guided queries (%, macro-averaged; P-EM uses value-group matching)\n";
    {
        std::vector<std::string> header = {"method"};
        for (const char* mt : kModelingOrder) {
            for (const char* m : {"P-EM", "EA-F1", "OA-F1"}) header.push_back(fmt::format("{}:{}", mt, m));
        }
        header.push_back("avg:OA-F1");
        TextTable t(header);
        for (const auto& res : results) {
            std::vector<std::string> row = {res.method};
            for (const char* mt : kModelingOrder) {
                const MetricCell* c = find_cell(res.report, "context_guided", mt);
                for (const char* m : {"p_em", "ea_f1", "oa_f1"}) row.push_back(metric_or_dash(c, m));
            }
            row.push_back(row_average(res.report, "context_guided", "oa_f1"));
            t.add(row);
        }
        os << t.render();
    }

    os << "\nContext-free queries (%, macro-averaged)\n";
    {
        std::vector<std::string> header = {"method"};
        for (const char* mt : kModelingOrder) {
            for (const char* m : {"Prec", "Rec", "F1"}) header.push_back(fmt::format("{}:{}", mt, m));
        }
        header.push_back("avg:F1");
        TextTable t(header);
        for (const auto& res : results) {
            std::vector<std::string> row = {res.method};
            for (const char* mt : kModelingOrder) {
                const MetricCell* c = find_cell(res.report, "context_free", mt);
                for (const char* m : {"cf_precision", "cf_recall", "cf_f1"}) row.push_back(metric_or_dash(c, m));
            }
            row.push_back(row_average(res.report, "context_free", "cf_f1"));
            t.add(row);
        }
        os << t.render();
    }

    os << "\nCell sizes and literal-value P-EM\n";
    {
        TextTable t({"method", "query type", "modeling type", "n", "P-EM(literal)"});
        for (const auto& res : results) {
            for (const auto& [qt, row] : res.report.cells) {
                for (const auto& [mt, cell] : row) {
                    t.add({res.method, qt, mt, std::to_string(cell.count), metric_or_dash(&cell, "p_em_strict")});
                }
            }
        }
        os << t.render();
    }

    os << "\nArgument-count calibration (mean absolute deviation)\n";
    {
        TextTable t({"method", "context_guided", "delta", "context_free", "delta"});
        const auto& base = results.front().report.calibration_mad;
        for (const auto& res : results) {
            std::vector<std::string> row = {res.method};
            for (const char* qt : {"context_guided", "context_free"}) {
                auto it = res.report.calibration_mad.find(qt);
                auto b = base.find(qt);
                if (it == res.report.calibration_mad.end()) {
                    row.push_back("-");
                    row.push_back("-");
                    continue;
                }
                row.push_back(fmt::format("{:.2f}", it->second.to_double()));
                row.push_back(b == base.end() ? "-" : fmt::format("{:+.2f}", it->second.to_double() - b->second.to_double()));
            }
            t.add(row);
        }
        os << t.render();
    }

    bool any_footprint = std::any_of(results.begin(), results.end(), [](const MethodResults& r) { return r.footprint.has_value(); });
    if (any_footprint) {
        os << "\nMemory footprint\n";
        TextTable t({"method", "counter", "dialogues", "avg tokens", "% of history", "curve (mean tokens by session)"});
        for (const auto& res : results) {
            if (!res.footprint) continue;
            const auto& f = *res.footprint;
            std::string curve;
            for (const auto& p : f.curve) {
                if (!curve.empty()) curve += ' ';
                curve += fmt::format("{:.1f}", p.mean_tokens);
            }
            t.add({res.method, f.counter, std::to_string(f.dialogues), fmt::format("{:.2f}", f.average_tokens),
                   f.history_share_percent ? fmt::format("{:.2f}", *f.history_share_percent) : "-", curve});
        }
        os << t.render();
    }

    os << "\nPublished reference values (published reference, not asserted)\n";
    {
        TextTable t({"quantity", "setting", "value"});
        for (const auto& r : published_reference_rows()) t.add({r.quantity, r.setting, r.value});
        os << t.render();
    }

    os << "\nSources\n";
    for (const auto& res : results) {
        os << "  " << res.method << ": " << res.source << " (schema " << res.fingerprint.schema_id << ", taxonomy "
           << res.fingerprint.taxonomy_id << ", inference " << res.fingerprint.inference_backend << ")\n";
        if (res.report.errored || res.report.parse_failures || res.report.validation_failures) {
            os << fmt::format("    {} errored, {} unparseable, {} with schema-validation issues (of {})\n", res.report.errored,
                              res.report.parse_failures, res.report.validation_failures, res.report.total);
        }
    }
    return os.str();
}

nlohmann::ordered_json render_report_json(const std::vector<MethodResults>& results) {
    nlohmann::ordered_json methods = nlohmann::ordered_json::array();
    for (const auto& r : results) {
        nlohmann::ordered_json m;
        m["method"] = r.method;
        m["source"] = r.source;
        m["fingerprint"] = fingerprint_to_json(r.fingerprint);
        m["metrics"] = report_to_json(r.report);
        m["footprint"] = r.footprint ? footprint_to_json(*r.footprint) : nlohmann::ordered_json();
        methods.push_back(std::move(m));
    }
    nlohmann::ordered_json refs = nlohmann::ordered_json::array();
    for (const auto& r : published_reference_rows()) {
        refs.push_back({{"quantity", r.quantity}, {"setting", r.setting}, {"value", r.value}, {"status", "published reference, not asserted"}});
    }
    nlohmann::ordered_json j;
    j["methods"] = std::move(methods);
    j["published_reference"] = std::move(refs);
    j["notes"] = {"P-EM counts a preference argument as matched when the predicted value lies in its taxonomy value group; "
                  "p_em_strict requires the literal gold value."};
    return j;
}

}  // namespace prefbench
