#include "prefbench/schema.hpp"

#include "prefbench/error.hpp"
#include "prefbench/json_io.hpp"

#include <cctype>
#include <set>

namespace prefbench {

namespace {

// Get<CamelCaseWord>: "Get" followed by an upper-case letter and alphanumerics.
bool valid_domain_name(std::string_view name) {
    if (name.size() < 4 || name.substr(0, 3) != "Get") return false;
    if (!std::isupper(static_cast<unsigned char>(name[3]))) return false;
    for (char c : name) {
        if (!std::isalnum(static_cast<unsigned char>(c))) return false;
    }
    return true;
}

bool valid_identifier(std::string_view name) {
    if (name.empty() || !(std::isalpha(static_cast<unsigned char>(name[0])) || name[0] == '_')) return false;
    for (char c : name) {
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
    }
    return true;
}

}  // namespace

std::string_view to_string(ValueType t) {
    switch (t) {
        case ValueType::text: return "string";
        case ValueType::boolean: return "boolean";
        case ValueType::integer_text: return "integer_string";
    }
    return "string";
}

ValueType parse_value_type(std::string_view token) {
    std::string t = to_lower_ascii(token);
    if (t == "string" || t == "text") return ValueType::text;
    if (t == "boolean" || t == "bool") return ValueType::boolean;
    if (t == "integer_string" || t == "integer" || t == "integer-like-text") return ValueType::integer_text;
    throw DataError("unknown value type '" + std::string(token) + "'");
}

const ArgumentSpec* DomainSchema::find(std::string_view arg) const {
    for (const auto& a : arguments) {
        if (a.name == arg) return &a;
    }
    return nullptr;
}

ApiSchema::ApiSchema(std::string schema_id, std::vector<DomainSchema> domains)
    : schema_id_(std::move(schema_id)), domains_(std::move(domains)) {
    if (schema_id_.empty()) throw DataError("schema_id must not be empty");
    std::set<std::string> seen;
    for (const auto& d : domains_) {
        if (!valid_domain_name(d.name)) throw DataError("domain name '" + d.name + "' does not match Get<CamelCaseWord>");
        if (!seen.insert(d.name).second) throw DataError("duplicate domain '" + d.name + "'");
        std::set<std::string> args;
        for (const auto& a : d.arguments) {
            if (!valid_identifier(a.name)) throw DataError("invalid argument name '" + a.name + "' in " + d.name);
            if (!args.insert(a.name).second) throw DataError("duplicate argument '" + a.name + "' in " + d.name);
        }
    }
}

const DomainSchema* ApiSchema::find(std::string_view domain) const {
    for (const auto& d : domains_) {
        if (d.name == domain) return &d;
    }
    return nullptr;
}

ApiSchema ApiSchema::merge(const ApiSchema& a, const ApiSchema& b) {
    std::vector<DomainSchema> all = a.domains_;
    all.insert(all.end(), b.domains_.begin(), b.domains_.end());
    return ApiSchema(a.schema_id_ + "+" + b.schema_id_, std::move(all));
}

ApiSchema load_schema(const nlohmann::json& doc, std::optional<std::string> schema_id) {
    try {
        std::string id = schema_id ? *schema_id : doc.at("schema_id").get<std::string>();
        if (schema_id && doc.contains("schema_id") && doc.at("schema_id").get<std::string>() != *schema_id) {
            throw DataError("schema document declares id '" + doc.at("schema_id").get<std::string>() +
                            "', expected '" + *schema_id + "'");
        }
        std::vector<DomainSchema> domains;
        for (const auto& d : doc.at("domains")) {
            DomainSchema ds;
            ds.name = d.at("name").get<std::string>();
            for (const auto& a : d.at("arguments")) {
                ds.arguments.push_back({a.at("name").get<std::string>(), parse_value_type(a.at("type").get<std::string>())});
            }
            domains.push_back(std::move(ds));
        }
        return ApiSchema(std::move(id), std::move(domains));
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed schema document: ") + e.what());
    }
}

ApiSchema load_schema_file(const std::filesystem::path& path) { return load_schema(read_json_file(path)); }

nlohmann::json schema_to_json(const ApiSchema& schema) {
    nlohmann::json domains = nlohmann::json::array();
    for (const auto& d : schema.domains()) {
        nlohmann::json args = nlohmann::json::array();
        for (const auto& a : d.arguments) args.push_back({{"name", a.name}, {"type", std::string(to_string(a.type))}});
        domains.push_back({{"name", d.name}, {"arguments", std::move(args)}});
    }
    return {{"schema_id", schema.id()}, {"domains", std::move(domains)}};
}

std::string render_schema(const ApiSchema& schema) {
    std::string out;
    for (const auto& d : schema.domains()) {
        out += d.name;
        out.push_back('(');
        for (std::size_t i = 0; i < d.arguments.size(); ++i) {
            if (i) out += ", ";
            out += d.arguments[i].name;
            out += ": ";
            // integer slots are strings on the wire
            out += d.arguments[i].type == ValueType::boolean ? "boolean" : "string";
        }
        out += ")\n";
    }
    return out;
}

std::string ValidationIssue::describe() const {
    switch (kind) {
        case ValidationIssueKind::unknown_domain:
            return "unknown domain '" + domain + "'";
        case ValidationIssueKind::unknown_argument:
            return "unknown argument '" + argument + "' for " + domain;
        case ValidationIssueKind::type_mismatch:
            return "type mismatch for " + domain + "." + argument + ": " + detail;
    }
    return detail;
}

std::string ValidationResult::describe() const {
    std::string out;
    for (const auto& issue : issues) {
        if (!out.empty()) out += "; ";
        out += issue.describe();
    }
    return out;
}

ValidationResult validate_call(const ApiCall& call, const ApiSchema& schema) {
    ValidationResult result;
    const DomainSchema* domain = schema.find(call.domain);
    if (!domain) {
        result.issues.push_back({ValidationIssueKind::unknown_domain, call.domain, {}, {}});
        return result;
    }
    for (const auto& [name, value] : call.args) {
        const ArgumentSpec* spec = domain->find(name);
        if (!spec) {
            result.issues.push_back({ValidationIssueKind::unknown_argument, call.domain, name, {}});
            continue;
        }
        switch (spec->type) {
            case ValueType::boolean:
                if (!value.is_boolean()) {
                    result.issues.push_back({ValidationIssueKind::type_mismatch, call.domain, name,
                                             "expected boolean, got '" + value.plain() + "'"});
                }
                break;
            case ValueType::integer_text:
                if (!value.as_integer()) {
                    result.issues.push_back({ValidationIssueKind::type_mismatch, call.domain, name,
                                             "expected an integer, got '" + value.plain() + "'"});
                }
                break;
            case ValueType::text:
                if (value.is_boolean()) {
                    result.issues.push_back({ValidationIssueKind::type_mismatch, call.domain, name,
                                             "expected text, got boolean " + value.plain()});
                }
                break;
        }
    }
    return result;
}

}  // namespace prefbench
