#pragma once

#include "prefbench/api_call.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace prefbench {

enum class ValueType {
    text,
    boolean,
    integer_text,  // numerals carried as text (passengers, number_of_seats, ...)
};

std::string_view to_string(ValueType t);
// Accepts `string`/`text`, `boolean`/`bool`, `integer_string`/`integer`.
ValueType parse_value_type(std::string_view token);

struct ArgumentSpec {
    std::string name;
    ValueType type = ValueType::text;
};

struct DomainSchema {
    std::string name;
    std::vector<ArgumentSpec> arguments;

    const ArgumentSpec* find(std::string_view arg) const;
};

class ApiSchema {
public:
    ApiSchema() = default;
    // Validates invariants; throws DataError.
    ApiSchema(std::string schema_id, std::vector<DomainSchema> domains);

    const std::string& id() const noexcept { return schema_id_; }
    const std::vector<DomainSchema>& domains() const noexcept { return domains_; }
    const DomainSchema* find(std::string_view domain) const;

    // Union of two schemas with disjoint domain sets; id becomes `a+b`.
    static ApiSchema merge(const ApiSchema& a, const ApiSchema& b);

private:
    std::string schema_id_;
    std::vector<DomainSchema> domains_;
};

ApiSchema load_schema(const nlohmann::json& doc, std::optional<std::string> schema_id = std::nullopt);
ApiSchema load_schema_file(const std::filesystem::path& path);
nlohmann::json schema_to_json(const ApiSchema& schema);

// One line per domain: `GetFlights(airlines: string, ..., return_date: string)`.
std::string render_schema(const ApiSchema& schema);

enum class ValidationIssueKind {
    unknown_domain,
    unknown_argument,
    type_mismatch,
};

struct ValidationIssue {
    ValidationIssueKind kind;
    std::string domain;
    std::string argument;  // empty for unknown_domain
    std::string detail;

    std::string describe() const;
};

struct ValidationResult {
    std::vector<ValidationIssue> issues;

    bool ok() const noexcept { return issues.empty(); }
    explicit operator bool() const noexcept { return ok(); }
    std::string describe() const;
};

ValidationResult validate_call(const ApiCall& call, const ApiSchema& schema);

}  // namespace prefbench
