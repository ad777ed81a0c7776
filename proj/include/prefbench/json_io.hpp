#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace prefbench {

nlohmann::json read_json_file(const std::filesystem::path& path);
std::string read_text_file(const std::filesystem::path& path);

// Writes to a sibling temp file, then renames over the target.
void write_text_atomic(const std::filesystem::path& path, std::string_view content);
void write_json_atomic(const std::filesystem::path& path, const nlohmann::json& doc);

// Reads a line-delimited JSON file. A truncated or unparsable final line (an
// interrupted append) is dropped; unparsable interior lines throw.
std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);

std::string sha256_hex(std::string_view data);
std::string file_sha256(const std::filesystem::path& path);

}  // namespace prefbench
