#pragma once

#include <filesystem>

#include <json.hpp>

#include "snowlink/patterns.hpp"

namespace snowlink {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

json sample_to_json(const SampleData& data);
SampleData sample_from_json(const json& doc);

json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);
void write_json_file(const std::filesystem::path& path, const json& doc);

}  // namespace snowlink
