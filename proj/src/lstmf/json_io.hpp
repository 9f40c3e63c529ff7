#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

namespace lstmf {

using Json = nlohmann::json;

// Serializes with every floating-point number printed as %.17g, so files
// written from identical values are byte-identical and round-trip exactly.
std::string dump_json(const Json& j, int indent = 1);

Json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace lstmf
