// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace langadapt {

using Json = nlohmann::json;

std::string read_file(const std::filesystem::path& path);

/// Writes bytes, creating parent directories. Throws IoError.
void write_file(const std::filesystem::path& path, std::string_view bytes);

/// One JSON value per non-empty line. Throws IoError / DataError (with line number).
std::vector<Json> read_jsonl(const std::filesystem::path& path);

std::string to_jsonl(const std::vector<Json>& records);

void write_jsonl(const std::filesystem::path& path, const std::vector<Json>& records);

/// Shortest decimal form that parses back to the same double.
std::string format_double(double value);

/// Canonical form: sorted keys, compact separators, integral floats written as integers.
std::string canonical_json(const Json& value);

}  // namespace langadapt
