// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace restfuzz {

using Document = nlohmann::ordered_json;

/// Parses JSON or YAML text into an order-preserving document tree.
/// Throws MalformedDocument on a syntax error.
Document parse_document(std::string_view text);

/// Throws StorageFailure when the file cannot be read.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace restfuzz
