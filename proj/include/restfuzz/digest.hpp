// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>

namespace restfuzz {

/// Lowercase hex SHA-1 of `data`.
std::string sha1_hex(std::string_view data);

}  // namespace restfuzz
