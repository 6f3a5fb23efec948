// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace langadapt::utf8 {

bool is_valid(std::string_view text);

/// Decodes valid UTF-8. Throws DataError on malformed input.
std::u32string decode(std::string_view text);

std::string encode(char32_t cp);
std::string encode(std::u32string_view cps);

/// Byte offset of every codepoint start, plus a final entry equal to size().
/// Input must be valid UTF-8.
std::vector<std::size_t> boundaries(std::string_view text);

std::size_t length(std::string_view text);

/// Unicode NFC.
std::string nfc(std::string_view text);

bool is_whitespace(char32_t cp);

/// Removes trailing Unicode whitespace.
std::string trim_trailing(std::string_view text);

}  // namespace langadapt::utf8
