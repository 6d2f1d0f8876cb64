#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace commitissue::utf8 {

/// Byte offset of every Unicode scalar value in `text`, plus a final entry
/// equal to text.size(). Malformed bytes count as one character each, so the
/// mapping always round-trips the original bytes.
std::vector<std::size_t> char_offsets(std::string_view text);

/// Number of characters (Unicode scalar values) in `text`.
std::size_t length(std::string_view text);

/// Decodes into code points; malformed bytes decode to their byte value.
std::u32string decode(std::string_view text);

/// Substring by character range [start, end). Throws DataError when out of range.
std::string substr(std::string_view text, std::size_t start, std::size_t end);

std::string encode(std::u32string_view cps);

}  // namespace commitissue::utf8
