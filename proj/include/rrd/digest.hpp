#pragma once

#include <string>
#include <string_view>

namespace rrd {

/// SHA-256 of the input, as lowercase hex.
std::string sha256_hex(std::string_view data);

/// Truncated content hash used for stable short identifiers.
std::string short_hash(std::string_view data, std::size_t hex_chars = 12);

} // namespace rrd
