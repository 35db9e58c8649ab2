#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace cps {

// RFC 4648 base64, with padding, no line wrapping.
std::string base64_encode(std::span<const std::uint8_t> data);

// Strict decode: rejects whitespace, bad characters and bad padding.
std::vector<std::uint8_t> base64_decode(const std::string& text);

}  // namespace cps
