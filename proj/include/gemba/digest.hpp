#pragma once

#include <string>
#include <string_view>

namespace gemba {

// Hex-encoded SHA-256 of the given bytes. Used for request cache keys and
// the prompt template version stamp.
std::string sha256_hex(std::string_view data);

}  // namespace gemba
