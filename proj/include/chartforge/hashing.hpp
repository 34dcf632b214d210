#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace chartforge {

// Lowercase hex SHA-256 of the input bytes.
std::string sha256_hex(std::string_view data);

// First eight bytes of SHA-256, big-endian. Used for seeded derivations.
std::uint64_t sha256_u64(std::string_view data);

}  // namespace chartforge
