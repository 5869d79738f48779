#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace popsynth {

/// Lower-case hex SHA-256 of the given bytes.
std::string sha256_hex(std::string_view bytes);

/// @brief Derives a 64-bit seed from a master seed and a string key.
///
/// Stable across platforms and independent of iteration order: the result is
/// the first eight bytes (big-endian) of SHA-256("<master_seed>|<key>").
std::uint64_t derive_seed(std::uint64_t master_seed, std::string_view key);

} // namespace popsynth
