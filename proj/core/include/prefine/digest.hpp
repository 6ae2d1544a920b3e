#pragma once

#include <filesystem>
#include <span>
#include <string>

namespace prefine {

// Lower-case hex SHA-256.
std::string sha256_hex(std::span<const std::byte> bytes);
std::string sha256_hex(std::string_view text);
std::string sha256_file(const std::filesystem::path& path);

template <typename T>
std::string sha256_of(std::span<const T> values) {
  return sha256_hex(std::as_bytes(values));
}

}  // namespace prefine
