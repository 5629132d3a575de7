#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace hestia {

// Lowercase hex SHA-256 of a byte string.
std::string Sha256Hex(std::string_view bytes);

// Lowercase hex SHA-256 of a file's contents.
std::string FileSha256Hex(const std::filesystem::path& path);

}  // namespace hestia
