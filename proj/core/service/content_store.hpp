#pragma once

#include <cstddef>
#include <filesystem>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace nvis::service {

// Hex SHA-256 over the concatenation of `parts`, each prefixed by its
// length so ("ab","c") and ("a","bc") differ.
std::string content_id(std::initializer_list<std::span<const std::byte>> parts);

std::span<const std::byte> bytes_of(std::string_view s);

// Writes through a temporary file and rename, so readers never observe a
// partial file.
void atomic_write(const std::filesystem::path& path, std::span<const std::byte> bytes);

std::optional<std::vector<std::byte>> read_if_exists(const std::filesystem::path& path);

// UTC timestamp, ISO-8601 with seconds.
std::string utc_now();

}  // namespace nvis::service
