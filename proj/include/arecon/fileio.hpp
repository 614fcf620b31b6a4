#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace arecon {

std::string read_file(const std::filesystem::path& path);

/// Writes via a temporary sibling and rename, so readers never see partial files.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

/// FNV-1a 64-bit digest, used to compare generated outputs.
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace arecon
