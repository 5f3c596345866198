#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace anie {

std::string read_file(const std::filesystem::path& path);

// Writes to a sibling temporary file and renames it over the target.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

// Shortest round-trip decimal representation.
std::string format_double(double x);

}  // namespace anie
