#pragma once

#include <filesystem>
#include <string>

namespace swapnas {

std::string read_text_file(const std::filesystem::path& path);

/// Writes to "<path>.tmp" then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace swapnas
