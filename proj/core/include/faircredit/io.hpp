#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace faircredit::io {

/// Writes `content` to `path` through a temporary sibling file and a rename,
/// so readers never observe a partially written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

/// Splits one CSV record. Handles double-quoted fields with embedded commas
/// and doubled quotes; does not handle newlines inside quotes.
std::vector<std::string> split_csv_line(std::string_view line);

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);

/// Shortest round-trip representation (%.17g).
std::string format_exact(double value);
/// `digits` significant digits (%.<digits>g).
std::string format_sig(double value, int digits);

/// 64-bit FNV-1a, printed as 16 hex digits by `hex64`.
std::uint64_t fnv1a64(std::string_view data);
std::string hex64(std::uint64_t value);

}  // namespace faircredit::io
