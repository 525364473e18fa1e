#pragma once

// Deterministic result files: CSV with shortest round-trip numbers, atomic
// writes, and a SHA-256 manifest that `verify` re-checks.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "fermi/errors.hpp"

namespace fermi {

inline constexpr std::string_view kVersion = "1.0.0";

/// Shortest decimal form that parses back to the same double ("nan", "inf",
/// "-inf" for non-finite values). Locale independent.
std::string format_double(double v);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;

  std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
  const std::vector<double>& column(std::string_view name) const;
  bool has(std::string_view name) const;
};

std::string to_csv(const CsvTable& table);
CsvTable parse_csv(const std::string& text);
CsvTable read_csv(const std::filesystem::path& path);

/// Writes through a temporary sibling and renames it into place.
void write_atomic(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

std::string sha256_hex(std::string_view data);

struct FileRecord {
  std::string name;  // relative to the run directory
  std::uintmax_t bytes = 0;
  std::string sha256;
};

FileRecord record_file(const std::filesystem::path& dir, const std::string& name);

struct VerifyIssue {
  std::string name;
  std::string problem;
};

/// Re-hashes every file listed in dir/manifest.json.
std::vector<VerifyIssue> verify_directory(const std::filesystem::path& dir);

}  // namespace fermi
