#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace geoprop {

using CsvRow = std::vector<std::string>;

/// RFC 4180 reader: quoted fields may contain the delimiter, doubled quotes
/// and line breaks. Blank lines are skipped; a trailing '\r' is stripped.
std::vector<CsvRow> parse_csv(std::string_view text, char delimiter = ',');

std::string read_file(const std::filesystem::path& path);

/// Quotes a field only when it needs it.
std::string csv_escape(std::string_view field, char delimiter = ',');

/// Opens a file for writing, creating parent directories; throws
/// UnreadableFile on failure.
std::ofstream open_output(const std::filesystem::path& path);

/// Shortest round-trip decimal form; used for every floating value written
/// to CSV so that reruns are byte-identical.
std::string format_double(double value);

}  // namespace geoprop
