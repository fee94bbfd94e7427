#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace refgrowth::csv {

struct Row {
    std::size_t line = 0;  ///< 1-based line number in the source
    std::vector<std::string> fields;
};

struct Table {
    std::vector<std::string> header;
    std::vector<Row> rows;

    /// Column index by name, or nullopt.
    std::optional<std::size_t> column(std::string_view name) const;
};

/// RFC 4180 style: comma separated, double-quoted fields with "" escapes,
/// first record is the header. Blank lines are skipped. Throws
/// DataQualityError naming `source` and the line for ragged rows or an
/// unterminated quote.
Table parse(std::string_view text, std::string_view source = "<input>");

/// Quotes a field if it contains a comma, quote or newline.
std::string escape(std::string_view field);

std::string join_row(const std::vector<std::string>& fields);

/// Whole-file read; IoError on failure.
std::string read_file(const std::filesystem::path& path);

/// Writes through a temporary sibling and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Strict numeric parsing of a whole field; nullopt on anything else.
std::optional<double> parse_double(std::string_view text);
std::optional<long long> parse_integer(std::string_view text);

std::string_view trim(std::string_view text);

}  // namespace refgrowth::csv
