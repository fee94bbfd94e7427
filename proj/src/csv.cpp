#include "refgrowth/csv.hpp"

#include <atomic>
#include <charconv>
#include <fstream>
#include <limits>
#include <sstream>
#include <system_error>

#include <fmt/format.h>
#include <unistd.h>

#include "refgrowth/error.hpp"

namespace refgrowth::csv {

std::optional<std::size_t> Table::column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return i;
    }
    return std::nullopt;
}

std::string_view trim(std::string_view text) {
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = text.find_last_not_of(" \t\r\n");
    return text.substr(first, last - first + 1);
}

Table parse(std::string_view text, std::string_view source) {
    Table table;
    std::vector<std::string> record;
    std::string field;
    bool in_quotes = false;
    bool field_quoted = false;
    bool record_has_content = false;
    std::size_t line = 1;
    std::size_t record_line = 1;

    const auto end_field = [&] {
        record.push_back(field_quoted ? field : std::string(trim(field)));
        field.clear();
        field_quoted = false;
    };
    const auto end_record = [&] {
        if (!record_has_content) {
            record.clear();
            field.clear();
            return;
        }
        end_field();
        if (table.header.empty()) {
            table.header = std::move(record);
        } else {
            if (record.size() != table.header.size()) {
                throw DataQualityError(fmt::format("malformed CSV at {}:{}: expected {} fields, found {}", source,
                                                   record_line, table.header.size(), record.size()));
            }
            table.rows.push_back(Row{record_line, std::move(record)});
        }
        record.clear();
        record_has_content = false;
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line;
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
            case '"':
                if (!trim(field).empty()) {
                    throw DataQualityError(
                        fmt::format("malformed CSV at {}:{}: quote inside an unquoted field", source, line));
                }
                field.clear();
                in_quotes = true;
                field_quoted = true;
                record_has_content = true;
                break;
            case ',':
                record_has_content = true;
                end_field();
                break;
            case '\n':
                end_record();
                ++line;
                record_line = line;
                break;
            case '\r':
                break;
            default:
                if (c != ' ' && c != '\t') record_has_content = true;
                field.push_back(c);
        }
    }
    if (in_quotes) {
        throw DataQualityError(fmt::format("malformed CSV at {}:{}: unterminated quoted field", source, record_line));
    }
    end_record();
    return table;
}

std::string escape(std::string_view field) {
    if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::string join_row(const std::vector<std::string>& fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out.push_back(',');
        out += escape(fields[i]);
    }
    return out;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(fmt::format("cannot open '{}' for reading", path.string()));
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError(fmt::format("error while reading '{}'", path.string()));
    return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
    static std::atomic<unsigned> counter{0};
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
        if (ec) throw IoError(fmt::format("cannot create directory '{}': {}", path.parent_path().string(), ec.message()));
    }
    auto tmp = path;
    tmp += fmt::format(".tmp.{}.{}", ::getpid(), counter.fetch_add(1));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError(fmt::format("cannot open '{}' for writing", tmp.string()));
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw IoError(fmt::format("error while writing '{}'", tmp.string()));
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw IoError(fmt::format("cannot move output into '{}'", path.string()));
    }
}

std::optional<double> parse_double(std::string_view text) {
    text = trim(text);
    if (text.empty()) return std::nullopt;
    if (text == "inf" || text == "+inf") return std::numeric_limits<double>::infinity();
    if (text == "-inf") return -std::numeric_limits<double>::infinity();
    double value = 0.0;
    const auto* first = text.data();
    if (*first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size()) return std::nullopt;
    return value;
}

std::optional<long long> parse_integer(std::string_view text) {
    text = trim(text);
    if (text.empty()) return std::nullopt;
    long long value = 0;
    const auto* first = text.data();
    if (*first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size()) return std::nullopt;
    return value;
}

}  // namespace refgrowth::csv
