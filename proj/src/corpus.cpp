#include "refgrowth/corpus.hpp"

#include <algorithm>
#include <array>
#include <map>

#include <fmt/format.h>

#include "refgrowth/csv.hpp"
#include "refgrowth/error.hpp"
#include "refgrowth/stats.hpp"

namespace refgrowth::corpus {
namespace {

std::optional<std::int64_t> optional_count(const csv::Row& row, std::size_t col, std::string_view name,
                                           std::string_view source) {
    const auto text = csv::trim(row.fields[col]);
    if (text.empty()) return std::nullopt;
    const auto v = csv::parse_integer(text);
    if (!v) {
        throw DataQualityError(
            fmt::format("malformed CSV at {}:{}: {} is not an integer: '{}'", source, row.line, name, text));
    }
    if (*v < 0) {
        throw DataQualityError(fmt::format("malformed CSV at {}:{}: {} is negative", source, row.line, name));
    }
    return *v;
}

std::string format_optional(const std::optional<std::int64_t>& v) { return v ? fmt::format("{}", *v) : ""; }

}  // namespace

std::vector<ArticleRecord> parse_articles(std::string_view text, std::string_view source, YearWindow plausible) {
    if (csv::trim(text).empty()) return {};
    const auto table = csv::parse(text, source);

    std::array<std::size_t, std::size(kArticleColumns)> index{};
    for (const auto& name : table.header) {
        if (std::find(std::begin(kArticleColumns), std::end(kArticleColumns), name) == std::end(kArticleColumns)) {
            throw DataQualityError(fmt::format("{}: unknown column '{}'", source, name));
        }
    }
    for (std::size_t i = 0; i < index.size(); ++i) {
        const auto col = table.column(kArticleColumns[i]);
        if (!col) throw DataQualityError(fmt::format("{}: missing column '{}'", source, kArticleColumns[i]));
        index[i] = *col;
    }
    if (table.header.size() != index.size()) throw DataQualityError(fmt::format("{}: duplicate columns", source));

    std::vector<ArticleRecord> out;
    out.reserve(table.rows.size());
    for (const auto& row : table.rows) {
        ArticleRecord r;
        r.id = std::string(csv::trim(row.fields[index[0]]));
        if (const auto y = optional_count(row, index[1], "year", source)) {
            if (*y < plausible.first || *y > plausible.last) {
                throw DataQualityError(fmt::format("malformed CSV at {}:{}: year {} outside [{}, {}]", source,
                                                   row.line, *y, plausible.first, plausible.last));
            }
            r.year = static_cast<int>(*y);
        }
        r.field = std::string(csv::trim(row.fields[index[2]]));
        r.n_references = optional_count(row, index[3], "n_references", source);
        r.n_pages = optional_count(row, index[4], "n_pages", source);
        out.push_back(std::move(r));
    }
    return out;
}

FilterResult filter(std::vector<ArticleRecord> records, const FilterOptions& options) {
    FilterResult result;
    result.rows_read = records.size();
    for (auto& r : records) {
        if (!r.year) {
            ++result.dropped.missing_year;
        } else if (!r.n_references) {
            ++result.dropped.missing_references;
        } else if (*r.n_references < options.min_refs) {
            ++result.dropped.too_few_references;
        } else if (options.window && !options.window->contains(*r.year)) {
            ++result.dropped.outside_window;
        } else {
            result.records.push_back(std::move(r));
        }
    }
    return result;
}

FilterResult load_and_filter(const std::filesystem::path& path, const FilterOptions& options) {
    return filter(parse_articles(csv::read_file(path), path.string(), options.plausible), options);
}

std::string articles_to_csv(const std::vector<ArticleRecord>& records) {
    std::string out = "id,year,field,n_references,n_pages\n";
    for (const auto& r : records) {
        out += csv::join_row({r.id, r.year ? fmt::format("{}", *r.year) : "", r.field, format_optional(r.n_references),
                              format_optional(r.n_pages)});
        out += '\n';
    }
    return out;
}

std::vector<YearlyAggregate> aggregate_yearly(const std::vector<ArticleRecord>& records) {
    std::map<std::pair<int, std::string>, std::vector<double>> groups;
    for (const auto& r : records) {
        if (!r.year || !r.n_references) continue;
        groups[{*r.year, r.field}].push_back(static_cast<double>(*r.n_references));
    }
    if (groups.empty()) throw DataQualityError("aggregate_yearly: no usable records");

    std::vector<YearlyAggregate> out;
    out.reserve(groups.size());
    for (auto& [key, values] : groups) {
        YearlyAggregate a;
        a.year = key.first;
        a.field = key.second;
        a.article_count = values.size();
        a.mean_refs = stats::mean(values);
        a.median_refs = stats::median(std::move(values));
        out.push_back(std::move(a));
    }
    return out;
}

std::string aggregates_to_csv(const std::vector<YearlyAggregate>& rows) {
    std::string out = "year,field,article_count,mean_refs,median_refs\n";
    for (const auto& a : rows) {
        out += fmt::format("{},{},{},{},{}\n", a.year, csv::escape(a.field), a.article_count, a.mean_refs,
                           a.median_refs);
    }
    return out;
}

std::vector<YearlyAggregate> parse_aggregates(std::string_view text, std::string_view source) {
    const auto table = csv::parse(text, source);
    const auto year = table.column("year"), field = table.column("field"), count = table.column("article_count"),
               mean = table.column("mean_refs"), median = table.column("median_refs");
    if (!year || !field || !count || !mean || !median) {
        throw DataQualityError(
            fmt::format("{}: expected columns year,field,article_count,mean_refs,median_refs", source));
    }
    std::vector<YearlyAggregate> out;
    for (const auto& row : table.rows) {
        const auto y = csv::parse_integer(row.fields[*year]);
        const auto c = csv::parse_integer(row.fields[*count]);
        const auto m = csv::parse_double(row.fields[*mean]);
        const auto md = csv::parse_double(row.fields[*median]);
        if (!y || !c || !m || !md || *c < 1) {
            throw DataQualityError(fmt::format("malformed CSV at {}:{}: bad aggregate row", source, row.line));
        }
        out.push_back({static_cast<int>(*y), row.fields[*field], static_cast<std::size_t>(*c), *m, *md});
    }
    return out;
}

}  // namespace refgrowth::corpus
