#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace refgrowth::corpus {

struct ArticleRecord {
    std::string id;
    std::optional<int> year;
    std::string field;
    std::optional<std::int64_t> n_references;
    std::optional<std::int64_t> n_pages;

    bool operator==(const ArticleRecord&) const = default;
};

struct YearWindow {
    int first = 0;
    int last = 0;  ///< inclusive
    bool contains(int year) const { return year >= first && year <= last; }
};

struct FilterOptions {
    std::int64_t min_refs = 5;
    std::optional<YearWindow> window;
    YearWindow plausible{1000, 3000};
};

struct DropReport {
    std::size_t missing_year = 0;
    std::size_t missing_references = 0;
    std::size_t too_few_references = 0;
    std::size_t outside_window = 0;

    std::size_t total() const { return missing_year + missing_references + too_few_references + outside_window; }
};

struct FilterResult {
    std::vector<ArticleRecord> records;
    DropReport dropped;
    std::size_t rows_read = 0;
};

/// Required header columns, in canonical order.
inline constexpr std::string_view kArticleColumns[] = {"id", "year", "field", "n_references", "n_pages"};

/// Strict parse of the article CSV. Columns may come in any order but the
/// set must match exactly. Empty fields are missing values. Throws
/// DataQualityError with a line number for malformed rows, negative counts
/// and years outside `plausible`.
std::vector<ArticleRecord> parse_articles(std::string_view text, std::string_view source = "<articles>",
                                          YearWindow plausible = FilterOptions{}.plausible);

FilterResult filter(std::vector<ArticleRecord> records, const FilterOptions& options = {});
FilterResult load_and_filter(const std::filesystem::path& path, const FilterOptions& options = {});

std::string articles_to_csv(const std::vector<ArticleRecord>& records);

struct YearlyAggregate {
    int year = 0;
    std::string field;
    std::size_t article_count = 0;
    double mean_refs = 0.0;
    double median_refs = 0.0;
};

/// Groups by (year, field), ordered by year then field. Records without a
/// year or reference count are skipped; DataQualityError if nothing is left.
std::vector<YearlyAggregate> aggregate_yearly(const std::vector<ArticleRecord>& records);

std::string aggregates_to_csv(const std::vector<YearlyAggregate>& rows);
std::vector<YearlyAggregate> parse_aggregates(std::string_view text, std::string_view source = "<aggregate>");

}  // namespace refgrowth::corpus
