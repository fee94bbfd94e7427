#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <random>

#include "refgrowth/corpus.hpp"
#include "refgrowth/csv.hpp"
#include "refgrowth/error.hpp"

namespace cp = refgrowth::corpus;

namespace {

std::filesystem::path scratch(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "refgrowth_test_corpus";
    std::filesystem::create_directories(dir);
    return dir / name;
}

std::vector<cp::ArticleRecord> random_records(std::mt19937_64& rng, std::size_t n) {
    std::uniform_int_distribution<int> year(2006, 2016), refs(0, 80), field(0, 2), missing(0, 19);
    const char* fields[] = {"physics", "history", "biology"};
    std::vector<cp::ArticleRecord> out;
    for (std::size_t i = 0; i < n; ++i) {
        cp::ArticleRecord r;
        r.id = "a" + std::to_string(i);
        if (missing(rng) != 0) r.year = year(rng);
        if (missing(rng) != 0) r.n_references = refs(rng);
        if (missing(rng) > 5) r.n_pages = refs(rng) + 1;
        r.field = fields[field(rng)];
        out.push_back(r);
    }
    return out;
}

}  // namespace

TEST_SUITE("load_and_filter") {
    TEST_CASE("fewer than min_refs is dropped, exactly min_refs is kept") {
        const auto records = cp::parse_articles(
            "id,year,field,n_references,n_pages\n"
            "x1,2010,phys,4,10\n"
            "x2,2010,phys,5,\n"
            "x3,,phys,30,12\n"
            "x4,2011,phys,,12\n");
        const auto result = cp::filter(records);
        REQUIRE(result.records.size() == 1);
        CHECK(result.records[0].id == "x2");
        CHECK_FALSE(result.records[0].n_pages.has_value());
        CHECK(result.dropped.too_few_references == 1);
        CHECK(result.dropped.missing_year == 1);
        CHECK(result.dropped.missing_references == 1);
        CHECK(result.rows_read == 4);
    }

    TEST_CASE("empty file gives an empty list and a zero-drop report") {
        const auto path = scratch("empty.csv");
        refgrowth::csv::write_file_atomic(path, "");
        const auto result = cp::load_and_filter(path);
        CHECK(result.records.empty());
        CHECK(result.dropped.total() == 0);

        refgrowth::csv::write_file_atomic(path, "id,year,field,n_references,n_pages\n");
        CHECK(cp::load_and_filter(path).records.empty());
    }

    TEST_CASE("columns in another order") {
        const auto r = cp::parse_articles("n_pages,field,id,n_references,year\n3,bio,q,9,2012\n");
        REQUIRE(r.size() == 1);
        CHECK(r[0].id == "q");
        CHECK(*r[0].year == 2012);
        CHECK(*r[0].n_references == 9);
        CHECK(*r[0].n_pages == 3);
    }

    TEST_CASE("schema and row errors") {
        CHECK_THROWS_WITH_AS(cp::parse_articles("id,year,field,n_references,n_pages,doi\n"),
                             doctest::Contains("unknown column 'doi'"), refgrowth::DataQualityError);
        CHECK_THROWS_WITH_AS(cp::parse_articles("id,year,field,n_references\n"),
                             doctest::Contains("missing column 'n_pages'"), refgrowth::DataQualityError);
        CHECK_THROWS_WITH_AS(cp::parse_articles("id,year,field,n_references,n_pages\na,2010,f,5,1\nb,2010,f,five,1\n",
                                                "in.csv"),
                             doctest::Contains("in.csv:3"), refgrowth::DataQualityError);
        CHECK_THROWS_WITH_AS(cp::parse_articles("id,year,field,n_references,n_pages\na,2010,f,-1,1\n"),
                             doctest::Contains("negative"), refgrowth::DataQualityError);
        CHECK_THROWS_AS(cp::parse_articles("id,year,field,n_references,n_pages\na,2010,f,5\n"),
                        refgrowth::DataQualityError);
        CHECK_THROWS_WITH_AS(cp::parse_articles("id,year,field,n_references,n_pages\na,20100,f,5,1\n"),
                             doctest::Contains("outside"), refgrowth::DataQualityError);
    }

    TEST_CASE("missing file is an io error") {
        CHECK_THROWS_AS(cp::load_and_filter(scratch("does_not_exist.csv")), refgrowth::IoError);
    }

    TEST_CASE("year window is a parameter") {
        std::vector<cp::ArticleRecord> records{{"a", 2006, "f", 10, {}}, {"b", 2016, "f", 10, {}},
                                               {"c", 2019, "f", 10, {}}};
        cp::FilterOptions opt;
        opt.window = cp::YearWindow{2006, 2016};
        auto res = cp::filter(records, opt);
        CHECK(res.records.size() == 2);
        CHECK(res.dropped.outside_window == 1);
        opt.window = cp::YearWindow{2007, 2019};
        res = cp::filter(records, opt);
        CHECK(res.records.size() == 2);
        CHECK(res.records[1].id == "c");
    }

    TEST_CASE("property: filtering is idempotent, also through the CSV file") {
        std::mt19937_64 rng(5);
        for (int trial = 0; trial < 20; ++trial) {
            const auto records = random_records(rng, 200);
            const auto once = cp::filter(records);
            const auto twice = cp::filter(once.records);
            CHECK(twice.records == once.records);
            CHECK(twice.dropped.total() == 0);
            CHECK(once.records.size() + once.dropped.total() == records.size());
        }
        const auto records = random_records(rng, 300);
        const auto path = scratch("filtered.csv");
        refgrowth::csv::write_file_atomic(path, cp::articles_to_csv(cp::filter(records).records));
        const auto reread = cp::load_and_filter(path);
        CHECK(reread.records == cp::filter(records).records);
        CHECK(reread.dropped.total() == 0);
    }
}

TEST_SUITE("aggregate_yearly") {
    TEST_CASE("mean and median") {
        auto a = cp::aggregate_yearly({{"a", 2010, "f", 5, {}}, {"b", 2010, "f", 7, {}}});
        REQUIRE(a.size() == 1);
        CHECK(a[0].mean_refs == 6.0);
        CHECK(a[0].median_refs == 6.0);
        CHECK(a[0].article_count == 2);

        a = cp::aggregate_yearly({{"a", 2010, "f", 5, {}}, {"b", 2010, "f", 6, {}}, {"c", 2010, "f", 100, {}}});
        CHECK(a[0].mean_refs == 37.0);
        CHECK(a[0].median_refs == 6.0);
    }

    TEST_CASE("two fields in the same year give two rows, ordered by year then field") {
        const auto a = cp::aggregate_yearly(
            {{"a", 2011, "zoo", 8, {}}, {"b", 2010, "phys", 6, {}}, {"c", 2010, "bio", 9, {}}});
        REQUIRE(a.size() == 3);
        CHECK(a[0].year == 2010);
        CHECK(a[0].field == "bio");
        CHECK(a[1].field == "phys");
        CHECK(a[2].year == 2011);
    }

    TEST_CASE("empty input") { CHECK_THROWS_AS(cp::aggregate_yearly({}), refgrowth::DataQualityError); }

    TEST_CASE("property: mass conservation and min <= median <= max") {
        std::mt19937_64 rng(17);
        for (int trial = 0; trial < 20; ++trial) {
            const auto kept = cp::filter(random_records(rng, 400)).records;
            const auto agg = cp::aggregate_yearly(kept);
            std::size_t mass = 0;
            for (const auto& row : agg) {
                mass += row.article_count;
                std::int64_t lo = INT64_MAX, hi = INT64_MIN;
                for (const auto& r : kept) {
                    if (*r.year == row.year && r.field == row.field) {
                        lo = std::min(lo, *r.n_references);
                        hi = std::max(hi, *r.n_references);
                    }
                }
                CHECK(static_cast<double>(lo) <= row.median_refs);
                CHECK(row.median_refs <= static_cast<double>(hi));
                CHECK(row.median_refs >= 5.0);
                CHECK(row.article_count >= 1);
            }
            CHECK(mass == kept.size());
            for (std::size_t i = 1; i < agg.size(); ++i) CHECK(agg[i - 1].year <= agg[i].year);
        }
    }

    TEST_CASE("aggregate CSV round trip") {
        const auto agg = cp::aggregate_yearly(
            {{"a", 2010, "f, g", 5, {}}, {"b", 2010, "f, g", 6, {}}, {"c", 2011, "h", 7, {}}});
        const auto text = cp::aggregates_to_csv(agg);
        CHECK(text.rfind("year,field,article_count,mean_refs,median_refs\n", 0) == 0);
        const auto back = cp::parse_aggregates(text);
        REQUIRE(back.size() == 2);
        CHECK(back[0].field == "f, g");
        CHECK(back[0].mean_refs == 5.5);
        CHECK(back[1].article_count == 1);
    }
}
