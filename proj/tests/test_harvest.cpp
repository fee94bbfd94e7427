#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <chrono>
#include <filesystem>
#include <map>
#include <mutex>
#include <thread>

#include "refgrowth/error.hpp"
#include "refgrowth/harvest.hpp"
#include "stub_server.hpp"

namespace cp = refgrowth::corpus;
using namespace std::chrono_literals;
using refgrowth_test::StubServer;

namespace {

cp::HarvestOptions fast_options(const std::string& endpoint) {
    cp::HarvestOptions o;
    o.endpoint = endpoint;
    o.rate_limit = 200.0;
    o.initial_backoff = 5ms;
    o.max_retries = 3;
    o.timeout = 2000ms;
    return o;
}

std::filesystem::path fresh_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "refgrowth_test_harvest" / name;
    std::filesystem::remove_all(dir);
    return dir;
}

}  // namespace

TEST_CASE("empty DOI list gives an empty result without touching the network") {
    auto o = fast_options("http://127.0.0.1:9/works");
    const auto r = cp::harvest_reference_counts({}, o);
    CHECK(r.records.empty());
    CHECK(r.failures.empty());
    CHECK(r.requests == 0);
}

TEST_CASE("stub returning reference-count 42") {
    StubServer stub;
    const auto r = cp::harvest_reference_counts({"10.1234/abc"}, fast_options(stub.endpoint()));
    REQUIRE(r.records.size() == 1);
    CHECK(r.records[0].id == "10.1234/abc");
    CHECK(*r.records[0].n_references == 42);
    CHECK(*r.records[0].n_pages == 10);
    CHECK(*r.records[0].year == 2016);
    CHECK(r.failures.empty());
}

TEST_CASE("metadata without page fields") {
    StubServer stub;
    const auto r = cp::harvest_reference_counts({"10.1234/nopages"}, fast_options(stub.endpoint()));
    REQUIRE(r.records.size() == 1);
    CHECK(*r.records[0].n_references == 17);
    CHECK_FALSE(r.records[0].n_pages.has_value());
}

TEST_CASE("per-DOI failures are recorded, never emitted, and DOIs are not duplicated") {
    StubServer stub;
    const std::vector<std::string> dois{"10.1234/abc",  "10.1234/missing", "10.1234/garbage", "10.1234/norefs",
                                        "not-a-doi",    "10.1234/abc",     "10.1234/down",    "10.1234/flaky",
                                        "10.1234/nopages"};
    auto o = fast_options(stub.endpoint());
    o.concurrency = 3;
    const auto r = cp::harvest_reference_counts(dois, o);

    std::vector<std::string> ids;
    for (const auto& rec : r.records) ids.push_back(rec.id);
    CHECK(ids == std::vector<std::string>{"10.1234/abc", "10.1234/flaky", "10.1234/nopages"});
    CHECK(stub.hits("10.1234/abc") == 1);
    CHECK(stub.hits("10.1234/flaky") == 3);

    std::map<std::string, cp::HarvestFailureKind> kinds;
    for (const auto& f : r.failures) kinds[f.doi] = f.kind;
    CHECK(kinds.size() == 5);
    CHECK(kinds["10.1234/missing"] == cp::HarvestFailureKind::not_found);
    CHECK(kinds["10.1234/garbage"] == cp::HarvestFailureKind::malformed_response);
    CHECK(kinds["10.1234/norefs"] == cp::HarvestFailureKind::missing_reference_count);
    CHECK(kinds["not-a-doi"] == cp::HarvestFailureKind::malformed_doi);
    CHECK(kinds["10.1234/down"] == cp::HarvestFailureKind::server_error);
    CHECK(stub.hits("10.1234/down") == 4);
}

TEST_CASE("DOIs are path-encoded") {
    CHECK(cp::encode_doi_path("10.1000/a b<c>") == "10.1000/a%20b%3Cc%3E");
    CHECK(cp::encode_doi_path("10.1002/(SICI)1097") == "10.1002/%28SICI%291097");
    StubServer stub;
    const auto r = cp::harvest_reference_counts({"10.1000/a<b>#c?d"}, fast_options(stub.endpoint()));
    REQUIRE(r.records.size() == 1);
    CHECK(*r.records[0].n_references == 8);
}

TEST_CASE("cache replays with the server stopped") {
    const auto cache = fresh_dir("replay");
    const std::vector<std::string> dois{"10.1234/abc", "10.1234/nopages", "10.1234/missing"};
    cp::HarvestResult live;
    std::string endpoint;
    {
        StubServer stub;
        endpoint = stub.endpoint();
        auto o = fast_options(endpoint);
        o.cache_dir = cache;
        live = cp::harvest_reference_counts(dois, o);
        CHECK(live.requests == 3);
    }
    auto o = fast_options(endpoint);
    o.cache_dir = cache;
    o.offline = true;
    const auto replay = cp::harvest_reference_counts(dois, o);
    CHECK(replay.requests == 0);
    CHECK(replay.cache_hits == 3);
    CHECK(replay.records == live.records);
    REQUIRE(replay.failures.size() == 1);
    CHECK(replay.failures[0].kind == cp::HarvestFailureKind::not_found);

    // Online with a warm cache also needs no requests.
    o.offline = false;
    CHECK(cp::harvest_reference_counts(dois, o).requests == 0);

    o.offline = true;
    CHECK_THROWS_AS(cp::harvest_reference_counts({"10.1234/uncached"}, o), refgrowth::NetworkError);
}

TEST_CASE("transient server errors are not cached") {
    const auto cache = fresh_dir("transient");
    StubServer stub;
    auto o = fast_options(stub.endpoint());
    o.cache_dir = cache;
    o.max_retries = 0;
    const auto r = cp::harvest_reference_counts({"10.1234/flaky"}, o);
    CHECK(r.records.empty());
    REQUIRE(r.failures.size() == 1);
    CHECK(r.failures[0].kind == cp::HarvestFailureKind::server_error);
    CHECK((!std::filesystem::exists(cache) || std::filesystem::is_empty(cache)));
}

TEST_CASE("unreachable endpoint is a batch-level network error") {
    std::string endpoint;
    {
        StubServer stub;
        endpoint = stub.endpoint();
    }
    auto o = fast_options(endpoint);
    o.max_retries = 1;
    CHECK_THROWS_AS(cp::harvest_reference_counts({"10.1234/abc"}, o), refgrowth::NetworkError);
}

TEST_CASE("global rate limit and concurrency bound") {
    StubServer stub;
    std::vector<std::string> dois;
    for (int i = 0; i < 10; ++i) dois.push_back("10.5555/bulk" + std::to_string(i));
    auto o = fast_options(stub.endpoint());
    o.rate_limit = 40.0;
    o.concurrency = 2;
    const auto start = std::chrono::steady_clock::now();
    const auto r = cp::harvest_reference_counts(dois, o);
    const auto elapsed = std::chrono::steady_clock::now() - start;
    CHECK(r.records.size() == 10);
    // Ten slots spaced 25 ms apart: the last starts at least 225 ms in.
    CHECK(elapsed >= 225ms);
    CHECK(stub.max_in_flight() <= 2);
}

TEST_CASE("configuration") {
    CHECK_THROWS_AS(cp::harvest_reference_counts({"10.1234/abc"}, fast_options("ftp://x/works")),
                    refgrowth::ConfigError);
    auto o = fast_options("http://127.0.0.1:9/works");
    o.rate_limit = 0.0;
    CHECK_THROWS_AS(cp::harvest_reference_counts({"10.1234/abc"}, o), refgrowth::ConfigError);

    ::setenv("REFGROWTH_ENDPOINT", "http://example.invalid/w", 1);
    ::setenv("REFGROWTH_RATE", "2.5", 1);
    ::setenv("REFGROWTH_CACHE", "/tmp/c", 1);
    ::setenv("REFGROWTH_OFFLINE", "1", 1);
    const auto env = cp::apply_environment({});
    CHECK(env.endpoint == "http://example.invalid/w");
    CHECK(env.rate_limit == 2.5);
    CHECK(env.cache_dir->string() == "/tmp/c");
    CHECK(env.offline);
    ::setenv("REFGROWTH_RATE", "-1", 1);
    CHECK_THROWS_AS(cp::apply_environment({}), refgrowth::ConfigError);
    for (const char* k : {"REFGROWTH_ENDPOINT", "REFGROWTH_RATE", "REFGROWTH_CACHE", "REFGROWTH_OFFLINE"}) ::unsetenv(k);
}

TEST_CASE("DOI list parsing and validation") {
    CHECK(cp::parse_doi_list("# header\n10.1/x\n\n  10.1234/y  \r\n") ==
          std::vector<std::string>{"10.1/x", "10.1234/y"});
    CHECK(cp::is_well_formed_doi("10.1234/abc"));
    CHECK_FALSE(cp::is_well_formed_doi("10.1/x"));
    CHECK_FALSE(cp::is_well_formed_doi("doi:10.1234/abc"));
}
