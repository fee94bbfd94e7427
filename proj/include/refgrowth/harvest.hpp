#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "refgrowth/corpus.hpp"

namespace refgrowth::corpus {

enum class HarvestFailureKind { malformed_doi, not_found, malformed_response, missing_reference_count, server_error };

std::string_view to_string(HarvestFailureKind kind);

struct HarvestFailure {
    std::string doi;
    HarvestFailureKind kind{};
    std::string detail;
};

struct HarvestOptions {
    std::string endpoint = "https://api.crossref.org/works";
    double rate_limit = 1.0;  ///< requests per second across all workers
    int concurrency = 2;
    int max_retries = 4;
    std::chrono::milliseconds initial_backoff{250};
    std::chrono::milliseconds timeout{10000};
    std::optional<std::filesystem::path> cache_dir;
    bool offline = false;     ///< serve from cache only; a miss is a NetworkError
    std::string field_label;  ///< copied into every record
};

struct HarvestResult {
    std::vector<ArticleRecord> records;  ///< first-occurrence order of the input
    std::vector<HarvestFailure> failures;
    std::size_t cache_hits = 0;
    std::size_t requests = 0;
};

/// REFGROWTH_ENDPOINT, REFGROWTH_RATE, REFGROWTH_CACHE and REFGROWTH_OFFLINE
/// override the corresponding fields of `base`.
HarvestOptions apply_environment(HarvestOptions base);

/// One DOI per line; blank lines and '#' comments are ignored.
std::vector<std::string> parse_doi_list(std::string_view text);

bool is_well_formed_doi(std::string_view doi);

/// Percent-encodes everything outside the unreserved set, keeping '/'.
std::string encode_doi_path(std::string_view doi);

/// Interprets a CrossRef-style works response for one DOI. Returns the
/// record, or the failure that prevents one.
struct ParsedWork {
    std::optional<ArticleRecord> record;
    std::optional<HarvestFailure> failure;
};
ParsedWork parse_work(std::string_view doi, std::string_view body, std::string_view field_label = "");

/// Fetches reference counts and page spans. Per-DOI problems land in
/// `failures`; NetworkError when the endpoint stays unreachable after the
/// retries (or on a cache miss in offline mode).
HarvestResult harvest_reference_counts(const std::vector<std::string>& dois, const HarvestOptions& options);

}  // namespace refgrowth::corpus
