#include "refgrowth/harvest.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <regex>
#include <thread>
#include <unordered_set>

#include <fmt/format.h>
#include <httplib.h>
#include <json.hpp>

#include "refgrowth/csv.hpp"
#include "refgrowth/error.hpp"

namespace refgrowth::corpus {
namespace {

using Clock = std::chrono::steady_clock;
using nlohmann::json;

// Hands out evenly spaced request slots shared by every worker.
class RateLimiter {
public:
    explicit RateLimiter(double per_second)
        : spacing_(std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(1.0 / per_second))) {}

    void acquire() {
        Clock::time_point slot;
        {
            std::lock_guard lock(mutex_);
            const auto now = Clock::now();
            slot = std::max(now, next_);
            next_ = slot + spacing_;
        }
        std::this_thread::sleep_until(slot);
    }

private:
    Clock::duration spacing_;
    Clock::time_point next_{};
    std::mutex mutex_;
};

struct Endpoint {
    std::string origin;  ///< scheme://host[:port]
    std::string path;    ///< base path without a trailing slash
};

Endpoint split_endpoint(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError(fmt::format("endpoint: not a URL: '{}'", url));
    const auto scheme = url.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https") throw ConfigError(fmt::format("endpoint: unsupported scheme '{}'", scheme));
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
    if (scheme == "https") throw ConfigError("endpoint: this build has no TLS support, use an http:// endpoint");
#endif
    const auto path_start = url.find('/', scheme_end + 3);
    Endpoint e;
    e.origin = url.substr(0, path_start);
    e.path = path_start == std::string::npos ? "" : url.substr(path_start);
    while (!e.path.empty() && e.path.back() == '/') e.path.pop_back();
    return e;
}

struct Response {
    int status = 0;
    std::string body;
};

std::filesystem::path cache_path(const std::filesystem::path& dir, std::string_view doi) {
    std::string name;
    for (unsigned char c : doi) {
        if (std::isalnum(c) || c == '.' || c == '-' || c == '_') {
            name += static_cast<char>(c);
        } else {
            name += fmt::format("%{:02X}", c);
        }
    }
    return dir / (name + ".json");
}

std::optional<Response> cache_load(const std::filesystem::path& path) {
    std::error_code ec;
    if (!std::filesystem::exists(path, ec)) return std::nullopt;
    const auto j = json::parse(csv::read_file(path), nullptr, false);
    if (j.is_discarded() || !j.contains("status") || !j.contains("body")) {
        throw IoError(fmt::format("corrupt cache entry '{}'", path.string()));
    }
    return Response{j["status"].get<int>(), j["body"].get<std::string>()};
}

void cache_store(const std::filesystem::path& path, std::string_view doi, const Response& r) {
    json j;
    j["doi"] = doi;
    j["status"] = r.status;
    j["body"] = r.body;
    csv::write_file_atomic(path, j.dump() + "\n");
}

// Responses that are final answers about the DOI and safe to replay.
bool cacheable(int status) { return status == 200 || status == 404 || status == 400 || status == 410; }
bool retryable(int status) { return status == 429 || status >= 500; }

std::optional<int> json_int(const json& j) {
    if (j.is_number_integer() || j.is_number_unsigned()) return j.get<int>();
    if (j.is_string()) {
        if (const auto v = csv::parse_integer(j.get<std::string>())) return static_cast<int>(*v);
    }
    return std::nullopt;
}

std::optional<int> publication_year(const json& message) {
    for (const char* key : {"issued", "published-print", "published-online", "published", "created"}) {
        const auto it = message.find(key);
        if (it == message.end() || !it->is_object()) continue;
        const auto parts = it->find("date-parts");
        if (parts == it->end() || !parts->is_array() || parts->empty()) continue;
        const auto& first = (*parts)[0];
        if (!first.is_array() || first.empty()) continue;
        if (const auto y = json_int(first[0])) return y;
    }
    return std::nullopt;
}

std::optional<std::int64_t> page_count(const json& message) {
    const auto it = message.find("page");
    if (it == message.end() || !it->is_string()) return std::nullopt;
    const auto text = it->get<std::string>();
    static const std::regex span(R"(^\s*(\d+)\s*(?:-|\xE2\x80\x93)\s*(\d+)\s*$)");
    std::smatch m;
    if (!std::regex_match(text, m, span)) return std::nullopt;
    const auto first = csv::parse_integer(m[1].str()), last = csv::parse_integer(m[2].str());
    if (!first || !last || *last < *first) return std::nullopt;
    return *last - *first + 1;
}

HarvestFailure failure(std::string_view doi, HarvestFailureKind kind, std::string detail) {
    return {std::string(doi), kind, std::move(detail)};
}

}  // namespace

std::string_view to_string(HarvestFailureKind kind) {
    switch (kind) {
        case HarvestFailureKind::malformed_doi: return "malformed-doi";
        case HarvestFailureKind::not_found: return "not-found";
        case HarvestFailureKind::malformed_response: return "malformed-response";
        case HarvestFailureKind::missing_reference_count: return "missing-reference-count";
        case HarvestFailureKind::server_error: return "server-error";
    }
    return "unknown";
}

HarvestOptions apply_environment(HarvestOptions base) {
    if (const char* v = std::getenv("REFGROWTH_ENDPOINT"); v && *v) base.endpoint = v;
    if (const char* v = std::getenv("REFGROWTH_RATE"); v && *v) {
        const auto rate = csv::parse_double(v);
        if (!rate || !(*rate > 0.0)) throw ConfigError(fmt::format("REFGROWTH_RATE: expected a positive number, got '{}'", v));
        base.rate_limit = *rate;
    }
    if (const char* v = std::getenv("REFGROWTH_CACHE"); v && *v) base.cache_dir = v;
    if (const char* v = std::getenv("REFGROWTH_OFFLINE"); v && *v) {
        const std::string s(v);
        base.offline = !(s == "0" || s == "false" || s == "no");
    }
    return base;
}

std::vector<std::string> parse_doi_list(std::string_view text) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        auto line = csv::trim(text.substr(pos, end - pos));
        if (!line.empty() && line.front() != '#') out.emplace_back(line);
        pos = end + 1;
    }
    return out;
}

bool is_well_formed_doi(std::string_view doi) {
    static const std::regex pattern(R"(^10\.\d{4,9}/\S+$)");
    return std::regex_match(doi.begin(), doi.end(), pattern);
}

std::string encode_doi_path(std::string_view doi) {
    std::string out;
    for (unsigned char c : doi) {
        if (std::isalnum(c) || c == '-' || c == '.' || c == '_' || c == '~' || c == '/') {
            out += static_cast<char>(c);
        } else {
            out += fmt::format("%{:02X}", c);
        }
    }
    return out;
}

ParsedWork parse_work(std::string_view doi, std::string_view body, std::string_view field_label) {
    const auto j = json::parse(body, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        return {std::nullopt, failure(doi, HarvestFailureKind::malformed_response, "body is not a JSON object")};
    }
    const auto message = j.find("message");
    if (message == j.end() || !message->is_object()) {
        return {std::nullopt, failure(doi, HarvestFailureKind::malformed_response, "no 'message' object")};
    }
    std::optional<int> refs;
    for (const char* key : {"reference-count", "references-count"}) {
        if (const auto it = message->find(key); it != message->end()) {
            refs = json_int(*it);
            if (refs) break;
        }
    }
    if (!refs || *refs < 0) {
        return {std::nullopt, failure(doi, HarvestFailureKind::missing_reference_count, "no usable reference-count")};
    }
    ArticleRecord r;
    r.id = std::string(doi);
    r.year = publication_year(*message);
    r.field = std::string(field_label);
    r.n_references = *refs;
    r.n_pages = page_count(*message);
    return {std::move(r), std::nullopt};
}

HarvestResult harvest_reference_counts(const std::vector<std::string>& dois, const HarvestOptions& options) {
    if (!(options.rate_limit > 0.0)) throw ConfigError("rate: must be > 0 requests per second");
    if (options.concurrency < 1) throw ConfigError("concurrency: must be >= 1");
    if (options.max_retries < 0) throw ConfigError("retries: must be >= 0");

    std::vector<std::string> unique;
    {
        std::unordered_set<std::string> seen;
        for (const auto& raw : dois) {
            std::string d(csv::trim(raw));
            if (seen.insert(d).second) unique.push_back(std::move(d));
        }
    }
    HarvestResult result;
    if (unique.empty()) return result;

    const auto endpoint = split_endpoint(options.endpoint);
    RateLimiter limiter(options.rate_limit);
    std::vector<ParsedWork> outcomes(unique.size());
    std::atomic<std::size_t> next{0}, cache_hits{0}, requests{0};
    std::atomic<bool> abort{false};
    std::exception_ptr error;
    std::mutex error_mutex;

    auto fetch = [&](httplib::Client& client, const std::string& doi) -> Response {
        const auto path = fmt::format("{}/{}", endpoint.path, encode_doi_path(doi));
        auto backoff = options.initial_backoff;
        std::string last_problem;
        for (int attempt = 0; attempt <= options.max_retries; ++attempt) {
            if (attempt > 0) {
                std::this_thread::sleep_for(backoff);
                backoff = std::min(backoff * 2, std::chrono::milliseconds(30000));
            }
            limiter.acquire();
            ++requests;
            auto res = client.Get(path);
            if (!res) {
                last_problem = httplib::to_string(res.error());
                continue;
            }
            if (retryable(res->status)) {
                last_problem = fmt::format("HTTP {}", res->status);
                continue;
            }
            return {res->status, res->body};
        }
        if (last_problem.rfind("HTTP ", 0) == 0) return {-1, last_problem};
        throw NetworkError(fmt::format("endpoint {} unreachable after {} attempts: {}", options.endpoint,
                                       options.max_retries + 1, last_problem));
    };

    auto worker = [&] {
        httplib::Client client(endpoint.origin);
        client.set_connection_timeout(options.timeout);
        client.set_read_timeout(options.timeout);
        client.set_follow_location(true);
        try {
            for (auto i = next++; i < unique.size() && !abort; i = next++) {
                const auto& doi = unique[i];
                if (!is_well_formed_doi(doi)) {
                    outcomes[i].failure = failure(doi, HarvestFailureKind::malformed_doi, "does not look like 10.NNNN/suffix");
                    continue;
                }
                std::optional<Response> response;
                std::filesystem::path entry;
                if (options.cache_dir) {
                    entry = cache_path(*options.cache_dir, doi);
                    response = cache_load(entry);
                    if (response) ++cache_hits;
                }
                if (!response) {
                    if (options.offline) throw NetworkError(fmt::format("offline: no cached response for {}", doi));
                    response = fetch(client, doi);
                    if (options.cache_dir && cacheable(response->status)) cache_store(entry, doi, *response);
                }
                if (response->status == 200) {
                    outcomes[i] = parse_work(doi, response->body, options.field_label);
                } else if (response->status == 404 || response->status == 410) {
                    outcomes[i].failure = failure(doi, HarvestFailureKind::not_found, fmt::format("HTTP {}", response->status));
                } else if (response->status == 400) {
                    outcomes[i].failure = failure(doi, HarvestFailureKind::malformed_doi, "HTTP 400");
                } else if (response->status == -1) {
                    outcomes[i].failure = failure(doi, HarvestFailureKind::server_error,
                                                  fmt::format("{} after retries", response->body));
                } else {
                    outcomes[i].failure = failure(doi, HarvestFailureKind::server_error, fmt::format("HTTP {}", response->status));
                }
            }
        } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
            abort = true;
        }
    };

    const auto workers = std::min<std::size_t>(static_cast<std::size_t>(options.concurrency), unique.size());
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);

    for (auto& o : outcomes) {
        if (o.record) result.records.push_back(std::move(*o.record));
        if (o.failure) result.failures.push_back(std::move(*o.failure));
    }
    result.cache_hits = cache_hits;
    result.requests = requests;
    return result;
}

}  // namespace refgrowth::corpus
