#include "run_context.hpp"

#include <chrono>
#include <ctime>

#include <fmt/chrono.h>
#include <fmt/format.h>

#include "refgrowth/csv.hpp"
#include "refgrowth/error.hpp"

#ifndef REFGROWTH_VERSION
#define REFGROWTH_VERSION "0.0.0"
#endif

namespace refgrowth::cli {

std::uint64_t fingerprint(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string fingerprint_hex(std::string_view bytes) { return fmt::format("{:016x}", fingerprint(bytes)); }

std::string version() { return REFGROWTH_VERSION; }

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(now));
}

RunContext::RunContext(std::string command, std::vector<std::string> argv, std::filesystem::path out_dir)
    : command_(std::move(command)), argv_(std::move(argv)), out_dir_(std::move(out_dir)) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir_, ec);
    if (ec) throw IoError(fmt::format("cannot create output directory '{}': {}", out_dir_.string(), ec.message()));
}

std::string RunContext::read_input(const std::filesystem::path& path) {
    auto text = csv::read_file(path);
    inputs_.push_back({{"path", std::filesystem::absolute(path).lexically_normal().string()},
                       {"bytes", text.size()},
                       {"fnv1a64", fingerprint_hex(text)}});
    return text;
}

void RunContext::note_input(const std::filesystem::path& path) {
    std::error_code ec;
    if (std::filesystem::is_regular_file(path, ec)) {
        read_input(path);
    } else {
        inputs_.push_back({{"path", std::filesystem::absolute(path).lexically_normal().string()}});
    }
}

void RunContext::write_output(const std::string& name, std::string_view content) {
    csv::write_file_atomic(out_dir_ / name, content);
    outputs_.push_back({{"file", name}, {"bytes", content.size()}, {"fnv1a64", fingerprint_hex(content)}});
}

void RunContext::finish() {
    nlohmann::ordered_json m;
    m["command"] = command_;
    m["argv"] = argv_;
    m["cwd"] = std::filesystem::current_path().string();
    m["config"] = config_;
    m["seed"] = seed_ ? nlohmann::ordered_json(*seed_) : nlohmann::ordered_json(nullptr);
    m["inputs"] = inputs_;
    m["outputs"] = outputs_;
    for (const auto& [k, v] : extra_.items()) m[k] = v;
    m["version"] = version();
    m["timestamp"] = utc_timestamp();
    csv::write_file_atomic(out_dir_ / "manifest.json", m.dump(2) + "\n");
}

}  // namespace refgrowth::cli
