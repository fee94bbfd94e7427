#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace refgrowth::cli {

/// 64-bit FNV-1a, used to fingerprint inputs and outputs in manifests.
std::uint64_t fingerprint(std::string_view bytes);
std::string fingerprint_hex(std::string_view bytes);

/// Collects everything a run reads and writes, then emits manifest.json.
class RunContext {
public:
    RunContext(std::string command, std::vector<std::string> argv, std::filesystem::path out_dir);

    const std::string& command() const { return command_; }
    const std::filesystem::path& out_dir() const { return out_dir_; }

    /// Reads an input file and records its fingerprint.
    std::string read_input(const std::filesystem::path& path);
    /// Records an input that was read elsewhere (config references, caches).
    void note_input(const std::filesystem::path& path);
    /// Atomically writes out_dir/name and records it.
    void write_output(const std::string& name, std::string_view content);

    void set_config(nlohmann::ordered_json config) { config_ = std::move(config); }
    void set_seed(std::uint64_t seed) { seed_ = seed; }
    nlohmann::ordered_json& extra() { return extra_; }

    /// Writes manifest.json; call once after every output is written.
    void finish();

private:
    std::string command_;
    std::vector<std::string> argv_;
    std::filesystem::path out_dir_;
    nlohmann::ordered_json config_ = nlohmann::ordered_json::object();
    nlohmann::ordered_json extra_ = nlohmann::ordered_json::object();
    std::optional<std::uint64_t> seed_;
    nlohmann::ordered_json inputs_ = nlohmann::ordered_json::array();
    nlohmann::ordered_json outputs_ = nlohmann::ordered_json::array();
};

std::string version();
std::string utc_timestamp();

}  // namespace refgrowth::cli
