#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "refgrowth/citability.hpp"
#include "refgrowth/growth_curve.hpp"
#include "refgrowth/montecarlo.hpp"

// Declarative key-value configuration:
//
//   # growth curve
//   [growth]
//   variant = polynomial
//   t0 = 2006
//   coefficients = 0, 0, 35
//
// Keys outside any section belong to the section named by the caller, so a
// file holding a single growth curve needs no header. Errors are ConfigError
// and name the offending "section.key".
namespace refgrowth::config {

class Section {
public:
    Section() = default;
    Section(std::string name, std::map<std::string, std::string> values, std::filesystem::path base_dir);

    const std::string& name() const { return name_; }
    bool empty() const { return values_.empty(); }
    bool has(const std::string& key) const { return values_.count(key) != 0; }
    /// Directory relative file references resolve against.
    const std::filesystem::path& base_dir() const { return base_dir_; }

    std::optional<std::string> text(const std::string& key) const;
    std::optional<double> number(const std::string& key) const;
    std::optional<long long> integer(const std::string& key) const;
    std::optional<bool> boolean(const std::string& key) const;
    std::optional<std::vector<double>> numbers(const std::string& key) const;
    std::optional<std::filesystem::path> path(const std::string& key) const;

    double require_number(const std::string& key) const;
    std::string require_text(const std::string& key) const;

    /// ConfigError naming the first key not in `allowed`.
    void check_keys(std::initializer_list<std::string_view> allowed) const;

private:
    std::string field(const std::string& key) const { return name_ + "." + key; }

    std::string name_;
    std::map<std::string, std::string> values_;
    std::filesystem::path base_dir_;
};

class File {
public:
    /// Parses `path`; top-level keys go to `default_section`.
    static File load(const std::filesystem::path& path, std::string_view default_section);
    static File parse(std::string_view text, std::string_view default_section, std::filesystem::path base_dir = ".");

    /// An empty section when absent.
    Section section(const std::string& name) const;
    bool has_section(const std::string& name) const { return sections_.count(name) != 0; }
    void check_sections(std::initializer_list<std::string_view> allowed) const;

private:
    std::map<std::string, Section> sections_;
};

GrowthCurve growth_from_section(const Section& s);
CitabilityFunction kernel_from_section(const Section& s);

/// Two columns (year, cumulative_count) with a header.
GrowthCurve growth_from_csv(std::string_view text, std::string_view source, std::optional<double> t0 = std::nullopt);

/// A ".csv" file is a tabulated curve; anything else is a key-value file.
GrowthCurve load_growth(const std::filesystem::path& path);
CitabilityFunction load_kernel(const std::filesystem::path& path);

/// [growth], [kernel] (inline or via growth_file / kernel_file in
/// [simulation]) and the [simulation] keys t0, t_end, dt, seed,
/// replications, sampling_mode, pair_budget, threads.
montecarlo::SimulationConfig simulation_from_file(const File& file);

nlohmann::ordered_json describe(const GrowthCurve& growth);
nlohmann::ordered_json describe(const CitabilityFunction& kernel);
nlohmann::ordered_json describe(const montecarlo::SimulationConfig& config);

}  // namespace refgrowth::config
