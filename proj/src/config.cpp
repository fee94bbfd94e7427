#include "refgrowth/config.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "refgrowth/csv.hpp"
#include "refgrowth/error.hpp"

namespace refgrowth::config {
namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

nlohmann::ordered_json number_json(double v) {
    if (std::isfinite(v)) return v;
    return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
}

nlohmann::ordered_json numbers_json(const std::vector<double>& v) {
    auto arr = nlohmann::ordered_json::array();
    for (double x : v) arr.push_back(number_json(x));
    return arr;
}

// Two numeric columns with a header; returns the columns.
std::pair<std::vector<double>, std::vector<double>> two_columns(std::string_view text, std::string_view source) {
    const auto table = csv::parse(text, source);
    if (table.header.size() != 2) {
        throw ConfigError(fmt::format("{}: expected two columns, found {}", source, table.header.size()));
    }
    std::vector<double> a, b;
    for (const auto& row : table.rows) {
        const auto x = csv::parse_double(row.fields[0]);
        const auto y = csv::parse_double(row.fields[1]);
        if (!x || !y) throw ConfigError(fmt::format("malformed CSV at {}:{}: expected two numbers", source, row.line));
        a.push_back(*x);
        b.push_back(*y);
    }
    return {std::move(a), std::move(b)};
}

}  // namespace

Section::Section(std::string name, std::map<std::string, std::string> values, std::filesystem::path base_dir)
    : name_(std::move(name)), values_(std::move(values)), base_dir_(std::move(base_dir)) {}

std::optional<std::string> Section::text(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return it->second;
}

std::optional<double> Section::number(const std::string& key) const {
    const auto t = text(key);
    if (!t) return std::nullopt;
    const auto v = csv::parse_double(*t);
    if (!v) throw ConfigError(fmt::format("{}: expected a number, got '{}'", field(key), *t));
    return v;
}

std::optional<long long> Section::integer(const std::string& key) const {
    const auto t = text(key);
    if (!t) return std::nullopt;
    const auto v = csv::parse_integer(*t);
    if (!v) throw ConfigError(fmt::format("{}: expected an integer, got '{}'", field(key), *t));
    return v;
}

std::optional<bool> Section::boolean(const std::string& key) const {
    const auto t = text(key);
    if (!t) return std::nullopt;
    const auto v = lower(csv::trim(*t));
    if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v == "0" || v == "false" || v == "no" || v == "off") return false;
    throw ConfigError(fmt::format("{}: expected true or false, got '{}'", field(key), *t));
}

std::optional<std::vector<double>> Section::numbers(const std::string& key) const {
    const auto t = text(key);
    if (!t) return std::nullopt;
    std::vector<double> out;
    std::string_view rest = *t;
    while (true) {
        const auto cut = rest.find(',');
        const auto item = csv::trim(rest.substr(0, cut));
        const auto v = csv::parse_double(item);
        if (!v) throw ConfigError(fmt::format("{}: '{}' is not a number", field(key), item));
        out.push_back(*v);
        if (cut == std::string_view::npos) break;
        rest.remove_prefix(cut + 1);
    }
    return out;
}

std::optional<std::filesystem::path> Section::path(const std::string& key) const {
    const auto t = text(key);
    if (!t) return std::nullopt;
    std::filesystem::path p(std::string(csv::trim(*t)));
    if (p.empty()) throw ConfigError(fmt::format("{}: empty path", field(key)));
    return p.is_absolute() ? p : base_dir_ / p;
}

double Section::require_number(const std::string& key) const {
    const auto v = number(key);
    if (!v) throw ConfigError(fmt::format("{}: required", field(key)));
    return *v;
}

std::string Section::require_text(const std::string& key) const {
    const auto v = text(key);
    if (!v) throw ConfigError(fmt::format("{}: required", field(key)));
    return std::string(csv::trim(*v));
}

void Section::check_keys(std::initializer_list<std::string_view> allowed) const {
    for (const auto& [key, value] : values_) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw ConfigError(fmt::format("{}: unknown key", field(key)));
        }
    }
}

File File::load(const std::filesystem::path& path, std::string_view default_section) {
    const auto text = csv::read_file(path);
    auto dir = path.parent_path();
    if (dir.empty()) dir = ".";
    try {
        return parse(text, default_section, dir);
    } catch (const ConfigError& e) {
        throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
    }
}

File File::parse(std::string_view text, std::string_view default_section, std::filesystem::path base_dir) {
    boost::property_tree::ptree tree;
    std::istringstream in{std::string(text)};
    try {
        boost::property_tree::ini_parser::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(fmt::format("line {}: {}", e.line(), e.message()));
    }
    File file;
    std::map<std::string, std::map<std::string, std::string>> raw;
    for (const auto& [key, node] : tree) {
        if (node.empty()) {
            raw[std::string(default_section)][key] = std::string(csv::trim(node.data()));
        } else {
            auto& section = raw[key];
            for (const auto& [k, v] : node) {
                if (section.count(k)) throw ConfigError(fmt::format("{}.{}: given twice", key, k));
                section[k] = std::string(csv::trim(v.data()));
            }
        }
    }
    for (auto& [name, values] : raw) file.sections_.emplace(name, Section(name, std::move(values), base_dir));
    return file;
}

Section File::section(const std::string& name) const {
    const auto it = sections_.find(name);
    if (it == sections_.end()) return Section(name, {}, ".");
    return it->second;
}

void File::check_sections(std::initializer_list<std::string_view> allowed) const {
    for (const auto& [name, s] : sections_) {
        if (std::find(allowed.begin(), allowed.end(), name) == allowed.end()) {
            throw ConfigError(fmt::format("[{}]: unknown section", name));
        }
    }
}

GrowthCurve growth_from_section(const Section& s) {
    const auto variant = lower(s.require_text("variant"));
    if (variant == "linear") {
        s.check_keys({"variant", "t0", "rate", "start_count"});
        return GrowthCurve::linear(s.require_number("t0"), s.require_number("rate"), s.number("start_count").value_or(0.0));
    }
    if (variant == "polynomial") {
        s.check_keys({"variant", "t0", "coefficients"});
        const auto c = s.numbers("coefficients");
        if (!c) throw ConfigError(fmt::format("{}.coefficients: required", s.name()));
        return GrowthCurve::polynomial(s.require_number("t0"), *c);
    }
    if (variant == "exponential") {
        s.check_keys({"variant", "t0", "scale", "rate"});
        return GrowthCurve::exponential(s.require_number("scale"), s.require_number("rate"),
                                        s.number("t0").value_or(-std::numeric_limits<double>::infinity()));
    }
    if (variant == "tabulated") {
        s.check_keys({"variant", "t0", "file", "years", "counts"});
        const auto t0 = s.number("t0");
        if (const auto file = s.path("file")) {
            if (s.has("years") || s.has("counts")) {
                throw ConfigError(fmt::format("{}.file: give either a file or years/counts, not both", s.name()));
            }
            return growth_from_csv(csv::read_file(*file), file->string(), t0);
        }
        const auto years = s.numbers("years"), counts = s.numbers("counts");
        if (!years) throw ConfigError(fmt::format("{}.years: required (or file)", s.name()));
        if (!counts) throw ConfigError(fmt::format("{}.counts: required (or file)", s.name()));
        return GrowthCurve::tabulated(*years, *counts, t0);
    }
    throw ConfigError(fmt::format("{}.variant: unknown growth variant '{}'", s.name(), variant));
}

CitabilityFunction kernel_from_section(const Section& s) {
    const auto variant = lower(s.require_text("variant"));
    if (variant == "constant") {
        s.check_keys({"variant", "q"});
        return CitabilityFunction::constant(s.require_number("q"));
    }
    if (variant == "exponential_decay") {
        s.check_keys({"variant", "q0", "decay"});
        return CitabilityFunction::exponential_decay(s.require_number("q0"), s.require_number("decay"));
    }
    if (variant == "tabulated") {
        s.check_keys({"variant", "file", "ages", "probabilities"});
        if (const auto file = s.path("file")) {
            auto [ages, probs] = two_columns(csv::read_file(*file), file->string());
            return CitabilityFunction::tabulated(std::move(ages), std::move(probs));
        }
        const auto ages = s.numbers("ages"), probs = s.numbers("probabilities");
        if (!ages) throw ConfigError(fmt::format("{}.ages: required (or file)", s.name()));
        if (!probs) throw ConfigError(fmt::format("{}.probabilities: required (or file)", s.name()));
        return CitabilityFunction::tabulated(*ages, *probs);
    }
    throw ConfigError(fmt::format("{}.variant: unknown kernel variant '{}'", s.name(), variant));
}

GrowthCurve growth_from_csv(std::string_view text, std::string_view source, std::optional<double> t0) {
    auto [years, counts] = two_columns(text, source);
    return GrowthCurve::tabulated(std::move(years), std::move(counts), t0);
}

GrowthCurve load_growth(const std::filesystem::path& path) {
    if (lower(path.extension().string()) == ".csv") return growth_from_csv(csv::read_file(path), path.string());
    const auto file = File::load(path, "growth");
    if (!file.has_section("growth")) throw ConfigError(fmt::format("{}: no growth curve ([growth] or top-level keys)", path.string()));
    try {
        return growth_from_section(file.section("growth"));
    } catch (const ConfigError& e) {
        throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
    }
}

CitabilityFunction load_kernel(const std::filesystem::path& path) {
    const auto file = File::load(path, "kernel");
    if (!file.has_section("kernel")) throw ConfigError(fmt::format("{}: no kernel ([kernel] or top-level keys)", path.string()));
    try {
        return kernel_from_section(file.section("kernel"));
    } catch (const ConfigError& e) {
        throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
    }
}

montecarlo::SimulationConfig simulation_from_file(const File& file) {
    file.check_sections({"growth", "kernel", "simulation", "predict"});
    const auto sim = file.section("simulation");
    sim.check_keys({"growth_file", "kernel_file", "t0", "t_end", "dt", "seed", "replications", "sampling_mode",
                    "pair_budget", "threads", "field"});

    auto pick_growth = [&] {
        const auto ref = sim.path("growth_file");
        if (ref && file.has_section("growth")) {
            throw ConfigError("simulation.growth_file: conflicts with an inline [growth] section");
        }
        if (ref) return load_growth(*ref);
        if (!file.has_section("growth")) throw ConfigError("growth: missing [growth] section or simulation.growth_file");
        return growth_from_section(file.section("growth"));
    };
    auto pick_kernel = [&] {
        const auto ref = sim.path("kernel_file");
        if (ref && file.has_section("kernel")) {
            throw ConfigError("simulation.kernel_file: conflicts with an inline [kernel] section");
        }
        if (ref) return load_kernel(*ref);
        if (!file.has_section("kernel")) throw ConfigError("kernel: missing [kernel] section or simulation.kernel_file");
        return kernel_from_section(file.section("kernel"));
    };

    auto growth = pick_growth();
    auto kernel = pick_kernel();
    double t0 = 0.0;
    if (const auto v = sim.number("t0")) {
        t0 = *v;
    } else if (growth.has_finite_origin()) {
        t0 = growth.t0();
    } else {
        throw ConfigError("simulation.t0: required when the growth curve has no finite origin");
    }
    montecarlo::SimulationConfig cfg{.growth = std::move(growth), .kernel = std::move(kernel), .t0 = t0,
                                     .t_end = sim.require_number("t_end")};
    cfg.dt = sim.number("dt").value_or(cfg.dt);
    if (const auto v = sim.integer("seed")) {
        if (*v < 0) throw ConfigError("simulation.seed: must be >= 0");
        cfg.seed = static_cast<std::uint64_t>(*v);
    }
    if (const auto v = sim.integer("replications")) cfg.replications = static_cast<int>(*v);
    if (const auto v = sim.text("sampling_mode")) cfg.sampling_mode = montecarlo::parse_sampling_mode(csv::trim(*v));
    if (const auto v = sim.integer("pair_budget")) {
        if (*v < 1) throw ConfigError("simulation.pair_budget: must be >= 1");
        cfg.pair_budget = static_cast<std::uint64_t>(*v);
    }
    if (const auto v = sim.integer("threads")) {
        if (*v < 0) throw ConfigError("simulation.threads: must be >= 0");
        cfg.threads = static_cast<unsigned>(*v);
    }
    return cfg;
}

nlohmann::ordered_json describe(const GrowthCurve& growth) {
    nlohmann::ordered_json j;
    j["variant"] = growth.variant_name();
    j["t0"] = number_json(growth.t0());
    std::visit(
        [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, LinearGrowth>) {
                j["rate"] = v.rate;
                j["start_count"] = v.start_count;
            } else if constexpr (std::is_same_v<T, PolynomialGrowth>) {
                j["coefficients"] = numbers_json(v.coefficients);
            } else if constexpr (std::is_same_v<T, ExponentialGrowth>) {
                j["scale"] = v.scale;
                j["rate"] = v.rate;
            } else {
                j["years"] = numbers_json(v.years);
                j["counts"] = numbers_json(v.counts);
            }
        },
        growth.variant());
    return j;
}

nlohmann::ordered_json describe(const CitabilityFunction& kernel) {
    nlohmann::ordered_json j;
    j["variant"] = kernel.variant_name();
    std::visit(
        [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, ConstantKernel>) {
                j["q"] = v.q;
            } else if constexpr (std::is_same_v<T, ExponentialDecayKernel>) {
                j["q0"] = v.q0;
                j["decay"] = v.decay;
            } else {
                j["ages"] = numbers_json(v.ages);
                j["probabilities"] = numbers_json(v.probabilities);
            }
        },
        kernel.variant());
    return j;
}

nlohmann::ordered_json describe(const montecarlo::SimulationConfig& c) {
    nlohmann::ordered_json j;
    j["growth"] = describe(c.growth);
    j["kernel"] = describe(c.kernel);
    j["t0"] = number_json(c.t0);
    j["t_end"] = number_json(c.t_end);
    j["dt"] = c.dt;
    j["seed"] = c.seed;
    j["sampling_mode"] = montecarlo::to_string(c.sampling_mode);
    j["replications"] = c.replications;
    j["pair_budget"] = c.pair_budget;
    j["threads"] = c.threads;
    return j;
}

}  // namespace refgrowth::config
