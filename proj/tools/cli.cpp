#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <ostream>
#include <set>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "commands.hpp"
#include "refgrowth/csv.hpp"
#include "refgrowth/error.hpp"
#include "run_context.hpp"

namespace refgrowth::cli {
namespace {

using ojson = nlohmann::ordered_json;

// Arguments as typed, minus --out, so a replay can choose its own directory.
std::vector<std::string> strip_out(const std::vector<std::string>& args) {
    std::vector<std::string> kept;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--out") {
            ++i;
            continue;
        }
        if (args[i].rfind("--out=", 0) == 0) continue;
        kept.push_back(args[i]);
    }
    return kept;
}

void print_error(std::ostream& err, std::string_view category, int code, std::string_view message) {
    ojson j;
    j["error"] = {{"category", category}, {"exit_code", code}, {"message", message}};
    err << j.dump() << "\n";
}

class CurrentDirectory {
public:
    explicit CurrentDirectory(const std::filesystem::path& dir) : saved_(std::filesystem::current_path()) {
        std::error_code ec;
        std::filesystem::current_path(dir, ec);
        if (ec) throw IoError(fmt::format("cannot enter recorded working directory '{}': {}", dir.string(), ec.message()));
    }
    ~CurrentDirectory() {
        std::error_code ec;
        std::filesystem::current_path(saved_, ec);
    }

private:
    std::filesystem::path saved_;
};

int dispatch(const std::vector<std::string>& args, std::ostream& out);

void replay(const std::filesystem::path& manifest_path, const std::filesystem::path& out_dir, std::ostream& out) {
    const auto m = ojson::parse(csv::read_file(manifest_path), nullptr, false);
    if (m.is_discarded() || !m.is_object() || !m.contains("command") || !m.contains("argv")) {
        throw DataQualityError(fmt::format("{}: not a run manifest", manifest_path.string()));
    }
    const auto command = m["command"].get<std::string>();
    if (command == "replay") throw ConfigError("replay: the manifest is itself a replay");

    for (const auto& input : m.value("inputs", ojson::array())) {
        if (!input.contains("fnv1a64")) continue;
        const auto path = input["path"].get<std::string>();
        const auto now = fingerprint_hex(csv::read_file(path));
        if (now != input["fnv1a64"].get<std::string>()) {
            throw DataQualityError(fmt::format("replay: input '{}' changed since the recorded run", path));
        }
    }

    std::vector<std::string> args{command};
    for (const auto& a : m["argv"]) args.push_back(a.get<std::string>());
    if (command == "harvest") {
        if (std::find(args.begin(), args.end(), "--offline") == args.end()) args.push_back("--offline");
        const auto& cfg = m["config"];
        const bool has_cache = std::find(args.begin(), args.end(), "--cache") != args.end();
        if (!has_cache && cfg.contains("cache_dir") && cfg["cache_dir"].is_string()) {
            args.push_back("--cache");
            args.push_back(cfg["cache_dir"].get<std::string>());
        }
    }
    const auto target = std::filesystem::absolute(out_dir);
    args.push_back("--out");
    args.push_back(target.string());
    {
        CurrentDirectory cd(m.value("cwd", std::filesystem::current_path().string()));
        dispatch(args, out);
    }

    std::vector<std::string> mismatched;
    std::size_t compared = 0;
    for (const auto& o : m["outputs"]) {
        const auto name = o["file"].get<std::string>();
        const auto now = fingerprint_hex(csv::read_file(target / name));
        ++compared;
        if (now != o["fnv1a64"].get<std::string>()) mismatched.push_back(name);
    }
    if (!mismatched.empty()) {
        std::string list;
        for (const auto& n : mismatched) list += (list.empty() ? "" : ", ") + n;
        throw DataQualityError(fmt::format("replay: outputs differ from the recorded run: {}", list));
    }
    out << fmt::format("replay: {} outputs identical to the recorded run\n", compared);
}

int dispatch(const std::vector<std::string>& args, std::ostream& out) {
    CLI::App app{"refgrowth: reference-list growth under the Bernoulli citation model"};
    app.require_subcommand(1);
    app.set_version_flag("--version", version());
    app.footer(
        "Options resolve as: command-line flag, then the --config file, then the built-in default.\n"
        "Every command writes its outputs and a manifest.json into --out.");

    Registry registry;
    register_commands(app, registry);

    std::string manifest, replay_out;
    auto* rp = app.add_subcommand("replay", "Rerun a recorded command from its manifest and verify the outputs");
    rp->add_option("--manifest", manifest, "manifest.json of the run to repeat")->required();
    rp->add_option("--out", replay_out, "Directory for the repeated outputs")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, out);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, out);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e, out, out);
    }

    if (rp->parsed()) {
        replay(manifest, replay_out, out);
        return 0;
    }
    for (auto& entry : registry) {
        if (!entry.app->parsed()) continue;
        RunContext ctx(entry.app->get_name(), strip_out({args.begin() + 1, args.end()}), entry.out_dir());
        entry.run(ctx, out);
        ctx.finish();
        return 0;
    }
    throw ConfigError("no command given");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    try {
        return dispatch(args, out);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return 0;
        print_error(err, to_string(ErrorCategory::config), exit_code(ErrorCategory::config), e.what());
        return exit_code(ErrorCategory::config);
    } catch (const Error& e) {
        print_error(err, to_string(e.category()), exit_code(e.category()), e.what());
        return exit_code(e.category());
    } catch (const std::exception& e) {
        print_error(err, "internal", 1, e.what());
        return 1;
    }
}

}  // namespace refgrowth::cli
