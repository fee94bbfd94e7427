#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <list>
#include <string>

#include <CLI11.hpp>

#include "run_context.hpp"

namespace refgrowth::cli {

struct CommandEntry {
    CLI::App* app = nullptr;
    std::string out;
    std::function<void(RunContext&, std::ostream&)> run;

    std::filesystem::path out_dir() const { return out; }
};

// std::list keeps entry addresses stable while CLI11 binds to them.
using Registry = std::list<CommandEntry>;

void register_commands(CLI::App& app, Registry& registry);

}  // namespace refgrowth::cli
