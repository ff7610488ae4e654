#pragma once

#include "config.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace qnet::cli {

const std::vector<std::string>& command_names();

struct RunContext {
    std::filesystem::path out_dir;
    int threads = 1;
    unsigned long seed = 0;
};

// Runs one command and writes its artifacts into ctx.out_dir. Returns the
// written file names in order. Warnings are appended to `warnings`.
std::vector<std::string> run_command(const std::string& command, const RunConfig& cfg, const RunContext& ctx,
                                     Warnings& warnings);

} // namespace qnet::cli
