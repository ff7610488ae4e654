#include "commands.hpp"
#include "config.hpp"

#include "CLI11.hpp"

#include <fmt/core.h>

#include <filesystem>

int main(int argc, char** argv) {
    using namespace qnet::cli;
    CLI::App app{"qnet: scattering on quantum networks of wells and semi-infinite wires"};
    std::string config, command, out = ".";
    int threads = 1;
    unsigned long seed = 0;
    app.add_option("--config", config, "network description (INI)")->required()->check(CLI::ExistingFile);
    app.add_option("--command", command, "what to compute")->required()->check(CLI::IsMember(command_names()));
    app.add_option("--out", out, "output directory (created if missing)");
    app.add_option("--threads", threads, "worker threads for sweeps")->check(CLI::PositiveNumber);
    app.add_option("--seed", seed, "seed recorded for randomized checks");
    CLI11_PARSE(app, argc, argv);

    try {
        const RunConfig cfg = load_config(config);
        if (command != "jump-start" && cfg.net.wells.empty() && !cfg.synthetic)
            throw qnet::Error(qnet::ErrorKind::Configuration, config + ": no [wells.*] or [synthetic] section for '" + command + "'");
        std::filesystem::create_directories(out);
        qnet::Warnings warnings;
        const auto files = run_command(command, cfg, RunContext{out, threads, seed}, warnings);
        for (const auto& w : warnings) fmt::print(stderr, "warning: {}\n", w);
        for (const auto& f : files) fmt::print("{}\n", (std::filesystem::path(out) / f).string());
    } catch (const qnet::Error& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return e.kind() == qnet::ErrorKind::Configuration ? 2 : 1;
    } catch (const std::exception& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return 1;
    }
    return 0;
}
