#include "doctest.h"

#include "commands.hpp"
#include "config.hpp"
#include "output.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

using namespace qnet;
using namespace qnet::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch() {
    const fs::path dir = fs::temp_directory_path() / "qnet_test_cli";
    fs::create_directories(dir);
    return dir;
}

fs::path write_ini(const std::string& name, const std::string& text) {
    const fs::path p = scratch() / name;
    std::ofstream(p) << text;
    return p;
}

const std::string kBox = "[network]\nfermi_level = 20\n"
                         "[wells.box]\ntype = rectangle\na = 2.0\nb = 1.5\n"
                         "[wires.in]\nwell = box\nedge = left\noffset = 0\nwidth = 1\n";

std::string config_error(const std::string& text) {
    try {
        load_config(write_ini("bad.ini", text).string());
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Configuration);
        return e.what();
    }
    return "";
}

int run_binary(const std::string& args) {
    const std::string cmd = std::string(QNET_BINARY) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

} // namespace

TEST_CASE("sample configs load") {
    const RunConfig cfg = load_config(std::string(QNET_CONFIG_DIR) + "/offset_two_wire.ini");
    CHECK(cfg.net.wells.size() == 1);
    CHECK(cfg.net.wires.size() == 2);
    CHECK(cfg.net.fermi_level == 20.0);
    CHECK(cfg.points == 200);
    const RunConfig syn = load_config(std::string(QNET_CONFIG_DIR) + "/scalar_demo.ini");
    REQUIRE(syn.synthetic);
    CHECK(syn.synthetic->traces.rows() == 1);
    CHECK(syn.synthetic->traces.cols() == 2);
    const RunConfig js = load_config(std::string(QNET_CONFIG_DIR) + "/jump_start.ini");
    REQUIRE(js.jump_start);
    CHECK(js.jump_start->levels.size() == 3);
}

TEST_CASE("config errors name the file, line, section and key") {
    const std::string unknown = config_error(kBox + "colour = blue\n");
    CHECK(unknown.find("bad.ini:12") != std::string::npos);
    CHECK(unknown.find("[wires.in] colour: unknown key") != std::string::npos);
    CHECK(config_error(kBox + "[run]\npoints = many\n").find("expected an integer") != std::string::npos);
    CHECK(config_error(kBox + "[run]\nlambda_min = 30\nlambda_max = 20\n").find("empty sweep range") !=
          std::string::npos);
    CHECK(config_error("[network]\nfermi_level = 20\n[wires.w]\nwell = nowhere\nedge = left\nwidth = 1\n") != "");
    CHECK(config_error(kBox + "[wells.box2]\ntype = circle\na = 1\nb = 1\n").find("expected rectangle or grid") !=
          std::string::npos);
    CHECK(config_error("[run]\npoints = 10\n").find("[network]") != std::string::npos);
}

TEST_CASE("sweep outside the guarded band is a configuration error") {
    const RunConfig cfg = load_config(write_ini("outside.ini", kBox + "[run]\nlambda_min = 5\nlambda_max = 15\n").string());
    Warnings w;
    try {
        run_command("scatter", cfg, RunContext{scratch(), 1, 0}, w);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Configuration);
        CHECK(std::string(e.what()).find("lambda_min") != std::string::npos);
    }
}

TEST_CASE("exit codes") {
    const fs::path good = std::string(QNET_CONFIG_DIR) + "/scalar_demo.ini";
    const fs::path out = scratch() / "run";
    CHECK(run_binary("--config " + good.string() + " --command scatter --out " + out.string()) == 0);
    CHECK(fs::exists(out / "scatter.csv"));
    CHECK(fs::exists(out / "scatter.svg"));
    const fs::path bad = write_ini("unknown.ini", kBox + "colour = blue\n");
    CHECK(run_binary("--config " + bad.string() + " --command scatter --out " + out.string()) == 2);
    const fs::path empty = write_ini("outside.ini", kBox + "[run]\nlambda_min = 5\nlambda_max = 15\n");
    CHECK(run_binary("--config " + empty.string() + " --command scatter --out " + out.string()) == 2);
    CHECK(run_binary("--config " + good.string() + " --command nonsense") != 0);
    CHECK(run_binary("--config /nonexistent.ini --command scatter") != 0);
}

TEST_CASE("JSON keeps 17 significant digits and writes non-finite values as null") {
    nlohmann::ordered_json j;
    j["x"] = 0.1;
    j["bad"] = std::nan("");
    j["list"] = {1.0, 2.5};
    const std::string s = dump_json(j);
    CHECK(s.find("0.10000000000000001") != std::string::npos);
    CHECK(s.find("\"bad\": null") != std::string::npos);
    CHECK(s.find("[1, 2.5]") != std::string::npos);
    CHECK(nlohmann::json::parse(s)["x"].get<double>() == 0.1);
}

TEST_CASE("CSV rows must match the header") {
    CsvTable t({"a", "b"});
    t.add({1.0, 0.1});
    CHECK(t.str() == "a,b\n1,0.10000000000000001\n");
    CHECK_THROWS_AS(t.add({1.0}), Error);
}

TEST_CASE("SVG plot carries one polyline per series") {
    const std::string svg = svg_plot({0.0, 1.0, 2.0}, {{"one", {0.0, 1.0, 0.5}}, {"two", {1.0, 0.0, 0.2}}}, "x", "y");
    CHECK(svg.rfind("<svg", 0) == 0);
    std::size_t count = 0;
    for (auto pos = svg.find("<polyline"); pos != std::string::npos; pos = svg.find("<polyline", pos + 1)) ++count;
    CHECK(count == 2);
}
