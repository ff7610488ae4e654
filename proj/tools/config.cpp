#include "config.hpp"

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/core.h>

#include <charconv>
#include <fstream>
#include <map>
#include <set>

namespace qnet::cli {

namespace {

namespace pt = boost::property_tree;

// (section, key) -> line, and section -> line of its header.
struct LineIndex {
    std::map<std::pair<std::string, std::string>, int> keys;
    std::map<std::string, int> sections;
};

LineIndex index_lines(const std::string& path) {
    LineIndex idx;
    std::ifstream in(path);
    std::string line, section;
    for (int n = 1; std::getline(in, line); ++n) {
        const std::string t = boost::trim_copy(line);
        if (t.empty() || t[0] == ';' || t[0] == '#') continue;
        if (t.front() == '[' && t.back() == ']') {
            section = boost::trim_copy(t.substr(1, t.size() - 2));
            idx.sections.emplace(section, n);
        } else if (auto eq = t.find('='); eq != std::string::npos) {
            idx.keys.emplace(std::make_pair(section, boost::trim_copy(t.substr(0, eq))), n);
        }
    }
    return idx;
}

class Reader {
public:
    Reader(const std::string& path, const LineIndex& idx) : path_(path), idx_(idx) {}

    [[noreturn]] void fail(const std::string& section, const std::string& key, const std::string& what) const {
        int line = 0;
        if (auto it = idx_.keys.find({section, key}); it != idx_.keys.end()) line = it->second;
        else if (auto s = idx_.sections.find(section); s != idx_.sections.end()) line = s->second;
        const std::string where = key.empty() ? fmt::format("[{}]", section) : fmt::format("[{}] {}", section, key);
        throw Error(ErrorKind::Configuration, line > 0 ? fmt::format("{}:{}: {}: {}", path_, line, where, what)
                                                       : fmt::format("{}: {}: {}", path_, where, what));
    }

    // Rejects keys outside the section's schema.
    void check_keys(const std::string& section, const pt::ptree& tree, const std::set<std::string>& allowed) const {
        for (const auto& [key, value] : tree) {
            (void)value;
            if (!allowed.count(key)) fail(section, key, "unknown key");
        }
    }

    double number(const std::string& section, const pt::ptree& tree, const std::string& key,
                  std::optional<double> fallback = std::nullopt) const {
        const auto raw = tree.get_optional<std::string>(key);
        if (!raw) {
            if (fallback) return *fallback;
            fail(section, key, "required key is missing");
        }
        return parse(section, key, *raw);
    }

    int integer(const std::string& section, const pt::ptree& tree, const std::string& key, int fallback) const {
        const auto raw = tree.get_optional<std::string>(key);
        if (!raw) return fallback;
        const std::string s = boost::trim_copy(*raw);
        int v = 0;
        const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || end != s.data() + s.size()) fail(section, key, "expected an integer, got '" + s + "'");
        return v;
    }

    bool flag(const std::string& section, const pt::ptree& tree, const std::string& key, bool fallback) const {
        const auto raw = tree.get_optional<std::string>(key);
        if (!raw) return fallback;
        const std::string s = boost::to_lower_copy(boost::trim_copy(*raw));
        if (s == "true" || s == "yes" || s == "1") return true;
        if (s == "false" || s == "no" || s == "0") return false;
        fail(section, key, "expected true or false, got '" + s + "'");
    }

    std::string text(const std::string& section, const pt::ptree& tree, const std::string& key) const {
        const auto raw = tree.get_optional<std::string>(key);
        if (!raw || boost::trim_copy(*raw).empty()) fail(section, key, "required key is missing");
        return boost::trim_copy(*raw);
    }

    // Whitespace-separated numbers.
    std::vector<double> list(const std::string& section, const pt::ptree& tree, const std::string& key,
                             bool required = true) const {
        const auto raw = tree.get_optional<std::string>(key);
        if (!raw) {
            if (required) fail(section, key, "required key is missing");
            return {};
        }
        std::vector<std::string> parts;
        const std::string s = boost::trim_copy(*raw);
        if (!s.empty()) boost::split(parts, s, boost::is_any_of(" \t,"), boost::token_compress_on);
        std::vector<double> out;
        for (const auto& p : parts) out.push_back(parse(section, key, p));
        return out;
    }

private:
    double parse(const std::string& section, const std::string& key, const std::string& raw) const {
        const std::string s = boost::trim_copy(raw);
        double v = 0.0;
        const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || end != s.data() + s.size() || !std::isfinite(v))
            fail(section, key, "expected a finite number, got '" + s + "'");
        return v;
    }

    std::string path_;
    const LineIndex& idx_;
};

Box parse_box(const Reader& r, const std::string& section, const std::string& key, const std::vector<double>& v,
              std::size_t at) {
    if (v.size() < at + 4) r.fail(section, key, "expected groups of x0 y0 x1 y1");
    return {v[at], v[at + 1], v[at + 2], v[at + 3]};
}

WellSpec parse_well(const Reader& r, const std::string& section, const std::string& id, const pt::ptree& t) {
    r.check_keys(section, t, {"type", "a", "b", "h", "mass", "potential", "obstacles", "patches"});
    WellSpec w;
    w.id = id;
    w.mass = r.number(section, t, "mass", 0.5);
    w.potential = r.number(section, t, "potential", 0.0);
    const std::string type = t.get<std::string>("type", "rectangle");
    const double a = r.number(section, t, "a"), b = r.number(section, t, "b");
    if (!(a > 0)) r.fail(section, "a", "must be positive");
    if (!(b > 0)) r.fail(section, "b", "must be positive");
    if (!(w.mass > 0)) r.fail(section, "mass", "must be positive");
    if (type == "rectangle") {
        for (const char* k : {"h", "obstacles", "patches"})
            if (t.count(k)) r.fail(section, k, "only grid wells take this key");
        w.geometry = RectGeometry{a, b};
    } else if (type == "grid") {
        GridGeometry g{a, b, r.number(section, t, "h"), {}, {}};
        if (!(g.h > 0)) r.fail(section, "h", "must be positive");
        const auto obs = r.list(section, t, "obstacles", false);
        if (obs.size() % 4) r.fail(section, "obstacles", "expected groups of x0 y0 x1 y1");
        for (std::size_t i = 0; i < obs.size(); i += 4) g.obstacles.push_back(parse_box(r, section, "obstacles", obs, i));
        const auto pat = r.list(section, t, "patches", false);
        if (pat.size() % 5) r.fail(section, "patches", "expected groups of x0 y0 x1 y1 potential");
        for (std::size_t i = 0; i < pat.size(); i += 5)
            g.patches.push_back({parse_box(r, section, "patches", pat, i), pat[i + 4]});
        w.geometry = g;
    } else {
        r.fail(section, "type", "expected rectangle or grid, got '" + type + "'");
    }
    return w;
}

WireSpec parse_wire(const Reader& r, const std::string& section, const std::string& id, const pt::ptree& t) {
    r.check_keys(section, t, {"well", "edge", "offset", "width", "potential", "mass_par", "mass_perp"});
    WireSpec w;
    w.id = id;
    w.width = r.number(section, t, "width", 1.0);
    w.potential = r.number(section, t, "potential", 0.0);
    w.mass_par = r.number(section, t, "mass_par", 0.5);
    w.mass_perp = r.number(section, t, "mass_perp", 0.5);
    Attachment at;
    at.well = r.text(section, t, "well");
    try {
        at.edge = edge_from_string(r.text(section, t, "edge"));
    } catch (const Error&) {
        r.fail(section, "edge", "expected left, right, bottom or top");
    }
    at.offset = r.number(section, t, "offset", 0.0);
    w.attachments.push_back(at);
    if (!(w.width > 0)) r.fail(section, "width", "must be positive");
    if (!(w.mass_par > 0)) r.fail(section, "mass_par", "must be positive");
    if (!(w.mass_perp > 0)) r.fail(section, "mass_perp", "must be positive");
    return w;
}

SyntheticData parse_synthetic(const Reader& r, const std::string& section, const pt::ptree& t) {
    r.check_keys(section, t, {"open_thresholds", "closed_thresholds", "eigenvalues", "traces"});
    SyntheticData s;
    s.open_thresholds = r.list(section, t, "open_thresholds");
    s.closed_thresholds = r.list(section, t, "closed_thresholds", false);
    s.eigenvalues = r.list(section, t, "eigenvalues");
    const auto flat = r.list(section, t, "traces");
    const std::size_t cols = s.open_thresholds.size() + s.closed_thresholds.size();
    if (s.open_thresholds.empty()) r.fail(section, "open_thresholds", "at least one open channel is needed");
    if (flat.size() != s.eigenvalues.size() * cols)
        r.fail(section, "traces",
               fmt::format("expected {} numbers (one row of {} per eigenvalue), got {}", s.eigenvalues.size() * cols,
                           cols, flat.size()));
    s.traces.resize(static_cast<Eigen::Index>(s.eigenvalues.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < flat.size(); ++i)
        s.traces(static_cast<Eigen::Index>(i / cols), static_cast<Eigen::Index>(i % cols)) = flat[i];
    return s;
}

JumpStartConfig parse_jump_start(const Reader& r, const std::string& section, const pt::ptree& t) {
    r.check_keys(section, t, {"beta", "levels", "weights", "level", "p_min", "p_max", "points"});
    JumpStartConfig j;
    j.beta = r.number(section, t, "beta");
    j.levels = r.list(section, t, "levels");
    j.weights = r.list(section, t, "weights");
    j.level = r.integer(section, t, "level", 0);
    j.p_min = r.number(section, t, "p_min", kUnset);
    j.p_max = r.number(section, t, "p_max", kUnset);
    j.points = r.integer(section, t, "points", 400);
    if (j.levels.empty()) r.fail(section, "levels", "at least one level is needed");
    if (j.weights.size() != j.levels.size()) r.fail(section, "weights", "needs one weight per level");
    for (double l : j.levels)
        if (!(l > 0)) r.fail(section, "levels", "levels must be positive");
    if (j.level < 0 || j.level >= static_cast<int>(j.levels.size())) r.fail(section, "level", "no such level");
    if (j.points < 2) r.fail(section, "points", "at least 2 points are needed");
    return j;
}

} // namespace

RunConfig load_config(const std::string& path) {
    pt::ptree tree;
    try {
        pt::read_ini(path, tree);
    } catch (const pt::ini_parser_error& e) {
        throw Error(ErrorKind::Configuration,
                    e.line() > 0 ? fmt::format("{}:{}: {}", path, e.line(), e.message()) : fmt::format("{}: {}", path, e.message()));
    }
    const LineIndex idx = index_lines(path);
    const Reader r(path, idx);
    RunConfig cfg;
    cfg.path = path;

    bool has_network = false;
    for (const auto& [name, section] : tree) {
        if (name == "network") {
            has_network = true;
            r.check_keys(name, section, {"fermi_level"});
            cfg.net.fermi_level = r.number(name, section, "fermi_level");
        } else if (boost::starts_with(name, "wells.")) {
            cfg.net.wells.push_back(parse_well(r, name, name.substr(6), section));
        } else if (boost::starts_with(name, "wires.")) {
            cfg.net.wires.push_back(parse_wire(r, name, name.substr(6), section));
        } else if (name == "synthetic") {
            cfg.synthetic = parse_synthetic(r, name, section);
        } else if (name == "jump_start") {
            cfg.jump_start = parse_jump_start(r, name, section);
        } else if (name == "run") {
            r.check_keys(name, section,
                         {"lambda_min", "lambda_max", "points", "lambda_cut", "s_max", "exact_background", "n_scan", "h",
                          "essential_center", "essential_half_width", "energy_origin", "svg"});
            cfg.lambda_min = r.number(name, section, "lambda_min", kUnset);
            cfg.lambda_max = r.number(name, section, "lambda_max", kUnset);
            cfg.points = r.integer(name, section, "points", 200);
            cfg.lambda_cut = r.number(name, section, "lambda_cut", kUnset);
            cfg.s_max = r.integer(name, section, "s_max", 0);
            cfg.exact_background = r.flag(name, section, "exact_background", true);
            cfg.n_scan = r.integer(name, section, "n_scan", 256);
            cfg.grid_h = r.number(name, section, "h", kUnset);
            cfg.essential_center = r.number(name, section, "essential_center", kUnset);
            cfg.essential_half_width = r.number(name, section, "essential_half_width", kUnset);
            cfg.energy_origin = r.number(name, section, "energy_origin", 0.0);
            cfg.svg = r.flag(name, section, "svg", true);
            if (cfg.points < 2) r.fail(name, "points", "at least 2 points are needed");
            if (cfg.s_max < 0) r.fail(name, "s_max", "must be non-negative (0 selects the default)");
            if (cfg.n_scan < 2) r.fail(name, "n_scan", "must be at least 2");
            if (!std::isnan(cfg.lambda_min) && !std::isnan(cfg.lambda_max) && !(cfg.lambda_min < cfg.lambda_max))
                r.fail(name, "lambda_max", "empty sweep range: lambda_max must exceed lambda_min");
            if (!std::isnan(cfg.grid_h) && !(cfg.grid_h > 0)) r.fail(name, "h", "must be positive");
        } else {
            r.fail(name, "", "unknown section");
        }
    }
    if (!has_network && !cfg.jump_start) r.fail("network", "", "missing section");
    if (cfg.synthetic && (!cfg.net.wells.empty() || !cfg.net.wires.empty()))
        r.fail("synthetic", "", "cannot be combined with [wells.*] or [wires.*]");
    if (has_network && !cfg.synthetic) {
        try {
            validate(cfg.net);
        } catch (const Error& e) {
            throw Error(ErrorKind::Configuration, fmt::format("{}: {}", path, e.what()));
        }
    }
    return cfg;
}

} // namespace qnet::cli
