#include "output.hpp"

#include "qnet/common.hpp"

#include <fmt/core.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

namespace qnet::cli {

std::string num(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    return fmt::format("{:.17g}", x);
}

namespace {

void dump(const nlohmann::ordered_json& j, std::string& out, int depth) {
    const std::string pad(static_cast<std::size_t>(2 * (depth + 1)), ' ');
    const std::string close(static_cast<std::size_t>(2 * depth), ' ');
    switch (j.type()) {
    case nlohmann::json::value_t::object: {
        if (j.empty()) {
            out += "{}";
            return;
        }
        out += "{\n";
        bool first = true;
        for (const auto& [key, value] : j.items()) {
            if (!first) out += ",\n";
            first = false;
            out += pad + nlohmann::ordered_json(key).dump() + ": ";
            dump(value, out, depth + 1);
        }
        out += "\n" + close + "}";
        return;
    }
    case nlohmann::json::value_t::array: {
        if (j.empty()) {
            out += "[]";
            return;
        }
        // Arrays of plain numbers stay on one line.
        const bool flat = std::all_of(j.begin(), j.end(), [](const auto& v) { return v.is_number(); });
        out += flat ? "[" : "[\n";
        bool first = true;
        for (const auto& value : j) {
            if (!first) out += flat ? ", " : ",\n";
            first = false;
            if (!flat) out += pad;
            dump(value, out, depth + 1);
        }
        out += flat ? "]" : "\n" + close + "]";
        return;
    }
    case nlohmann::json::value_t::number_float: {
        const double x = j.get<double>();
        out += std::isfinite(x) ? fmt::format("{:.17g}", x) : "null";
        return;
    }
    default:
        out += j.dump();
    }
}

double nice_step(double span, int target) {
    const double raw = span / target;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    for (double m : {1.0, 2.0, 5.0, 10.0})
        if (m * mag >= raw) return m * mag;
    return 10.0 * mag;
}

} // namespace

std::string dump_json(const nlohmann::ordered_json& j) {
    std::string out;
    dump(j, out, 0);
    out += "\n";
    return out;
}

void CsvTable::add(const std::vector<double>& row) {
    if (row.size() != header_.size())
        throw Error(ErrorKind::Io, fmt::format("CSV row has {} fields, header has {}", row.size(), header_.size()));
    rows_.push_back(row);
}

std::string CsvTable::str() const {
    std::string out;
    for (std::size_t i = 0; i < header_.size(); ++i) out += (i ? "," : "") + header_[i];
    out += "\n";
    for (const auto& row : rows_) {
        for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + num(row[i]);
        out += "\n";
    }
    return out;
}

std::string svg_plot(const std::vector<double>& x, const std::vector<Series>& series, const std::string& x_label,
                     const std::string& y_label) {
    const double width = 720, height = 440, left = 70, right = 20, top = 20, bottom = 60;
    const double pw = width - left - right, ph = height - top - bottom;
    double xlo = x.empty() ? 0.0 : x.front(), xhi = x.empty() ? 1.0 : x.back();
    double ylo = std::numeric_limits<double>::infinity(), yhi = -ylo;
    for (const auto& s : series)
        for (double v : s.y)
            if (std::isfinite(v)) {
                ylo = std::min(ylo, v);
                yhi = std::max(yhi, v);
            }
    if (!(ylo < yhi)) {
        ylo = std::isfinite(ylo) ? ylo - 0.5 : 0.0;
        yhi = ylo + 1.0;
    }
    if (!(xlo < xhi)) xhi = xlo + 1.0;
    auto px = [&](double v) { return left + (v - xlo) / (xhi - xlo) * pw; };
    auto py = [&](double v) { return top + (1.0 - (v - ylo) / (yhi - ylo)) * ph; };

    std::string out = fmt::format("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" "
                                  "font-family=\"sans-serif\" font-size=\"12\">\n",
                                  width, height);
    out += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n", left,
                       top, pw, ph);
    const double xs = nice_step(xhi - xlo, 8), ys = nice_step(yhi - ylo, 6);
    for (double t = std::ceil(xlo / xs) * xs; t <= xhi + 1e-9 * xs; t += xs)
        out += fmt::format("<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{0:.2f}\" y2=\"{2:.2f}\" stroke=\"black\"/>"
                           "<text x=\"{0:.2f}\" y=\"{3:.2f}\" text-anchor=\"middle\">{4:.6g}</text>\n",
                           px(t), top + ph, top + ph + 5, top + ph + 18, t);
    for (double t = std::ceil(ylo / ys) * ys; t <= yhi + 1e-9 * ys; t += ys)
        out += fmt::format("<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{2:.2f}\" y2=\"{1:.2f}\" stroke=\"black\"/>"
                           "<text x=\"{3:.2f}\" y=\"{4:.2f}\" text-anchor=\"end\">{5:.6g}</text>\n",
                           left - 5, py(t), left, left - 8, py(t) + 4, t);
    out += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">{}</text>\n", left + pw / 2, height - 15,
                       x_label);
    out += fmt::format("<text x=\"15\" y=\"{:.2f}\" text-anchor=\"middle\" transform=\"rotate(-90 15 {:.2f})\">{}</text>\n",
                       top + ph / 2, top + ph / 2, y_label);
    const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
    for (std::size_t k = 0; k < series.size(); ++k) {
        std::string pts;
        for (std::size_t i = 0; i < x.size() && i < series[k].y.size(); ++i)
            if (std::isfinite(series[k].y[i])) pts += fmt::format("{:.2f},{:.2f} ", px(x[i]), py(series[k].y[i]));
        const char* c = colors[k % 6];
        out += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>\n", c, pts);
        out += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" fill=\"{}\">{}</text>\n", left + pw - 90,
                           top + 16 + 14 * static_cast<double>(k), c, series[k].label);
    }
    out += "</svg>\n";
    return out;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
    out << content;
    if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

} // namespace qnet::cli
