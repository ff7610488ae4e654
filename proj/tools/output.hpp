#pragma once

#include "json.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace qnet::cli {

// Number formatting shared by every artifact: 17 significant digits.
std::string num(double x);

// JSON text with every floating-point value in 17-digit form, two-space indent.
std::string dump_json(const nlohmann::ordered_json& j);

// Comma-separated table with a mandatory header row.
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}
    void add(const std::vector<double>& row);
    std::string str() const;

private:
    std::vector<std::string> header_;
    std::vector<std::vector<double>> rows_;
};

struct Series {
    std::string label;
    std::vector<double> y;
};

// Plain polyline plot with axis ticks.
std::string svg_plot(const std::vector<double>& x, const std::vector<Series>& series, const std::string& x_label,
                     const std::string& y_label);

void write_file(const std::filesystem::path& path, const std::string& content);

} // namespace qnet::cli
