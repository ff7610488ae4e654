#pragma once

#include "qnet/network.hpp"
#include "qnet/well_spectra.hpp"

#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace qnet::cli {

constexpr double kUnset = std::numeric_limits<double>::quiet_NaN();

// Hand-specified channels and L0 data, for demonstrations that bypass the
// geometry: prefactors are 1 and every channel has mass 1/2.
struct SyntheticData {
    std::vector<double> open_thresholds;
    std::vector<double> closed_thresholds;
    std::vector<double> eigenvalues;
    Mat traces; // eigenvalues x (open + closed)
};

struct JumpStartConfig {
    double beta = 0.1;
    std::vector<double> levels;
    std::vector<double> weights;
    int level = 0;
    double p_min = kUnset, p_max = kUnset;
    int points = 400;
};

struct RunConfig {
    std::string path;
    NetworkSpec net;
    std::optional<SyntheticData> synthetic;

    double lambda_min = kUnset, lambda_max = kUnset; // default: guarded band
    int points = 200;
    double lambda_cut = kUnset;
    int s_max = 0;
    bool exact_background = true;
    int n_scan = 256;
    double grid_h = kUnset;             // oracle grid step, default wire width / 16
    double essential_center = kUnset;   // default: band centre
    double essential_half_width = kUnset; // default: 0.4 band width
    double energy_origin = 0.0;
    bool svg = true;

    std::optional<JumpStartConfig> jump_start;
};

// Reads the INI-style network description. Errors are qnet::Error of kind
// Configuration with messages of the form "file:line: [section] key: problem".
RunConfig load_config(const std::string& path);

} // namespace qnet::cli
