#pragma once

#include "qnet/network.hpp"
#include "qnet/well_spectra.hpp"

#include <cmath>
#include <complex>
#include <string>
#include <vector>

namespace qnet::testing {

inline constexpr double kPi = 3.14159265358979323846;

inline WireSpec make_wire(const std::string& id, const std::string& well, Edge edge, double offset,
                          double width = 1.0, double potential = 0.0) {
    WireSpec w;
    w.id = id;
    w.width = width;
    w.potential = potential;
    w.attachments = {{well, edge, offset}};
    return w;
}

inline WellSpec rect_well(const std::string& id, double a, double b, double potential = 0.0) {
    WellSpec w;
    w.id = id;
    w.geometry = RectGeometry{a, b};
    w.potential = potential;
    return w;
}

// One rectangle with wires given as (edge, offset) pairs, all of width 1.
inline NetworkSpec rect_network(double a, double b, std::vector<std::pair<Edge, double>> wires, double fermi,
                                double well_potential = 0.0, double wire_width = 1.0) {
    NetworkSpec net;
    net.wells.push_back(rect_well("W", a, b, well_potential));
    int n = 0;
    for (const auto& [edge, offset] : wires)
        net.wires.push_back(make_wire("w" + std::to_string(n++), "W", edge, offset, wire_width));
    net.fermi_level = fermi;
    return net;
}

// Well of the wire width with both wires collinear: an unbroken straight waveguide.
inline NetworkSpec straight_through(double length = 2.0, double fermi = 1.5 * kPi * kPi) {
    return rect_network(length, 1.0, {{Edge::Left, 0.0}, {Edge::Right, 0.0}}, fermi);
}

// Two wires on opposite edges at different heights.
inline NetworkSpec offset_two_wire(double fermi = 20.0) {
    return rect_network(2.0, 1.5, {{Edge::Left, 0.0}, {Edge::Right, 0.5}}, fermi);
}

// Full-width well of length L with its own potential.
inline NetworkSpec separable_well(double length, double potential, double fermi) {
    return rect_network(length, 1.0, {{Edge::Left, 0.0}, {Edge::Right, 0.0}}, fermi, potential);
}

inline ChannelMode mode(const std::string& wire, std::size_t index, int s, double threshold, bool open) {
    ChannelMode m;
    m.wire = wire;
    m.wire_index = index;
    m.s = s;
    m.threshold = threshold;
    m.mass_par = 0.5;
    m.open = open;
    return m;
}

// Hand-built basis: open thresholds first, closed thresholds after.
inline ChannelBasis synthetic_basis(const std::vector<double>& open, const std::vector<double>& closed) {
    ChannelBasis b;
    std::size_t i = 0;
    for (double t : open) b.open_modes.push_back(mode("o" + std::to_string(i), i, 1, t, true)), ++i;
    for (double t : closed) b.closed_modes.push_back(mode("c" + std::to_string(i), i, 1, t, false)), ++i;
    b.s_max = 1;
    return b;
}

// Polar data with unit prefactor: one row per (eigenvalue, trace row).
inline SpectralData synthetic_data(const std::vector<double>& eigenvalues, const Mat& traces) {
    SpectralData d;
    for (std::size_t r = 0; r < eigenvalues.size(); ++r) {
        EigenPair p;
        p.index = static_cast<int>(r);
        p.eigenvalue = eigenvalues[r];
        p.well = "W";
        d.pairs.push_back(p);
    }
    d.trace_matrix = traces;
    d.prefactor = Vec::Ones(static_cast<Eigen::Index>(eigenvalues.size()));
    return d;
}

// Transmission amplitude of a 1D square well (or barrier) of length L and
// height v for a particle of energy e, with hbar = 1 and 2m = 1.
inline std::complex<double> square_well_t(double e, double v, double length) {
    using C = std::complex<double>;
    const C k = std::sqrt(C(e)), q = std::sqrt(C(e - v));
    const C denom = std::cos(q * length) - C(0, 1) * (k * k + q * q) / (2.0 * k * q) * std::sin(q * length);
    return std::exp(C(0, -1) * k * length) / denom;
}

} // namespace qnet::testing
