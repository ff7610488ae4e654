#pragma once

#include "qnet/common.hpp"
#include "qnet/network.hpp"
#include "qnet/pipeline.hpp"

#include <Eigen/Sparse>

#include <vector>

namespace qnet {

// Direct finite-difference discretization of one well with its semi-infinite
// wires, each truncated after a number of grid columns and closed by the
// exact discrete outgoing condition of the 5-point stencil, mode by mode.
class GridScene {
public:
    struct WireGrid {
        std::size_t wire_index = 0;
        Edge edge = Edge::Left;
        int first = 0;    // grid index of the section start along the edge
        int n = 0;        // intervals across the wire
        int columns = 0;  // wire columns 1..columns beyond the interface column 0
        double mu_par = 0.5, mu_perp = 0.5, potential = 0.0;
        std::vector<int> node; // (column, t) -> unknown index, column 0..columns, t 1..n-1
        int at(int column, int t) const { return node[static_cast<std::size_t>(column * (n - 1) + (t - 1))]; }
    };

    // Wires are kept for a length of at least 6 / min |K_minus| at
    // lambda_max (the slowest decay in the sweep) and at least 4 columns.
    GridScene(const NetworkSpec& net, const ChannelBasis& basis, double h, double lambda_max);

    double h() const { return h_; }
    int unknowns() const { return n_unknowns_; }
    const std::vector<WireGrid>& wires() const { return wires_; }

    // Discrete transverse mode s (1..n-1) of a wire at node t.
    static double mode(const WireGrid& w, int s, int t);
    // Axial multiplier per column of the outgoing (or decaying) wave.
    cplx outgoing_factor(const WireGrid& w, int s, double lambda) const;
    bool propagating(const WireGrid& w, int s, double lambda) const;

    struct Solution {
        CMat s;            // amplitudes, open x open in basis order
        CMat s_flux;       // discrete-flux normalized
        CMat evanescent;   // decaying-mode coefficients at the interface, per incoming column
        double unitarity_defect = 0.0;
        double incoming_fit_error = 0.0; // max deviation of fitted incoming amplitudes from the injected ones
    };

    // All incoming open modes at once: one factorization, one solve per mode.
    Solution solve(double lambda) const;

private:
    ChannelBasis basis_;
    double h_;
    int n_unknowns_ = 0;
    std::vector<WireGrid> wires_;
    std::vector<Eigen::Triplet<double>> static_part_; // real stencil without -lambda and truncation
    std::vector<std::pair<std::size_t, int>> open_modes_; // (wire grid index, s) in basis order
    std::vector<std::pair<std::size_t, int>> closed_modes_;
};

struct OracleRow {
    double lambda = 0.0;
    double deviation = 0.0;     // max |S_dn - S_fdm| on flux-normalized entries
    double t_dn = 0.0, t_fdm = 0.0; // |S_21|^2 (first two open modes) or |S_11|^2 with one mode
    double fdm_defect = 0.0;
};

// Flux-normalized DN-pipeline S against the grid solve at each energy.
std::vector<OracleRow> oracle_compare(const Pipeline& pipeline, const std::vector<double>& lambdas, double h,
                                      int threads = 1);

} // namespace qnet
