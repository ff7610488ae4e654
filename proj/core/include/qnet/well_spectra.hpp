#pragma once

#include "qnet/common.hpp"
#include "qnet/network.hpp"

#include <Eigen/Sparse>

#include <iosfwd>
#include <limits>
#include <memory>
#include <string>
#include <vector>

namespace qnet {

struct EigenPair {
    int index = 0;
    double eigenvalue = 0.0;
    std::string well;
    double mass = 0.5; // effective mass of the owning well
    int p = 0, q = 0;  // mode numbers on the analytic path, 0 otherwise
    Vec grid_vector;   // grid path only: values on interior nodes, L2-normalized
};

// Regular (pole-free on the band) part of the DN map that the retained polar
// terms do not represent. Evaluates the full columns x columns matrix with
// mass prefactors applied.
class DnBackground {
public:
    virtual ~DnBackground() = default;
    virtual Mat evaluate(double lambda) const = 0;
};

struct SpectralData {
    std::vector<EigenPair> pairs;
    Mat trace_matrix;   // rows: pairs, columns: basis ordering (open, closed)
    Vec prefactor;      // per row 1/(2 mu)^2
    double lambda_cut = kInf;
    std::shared_ptr<const DnBackground> background; // null: polar series only

    std::size_t rows() const { return pairs.size(); }
    std::size_t cols() const { return static_cast<std::size_t>(trace_matrix.cols()); }
};

// Analytic Dirichlet spectrum of a constant-potential rectangle, sorted, all
// pairs with eigenvalue <= lambda_cut.
std::vector<EigenPair> rectangle_spectrum(const WellSpec& well, double lambda_cut, Warnings* warnings = nullptr);

// Integral of sqrt(2/delta) sin(s pi (t - t0)/delta) sin(n pi t / L) over the
// section [t0, t0 + delta].
double sine_overlap(int s, double t0, double delta, int n, double L);

// Row of the trace matrix for one eigenpair: projections of the outward
// normal derivative onto the channel modes of the wires attached to its well.
Vec boundary_trace_coeffs(const EigenPair& pair, const NetworkSpec& net, const ChannelBasis& basis);

// Uniform-grid discretization of a well (5-point stencil, Dirichlet walls).
class GridWell {
public:
    GridWell(const WellSpec& well, double h);

    int nx() const { return nx_; } // intervals along x
    int ny() const { return ny_; }
    double h() const { return h_; }
    int unknowns() const { return static_cast<int>(nodes_.size()); }
    // Interior-node index of grid node (i, j), or -1 for wall/obstacle nodes.
    int index(int i, int j) const;
    const Eigen::SparseMatrix<double>& operator_matrix() const;
    const WellSpec& spec() const { return spec_; }
    // Base potential plus any patch covering grid node (i, j).
    double node_potential(int i, int j) const;

    // Nodes of a bottom section along an edge: for each node strictly inside
    // the section, its edge coordinate and the interior neighbour index.
    struct SectionNode {
        double t;
        int inner;
    };
    std::vector<SectionNode> section_nodes(Edge edge, double offset, double width) const;

private:
    WellSpec spec_;
    double h_;
    int nx_, ny_;
    std::vector<int> map_;                 // (nx+1)*(ny+1) grid -> interior index
    std::vector<std::pair<int, int>> nodes_;
    std::shared_ptr<Eigen::SparseMatrix<double>> op_;
};

struct GridEigenResult {
    std::vector<EigenPair> pairs;
    int lanczos_runs = 0;
    double max_residual = 0.0;
};

// Smallest eigenpairs (<= lambda_cut) of the 5-point Dirichlet operator.
GridEigenResult fdm_spectrum(const GridWell& grid, double lambda_cut);

// Grid-path SpectralData for one grid well (columns in basis order; columns
// of wires on other wells are zero). Traces use the discrete outward flux.
SpectralData fdm_spectrum(const NetworkSpec& net, const std::string& well_id, const ChannelBasis& basis,
                          double lambda_cut);

struct SpectralOptions {
    double lambda_cut = std::numeric_limits<double>::quiet_NaN(); // NaN: default
    bool exact_background = true; // add the regular remainder of the DN map
};

// Default truncation: Fermi level plus 40 level spacings.
double default_lambda_cut(const NetworkSpec& net);

// Spectral data for all wells of a network: analytic for rectangles, grid
// eigen-solve otherwise. Rows sorted by eigenvalue.
SpectralData build_spectral_data(const NetworkSpec& net, const ChannelBasis& basis, SpectralOptions opts = {},
                                 Warnings* warnings = nullptr);

// Versioned text table: header line, then "index eigenvalue prefactor c_1 ... c_n".
void write_spectral_table(std::ostream& os, const SpectralData& data);
SpectralData read_spectral_table(std::istream& is);

} // namespace qnet
