#pragma once

#include "qnet/common.hpp"
#include "qnet/network.hpp"
#include "qnet/well_spectra.hpp"

#include <functional>
#include <optional>

namespace qnet {

// DN map of the compact part framed by the open/closed channel split. The DN
// map sends Dirichlet data to the mass-weighted outward flux (1/2mu) du/dn.
struct DnBlocks {
    double lambda = 0.0;
    Mat pp, pm, mp, mm;
    double pole_gap = kInf; // relative distance to the nearest retained eigenvalue

    Mat full() const;
    static DnBlocks from_full(const Mat& full, std::size_t n_open, double lambda);
};

struct IntermediateDn {
    double lambda = 0.0;
    Mat matrix;
    bool near_l0_eigenvalue = false; // evaluated within 1e-3 (relative) of a retained eigenvalue
    double condition = 1.0;          // of DN_mm - K_minus
};

// Rows of the spectral data sharing one eigenvalue (relative 1e-12).
struct LevelGroup {
    double lambda = 0.0;
    std::vector<Eigen::Index> rows;
};
std::vector<LevelGroup> level_groups(const SpectralData& data);

// Columns sqrt(prefactor_r) * trace_r restricted to [first, first + count):
// the group's dyad sum is A A^T on those columns.
Mat group_traces(const SpectralData& data, const LevelGroup& group, Eigen::Index first, Eigen::Index count);

// Truncated polar series plus the regular remainder carried by the data.
// Eigenvalues within `exclude_near` (relative 1e-12) are left out; this
// produces the non-resonance remainder used by resonance_split.
DnBlocks dn_blocks(const SpectralData& data, const ChannelBasis& basis, double lambda,
                   std::optional<double> exclude_near = std::nullopt);

// DN_pp - DN_pm (DN_mm - K_minus)^{-1} DN_mp, with K_minus flux-normalized.
IntermediateDn intermediate_dn(const DnBlocks& blocks, const Vec& k_minus);

// || |K_-|^{-1/2} K0 |K_-|^{-1/2} || for the closed-block remainder K0.
double thin_network_norm(const Mat& closed_remainder, const Vec& k_minus);

struct ResonanceSplit {
    double lambda0 = 0.0;
    double mu = 0.5;
    int multiplicity = 0;
    Mat phi_plus;  // open x multiplicity: raw boundary traces of the group
    Mat phi_minus; // closed x multiplicity
    Mat kpp, kpm, kmm; // non-resonance remainders

    // Rank of the resonance dyad sum.
    int dyad_rank(double tol = 1e-10) const;
};

// Eigenvalue of the data nearest to `target`; ties within the threshold
// tolerance raise an error asking for an explicit choice.
double nearest_eigenvalue(const SpectralData& data, double target);

// Separates the polar term of the eigenvalue group at lambda0 from the DN
// blocks at lambda: DN = (1/(2mu)^2) phi phi^T / (lambda - lambda0) + K.
ResonanceSplit resonance_split(const SpectralData& data, const ChannelBasis& basis, double lambda,
                               double lambda0);

// (2mu)^2 (lambda - lambda0) + <phi_-, k^{-1} phi_->,  k = K_mm - K_minus.
double denominator_D(const Vec& phi_minus, const Mat& kmm, const Vec& k_minus, double lambda, double lambda0,
                     double mu);

// lambda0 - (1/(2mu)^2) <phi, |K_minus|^{-1} phi>.
double shift_estimate(const Vec& phi_minus, const Vec& k_minus, double lambda0, double mu);

// phi_+ - K_pm k^{-1} phi_-: approximate raw trace whose dyad, times
// 1/(2mu)^2, is the residue of the intermediate DN map at its pole.
Vec residue_vector_approx(const Vec& phi_plus, const Vec& phi_minus, const Mat& kpm, const Mat& k);

// Residue lim (lambda - pole) F(lambda) by symmetric two-point evaluation at
// pole +- h, Richardson-extrapolated with pole +- h/2.
Mat extract_residue(const std::function<Mat(double)>& f, double pole, double h);

// Sensitivity of the polar series to its tail: || DN(lambda) - DN_half(lambda) ||
// where DN_half keeps only eigenvalues up to lambda_cut / 2 (background
// excluded). Large values mean the truncated series alone is unreliable.
double tail_sensitivity(const SpectralData& data, const ChannelBasis& basis, double lambda);

// Principal vector v of a (numerically rank-one) positive residue R ~ v v^T,
// sign fixed so the largest component is positive.
Vec residue_vector(const Mat& residue);

} // namespace qnet
