#pragma once

#include "qnet/common.hpp"
#include "qnet/dn_map.hpp"

#include <functional>
#include <vector>

namespace qnet {

// Scattering matrix on the open modes. `s` acts on wave amplitudes; `s_flux`
// = K^{1/2} S K^{-1/2} acts on flux-normalized amplitudes and is the matrix
// that is unitary and symmetric.
struct ScatteringMatrix {
    cplx lambda = 0.0;
    CMat s;
    CMat s_flux;
    double unitarity_defect = 0.0; // || s_flux^* s_flux - I ||_2
    double symmetry_defect = 0.0;  // || s_flux - s_flux^T ||_max

    // Transmission probability |s_flux(i, j)|^2 from open mode j to mode i.
    double transmission(Eigen::Index i, Eigen::Index j) const { return std::norm(s_flux(i, j)); }
};

// Builds the record from an amplitude matrix and flux-normalized wavenumbers.
ScatteringMatrix make_scattering(cplx lambda, CMat s, const CVec& k_plus);
ScatteringMatrix make_scattering(double lambda, CMat s, const Vec& k_plus);

// Joint solve of the matching conditions for the outgoing open amplitudes and
// the closed-channel boundary values with the full DN blocks.
ScatteringMatrix s_full(const DnBlocks& blocks, const Vec& k_plus, const Vec& k_minus);

// Cayley form S = -(A - iK)^{-1} (A + iK) of the intermediate DN map A.
ScatteringMatrix s_intermediate(const IntermediateDn& idn, const Vec& k_plus);

// One-pole approximation with P = phi phi^T / (lambda - lambda0):
// S0 = (iK - P)^{-1} (iK + P) = I - 2i K^{-1} phi phi^T / ((lambda - lambda0) + i <phi, K^{-1} phi>).
// The closed form is a rank-one update and is regular at lambda = lambda0.
ScatteringMatrix s_one_pole(double lambda0, const Vec& phi, const Vec& k_plus, double lambda);
ScatteringMatrix s_one_pole(double lambda0, const Vec& phi, const CVec& k_plus, cplx lambda);

struct ResonanceZero {
    cplx lambda;
    double residual = 0.0; // |lambda - lambda0 - i <phi, K(lambda)^{-1} phi>|
    int iterations = 0;
    bool newton_fallback = false;
};

// Zero of det S0 in the upper half-plane: fixed point of
// lambda = lambda0 + i <phi, K(lambda)^{-1} phi> with K analytically continued.
ResonanceZero resonance_zero(double lambda0, const Vec& phi, const std::function<CVec(cplx)>& k_plus);

// sup over the samples of || K^{-1/2} DN0 K^{-1/2} ||_2 where DN0 is the
// non-resonance remainder of the intermediate DN map.
double subordination_d(const std::function<Mat(double)>& remainder, const std::function<Vec(double)>& k_plus,
                       double lo, double hi, int samples = 64);

// (2d / (1 - d)) * (3/2) * ||K^{1/2}|| * ||K^{-1/2}||.
double deviation_bound(double d, const Vec& k_plus);

struct EssentialPole {
    double lambda = 0.0;
    Vec phi; // residue vector: the residue of the DN map is phi phi^T
};

// Few-pole (essential) approximation: DN replaced by sum phi phi^T / (lambda - lambda_r).
ScatteringMatrix s_essential(const std::vector<EssentialPole>& poles, const Vec& k_plus, double lambda);

// Closed-channel boundary coefficients u_- = -(DN_mm - K_minus)^{-1} DN_mp (I + S)
// for unit incoming data on each open mode (one column per open mode).
CMat evanescent_amplitudes(const DnBlocks& blocks, const Vec& k_minus, const CMat& s);

// Residual of the matching conditions for boundary data (I + S, u_-):
// open rows DN (g) - iK (S - I), closed rows DN (g) - K_minus u_-.
double matching_residual(const DnBlocks& blocks, const Vec& k_plus, const Vec& k_minus, const CMat& s,
                         const CMat& u_minus);

} // namespace qnet
