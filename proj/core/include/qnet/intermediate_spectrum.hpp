#pragma once

#include "qnet/common.hpp"
#include "qnet/dn_map.hpp"
#include "qnet/network.hpp"
#include "qnet/well_spectra.hpp"

#include <vector>

namespace qnet {

// Eigenvalue of the intermediate operator found as a vector zero of
// DN_mm(lambda) nu = K_minus(lambda) nu.
struct DispersionRoot {
    double lambda = 0.0;
    Vec nu;                // unit closed-mode vector
    double residual = 0.0; // ||(DN_mm - K_minus) nu||
};

// L0 eigenvalue in the band whose eigenfunctions (or some combination of a
// degenerate group) have no closed-channel trace. It stays an eigenvalue of
// the intermediate operator and a pole of its DN map.
struct DecoupledLevel {
    double lambda = 0.0;
    int multiplicity = 0; // number of decoupled combinations
};

struct IntermediateSpectrum {
    std::vector<DispersionRoot> roots;
    std::vector<DecoupledLevel> decoupled;
};

// lambda_max(M) - 1 with M = -|K_-|^{-1/2} DN_mm |K_-|^{-1/2}: zero exactly
// when the dispersion equation has a solution, -1 when DN_mm vanishes.
double secular_function(const SpectralData& data, const ChannelBasis& basis, double lambda);

// All dispersion roots strictly inside the band. The matrix
// D(lambda) = DN_mm - K_minus decreases (in the Loewner order) between
// poles, so its negative inertia counts roots; each root is bracketed on a
// scan of n_scan points and refined on the matching ordered eigenvalue.
std::vector<DispersionRoot> find_roots(const SpectralData& data, const ChannelBasis& basis, const Band& band,
                                       int n_scan = 256, int threads = 1);

// Roots plus decoupled L0 levels in the guarded band.
IntermediateSpectrum intermediate_spectrum(const SpectralData& data, const ChannelBasis& basis, const Band& band,
                                           int n_scan = 256, int threads = 1);

} // namespace qnet
