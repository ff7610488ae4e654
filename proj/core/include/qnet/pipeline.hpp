#pragma once

#include "qnet/common.hpp"
#include "qnet/dn_map.hpp"
#include "qnet/intermediate_spectrum.hpp"
#include "qnet/network.hpp"
#include "qnet/scattering.hpp"
#include "qnet/solvable_model.hpp"
#include "qnet/well_spectra.hpp"

#include <limits>
#include <vector>

namespace qnet {

struct PipelineOptions {
    int s_max = 0; // 0: largest open mode index plus six
    double lambda_cut = std::numeric_limits<double>::quiet_NaN(); // NaN: Fermi level + 40 spacings
    bool exact_background = true;
    int n_scan = 256;
    int threads = 1;
};

// An intermediate eigenvalue with its residue vector in the intermediate DN
// map: residue = phi phi^T (flux normalization, mass prefactor included).
struct PoleResidue {
    double lambda = 0.0;
    Vec phi;
    double rank_one_defect = 0.0; // second singular value / first of the residue
    bool decoupled = false;       // L0 level without closed-channel trace
};

// Channel basis, spectral data and the scattering routes for one network.
class Pipeline {
public:
    explicit Pipeline(NetworkSpec net, PipelineOptions opts = {}, Warnings* warnings = nullptr);
    Pipeline(NetworkSpec net, ChannelBasis basis, SpectralData data, PipelineOptions opts = {});

    const NetworkSpec& network() const { return net_; }
    const ChannelBasis& basis() const { return basis_; }
    const SpectralData& data() const { return data_; }
    const PipelineOptions& options() const { return opts_; }
    Band band() const { return band_; }
    double spacing() const;

    Vec k_plus(double lambda) const { return k_plus_flux(basis_, lambda); }
    Vec k_minus(double lambda) const { return k_minus_flux(basis_, lambda); }

    DnBlocks blocks(double lambda) const { return dn_blocks(data_, basis_, lambda); }
    IntermediateDn intermediate(double lambda) const { return intermediate_dn(blocks(lambda), k_minus(lambda)); }
    ScatteringMatrix scatter(double lambda) const;              // joint block solve
    ScatteringMatrix scatter_intermediate(double lambda) const; // Cayley of the intermediate DN map

    IntermediateSpectrum spectrum() const;

    // Residues of the intermediate DN map at every intermediate eigenvalue in
    // [lo, hi] (roots and decoupled levels), by symmetric Richardson
    // extrapolation with step 1e-4 * spacing.
    std::vector<PoleResidue> residues(double lo, double hi) const;
    PoleResidue residue_at(double pole, bool decoupled = false) const;

    // Intermediate DN map minus the polar term of one pole.
    Mat remainder(double lambda, const PoleResidue& pole) const;

    // Essential poles in (center - T, center + T); the window must stay
    // below the upper band edge.
    std::vector<EssentialPole> essential_poles(double center, double half_width) const;

private:
    NetworkSpec net_;
    PipelineOptions opts_;
    ChannelBasis basis_;
    Band band_;
    SpectralData data_;
};

int default_s_max(const NetworkSpec& net);

} // namespace qnet
