#include "qnet/pipeline.hpp"

#include <algorithm>
#include <cmath>

namespace qnet {

int default_s_max(const NetworkSpec& net) {
    int top = 1;
    for (const auto& w : net.wires) {
        if (!w.semi_infinite()) continue;
        int s = 1;
        while (threshold(w, s) < net.fermi_level) ++s;
        top = std::max(top, s - 1);
    }
    return top + 6;
}

Pipeline::Pipeline(NetworkSpec net, PipelineOptions opts, Warnings* warnings)
    : net_(std::move(net)), opts_(opts) {
    validate(net_);
    if (opts_.s_max <= 0) opts_.s_max = default_s_max(net_);
    basis_ = classify_channels(net_, opts_.s_max);
    band_ = spectral_band(basis_, warnings);
    SpectralOptions so;
    so.lambda_cut = opts_.lambda_cut;
    so.exact_background = opts_.exact_background;
    data_ = build_spectral_data(net_, basis_, so, warnings);
}

Pipeline::Pipeline(NetworkSpec net, ChannelBasis basis, SpectralData data, PipelineOptions opts)
    : net_(std::move(net)), opts_(opts), basis_(std::move(basis)), data_(std::move(data)) {
    band_ = spectral_band(basis_);
}

double Pipeline::spacing() const { return level_spacing(net_, net_.fermi_level); }

ScatteringMatrix Pipeline::scatter(double lambda) const {
    return s_full(blocks(lambda), k_plus(lambda), k_minus(lambda));
}

ScatteringMatrix Pipeline::scatter_intermediate(double lambda) const {
    return s_intermediate(intermediate(lambda), k_plus(lambda));
}

IntermediateSpectrum Pipeline::spectrum() const {
    return intermediate_spectrum(data_, basis_, band_, opts_.n_scan, opts_.threads);
}

PoleResidue Pipeline::residue_at(double pole, bool decoupled) const {
    const double h = 1e-4 * spacing();
    const Mat r = extract_residue([&](double x) { return intermediate(x).matrix; }, pole, h);
    PoleResidue out;
    out.lambda = pole;
    out.decoupled = decoupled;
    out.phi = residue_vector(r);
    if (r.rows() > 1) {
        const Vec sv = Eigen::JacobiSVD<Mat>(r).singularValues();
        out.rank_one_defect = sv[0] > 0 ? sv[1] / sv[0] : 0.0;
    }
    return out;
}

std::vector<PoleResidue> Pipeline::residues(double lo, double hi) const {
    const IntermediateSpectrum sp = spectrum();
    std::vector<PoleResidue> out;
    for (const auto& r : sp.roots)
        if (r.lambda >= lo && r.lambda <= hi) out.push_back(residue_at(r.lambda));
    for (const auto& d : sp.decoupled)
        if (d.lambda >= lo && d.lambda <= hi) out.push_back(residue_at(d.lambda, true));
    std::stable_sort(out.begin(), out.end(), [](const PoleResidue& a, const PoleResidue& b) { return a.lambda < b.lambda; });
    return out;
}

Mat Pipeline::remainder(double lambda, const PoleResidue& pole) const {
    return intermediate(lambda).matrix - pole.phi * pole.phi.transpose() / (lambda - pole.lambda);
}

std::vector<EssentialPole> Pipeline::essential_poles(double center, double half_width) const {
    if (!(center + half_width < band_.hi))
        throw Error(ErrorKind::Configuration, "essential band reaches the upper band edge " + std::to_string(band_.hi));
    std::vector<EssentialPole> out;
    for (const auto& r : residues(center - half_width, center + half_width)) {
        if (r.phi.norm() == 0.0) continue;
        out.push_back({r.lambda, r.phi});
    }
    return out;
}

} // namespace qnet
