#include "qnet/network.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

namespace qnet {

const char* to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::InvalidIndex: return "invalid-index";
    case ErrorKind::InvalidGeometry: return "geometry";
    case ErrorKind::DegenerateFermiLevel: return "degenerate-fermi-level";
    case ErrorKind::BandEdge: return "band-edge";
    case ErrorKind::PoleProximity: return "pole-proximity";
    case ErrorKind::DispersionRoot: return "dispersion-root-proximity";
    case ErrorKind::ThinViolation: return "thin-network-violation";
    case ErrorKind::RegimeViolation: return "regime-violation";
    case ErrorKind::NumericalSingularity: return "numerical-singularity";
    case ErrorKind::NoConvergence: return "no-convergence";
    case ErrorKind::Configuration: return "configuration";
    case ErrorKind::Unfittable: return "unfittable";
    case ErrorKind::Io: return "io";
    }
    return "error";
}

const char* to_string(Edge e) {
    switch (e) {
    case Edge::Left: return "left";
    case Edge::Right: return "right";
    case Edge::Bottom: return "bottom";
    case Edge::Top: return "top";
    }
    return "?";
}

Edge edge_from_string(const std::string& s) {
    if (s == "left") return Edge::Left;
    if (s == "right") return Edge::Right;
    if (s == "bottom") return Edge::Bottom;
    if (s == "top") return Edge::Top;
    throw Error(ErrorKind::Configuration, "unknown edge '" + s + "' (expected left|right|bottom|top)");
}

double WellSpec::width() const {
    return std::visit([](const auto& g) { return g.a; }, geometry);
}

double WellSpec::height() const {
    return std::visit([](const auto& g) { return g.b; }, geometry);
}

const WellSpec& NetworkSpec::well(const std::string& id) const { return wells[well_index(id)]; }

std::size_t NetworkSpec::well_index(const std::string& id) const {
    for (std::size_t i = 0; i < wells.size(); ++i)
        if (wells[i].id == id) return i;
    throw Error(ErrorKind::InvalidGeometry, "unknown well '" + id + "'");
}

const WireSpec& NetworkSpec::wire(const std::string& id) const {
    for (const auto& w : wires)
        if (w.id == id) return w;
    throw Error(ErrorKind::InvalidGeometry, "unknown wire '" + id + "'");
}

void validate(const NetworkSpec& net) {
    auto fail = [](const std::string& msg) { throw Error(ErrorKind::InvalidGeometry, msg); };
    std::set<std::string> ids;
    for (const auto& w : net.wells) {
        if (!ids.insert(w.id).second) fail("duplicate well id '" + w.id + "'");
        if (!(w.width() > 0 && w.height() > 0)) fail("well '" + w.id + "': a and b must be positive");
        if (!(w.mass > 0)) fail("well '" + w.id + "': mass must be positive");
        if (const auto* g = std::get_if<GridGeometry>(&w.geometry)) {
            if (!(g->h > 0)) fail("well '" + w.id + "': grid step must be positive");
            auto divides = [&](double len) {
                double r = len / g->h;
                return std::abs(r - std::round(r)) < 1e-9 * std::max(1.0, r);
            };
            if (!divides(g->a) || !divides(g->b)) fail("well '" + w.id + "': h must divide a and b");
        }
    }
    std::set<std::string> wire_ids;
    for (const auto& m : net.wires) {
        if (!wire_ids.insert(m.id).second) fail("duplicate wire id '" + m.id + "'");
        if (!(m.width > 0)) fail("wire '" + m.id + "': width must be positive");
        if (!(m.mass_par > 0 && m.mass_perp > 0)) fail("wire '" + m.id + "': masses must be positive");
        if (!(m.length > 0)) fail("wire '" + m.id + "': length must be positive");
        std::size_t need = m.semi_infinite() ? 1 : 2;
        if (m.attachments.size() != need)
            fail("wire '" + m.id + "': " + std::to_string(need) + " attachment(s) required");
        for (const auto& at : m.attachments) {
            const WellSpec* well = nullptr;
            for (const auto& w : net.wells)
                if (w.id == at.well) well = &w;
            if (!well) fail("wire '" + m.id + "' attaches to unknown well '" + at.well + "'");
            double len = well->edge_length(at.edge);
            if (at.offset < -1e-12 || at.offset + m.width > len + 1e-12)
                fail("wire '" + m.id + "': bottom section leaves the " + to_string(at.edge) +
                     " edge of well '" + at.well + "'");
        }
    }
    // Bottom sections sharing an edge must not overlap.
    struct Seg { std::string wire, well; Edge edge; double t0, t1; };
    std::vector<Seg> segs;
    for (const auto& m : net.wires)
        for (const auto& at : m.attachments)
            segs.push_back({m.id, at.well, at.edge, at.offset, at.offset + m.width});
    for (std::size_t i = 0; i < segs.size(); ++i)
        for (std::size_t j = i + 1; j < segs.size(); ++j) {
            const auto &p = segs[i], &q = segs[j];
            if (p.well == q.well && p.edge == q.edge && p.t0 < q.t1 - 1e-12 && q.t0 < p.t1 - 1e-12)
                fail("wires '" + p.wire + "' and '" + q.wire + "' overlap on the " +
                     to_string(p.edge) + " edge of well '" + p.well + "'");
        }
}

double threshold(const WireSpec& wire, int s) {
    if (s < 1) throw Error(ErrorKind::InvalidIndex, "transverse index must be >= 1, got " + std::to_string(s));
    const double pi = std::numbers::pi;
    return wire.potential + s * s * pi * pi / (2.0 * wire.mass_perp * wire.width * wire.width);
}

namespace {

std::vector<std::size_t> sorted_semi_infinite(const NetworkSpec& net) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < net.wires.size(); ++i)
        if (net.wires[i].semi_infinite()) idx.push_back(i);
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return net.wires[a].id < net.wires[b].id; });
    return idx;
}

} // namespace

ChannelBasis classify_channels(const NetworkSpec& net, int s_max) {
    if (s_max < 1) throw Error(ErrorKind::InvalidIndex, "s_max must be >= 1");
    const double lam = net.fermi_level;
    ChannelBasis basis;
    basis.s_max = s_max;
    for (std::size_t wi : sorted_semi_infinite(net)) {
        const WireSpec& w = net.wires[wi];
        for (int s = 1; s <= s_max; ++s) {
            double t = threshold(w, s);
            if (std::abs(t - lam) <= kThresholdTol * std::max(1.0, std::abs(lam)))
                throw Error(ErrorKind::DegenerateFermiLevel,
                            "Fermi level " + std::to_string(lam) + " coincides with threshold of wire '" +
                                w.id + "' mode " + std::to_string(s));
            ChannelMode mode{w.id, wi, s, t, w.mass_par, t < lam};
            (mode.open ? basis.open_modes : basis.closed_modes).push_back(mode);
        }
        if (threshold(w, s_max + 1) < lam)
            throw Error(ErrorKind::Configuration, "s_max = " + std::to_string(s_max) +
                                                      " does not cover all open modes of wire '" + w.id + "'");
    }
    basis.scattering_defined = !basis.open_modes.empty();
    return basis;
}

Band spectral_band(const ChannelBasis& basis, Warnings* warnings) {
    Band band;
    for (const auto& m : basis.open_modes) band.lo = std::max(band.lo, m.threshold);
    for (const auto& m : basis.closed_modes) band.hi = std::min(band.hi, m.threshold);
    if (basis.open_modes.empty()) warn(warnings, "no open channels: scattering undefined");
    if (basis.closed_modes.empty()) warn(warnings, "no closed channels retained: upper band edge is +inf");
    return band;
}

Band spectral_band(const NetworkSpec& net, Warnings* warnings) {
    Band band;
    bool any = false;
    for (std::size_t wi : sorted_semi_infinite(net)) {
        const WireSpec& w = net.wires[wi];
        any = true;
        for (int s = 1;; ++s) {
            double t = threshold(w, s);
            if (t < net.fermi_level) {
                band.lo = std::max(band.lo, t);
            } else {
                band.hi = std::min(band.hi, t);
                break;
            }
        }
    }
    if (!any) warn(warnings, "no semi-infinite wires: no channels");
    if (!(band.lo > -kInf)) warn(warnings, "no open channels: scattering undefined");
    return band;
}

Vec k_plus(const ChannelBasis& basis, double lambda) {
    Vec k(basis.n_open());
    for (std::size_t i = 0; i < basis.n_open(); ++i) {
        const auto& m = basis.open_modes[i];
        if (!(lambda > m.threshold))
            throw Error(ErrorKind::BandEdge, "energy " + std::to_string(lambda) +
                                                 " not above open threshold " + std::to_string(m.threshold));
        k[i] = std::sqrt(2.0 * m.mass_par) * std::sqrt(lambda - m.threshold);
    }
    return k;
}

Vec k_minus(const ChannelBasis& basis, double lambda) {
    Vec k(basis.n_closed());
    for (std::size_t i = 0; i < basis.n_closed(); ++i) {
        const auto& m = basis.closed_modes[i];
        if (!(lambda < m.threshold))
            throw Error(ErrorKind::BandEdge, "energy " + std::to_string(lambda) +
                                                 " not below closed threshold " + std::to_string(m.threshold));
        k[i] = -std::sqrt(2.0 * m.mass_par) * std::sqrt(m.threshold - lambda);
    }
    return k;
}

Vec k_plus_flux(const ChannelBasis& basis, double lambda) {
    Vec k = k_plus(basis, lambda);
    for (std::size_t i = 0; i < basis.n_open(); ++i) k[i] /= 2.0 * basis.open_modes[i].mass_par;
    return k;
}

Vec k_minus_flux(const ChannelBasis& basis, double lambda) {
    Vec k = k_minus(basis, lambda);
    for (std::size_t i = 0; i < basis.n_closed(); ++i) k[i] /= 2.0 * basis.closed_modes[i].mass_par;
    return k;
}

CVec k_plus_flux(const ChannelBasis& basis, cplx lambda) {
    CVec k(basis.n_open());
    for (std::size_t i = 0; i < basis.n_open(); ++i) {
        const auto& m = basis.open_modes[i];
        k[i] = std::sqrt(2.0 * m.mass_par * (lambda - m.threshold)) / (2.0 * m.mass_par);
    }
    return k;
}

double level_spacing(const NetworkSpec& net, double lambda) {
    // Weyl: N(lambda) ~ mu * area * (lambda - V) / (2 pi) per well, so the
    // density is the sum of mu * area / (2 pi).
    double density = 0.0;
    for (const auto& w : net.wells)
        if (lambda > w.potential) density += w.mass * w.width() * w.height() / (2.0 * std::numbers::pi);
    return density > 0 ? 1.0 / density : 1.0;
}

} // namespace qnet
