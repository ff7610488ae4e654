// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Usage: qnet_acceptance <path to qnet binary> <scratch directory>

#include "support.hpp"

#include "qnet/fdm_oracle.hpp"
#include "qnet/pipeline.hpp"

#include <boost/math/tools/roots.hpp>
#include <fmt/core.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <sstream>

using namespace qnet;
using namespace qnet::testing;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

double root_in(const std::function<double(double)>& f, double lo, double hi) {
    boost::uintmax_t iters = 200;
    const auto r = boost::math::tools::toms748_solve(f, lo, hi, boost::math::tools::eps_tolerance<double>(52), iters);
    return 0.5 * (r.first + r.second);
}

std::vector<double> sweep(double lo, double hi, int n) {
    std::vector<double> out;
    for (int i = 0; i < n; ++i) out.push_back(lo + (hi - lo) * (i + 0.5) / n);
    return out;
}

// Scattering at lam, stepping off an L0 eigenvalue that the sweep happens to hit exactly.
ScatteringMatrix scatter_off_pole(const Pipeline& p, double lam, int& nudges) {
    for (int attempt = 0;; ++attempt) {
        try {
            return p.scatter(lam);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::PoleProximity || attempt == 3) throw;
            lam += 1e-5 * p.spacing();
            ++nudges;
        }
    }
}

std::vector<NetworkSpec> geometries() {
    std::vector<NetworkSpec> g;
    g.push_back(offset_two_wire(20.0));
    g.push_back(rect_network(2.5, 1.8, {{Edge::Left, 0.3}, {Edge::Bottom, 0.7}}, 25.0));
    g.push_back(rect_network(2.2, 2.0, {{Edge::Left, 0.2}, {Edge::Right, 0.9}, {Edge::Top, 0.5}}, 30.0));
    g.push_back(rect_network(1.7, 1.3, {{Edge::Left, 0.0}, {Edge::Right, 0.3}}, 18.0, -3.0));
    g.push_back(rect_network(2.0, 2.5, {{Edge::Left, 0.4}, {Edge::Right, 1.1}}, 45.0));
    return g;
}

// Essential window around the band centre, clear of both band edges.
std::pair<double, double> essential_window(const Band& band) {
    return {0.5 * (band.lo + band.hi), 0.4 * band.width()};
}

Outcome unitarity_suite() {
    double worst[5] = {0, 0, 0, 0, 0};
    int evaluated = 0, skipped = 0;
    for (const NetworkSpec& net : geometries()) {
        const Pipeline p(net);
        const Band band = p.band();
        const auto poles = p.residues(band.lo, band.hi);
        const auto [center, half] = essential_window(band);
        const auto essential = p.essential_poles(center, half);
        const InnerModel model = fit_model(essential, 0.0);
        for (double lam : sweep(band.guarded_lo(), band.guarded_hi(), 200)) {
            try {
                const Vec k = p.k_plus(lam);
                worst[0] = std::max(worst[0], p.scatter(lam).unitarity_defect);
                worst[1] = std::max(worst[1], p.scatter_intermediate(lam).unitarity_defect);
                if (!poles.empty()) {
                    const PoleResidue* near = &poles.front();
                    for (const auto& r : poles)
                        if (std::abs(r.lambda - lam) < std::abs(near->lambda - lam)) near = &r;
                    worst[2] = std::max(worst[2], s_one_pole(near->lambda, near->phi, k, lam).unitarity_defect);
                }
                worst[3] = std::max(worst[3], s_essential(essential, k, lam).unitarity_defect);
                worst[4] = std::max(worst[4], model_s_matrix(model, k, lam).unitarity_defect);
                ++evaluated;
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::PoleProximity) throw;
                ++skipped;
            }
        }
    }
    const double m = *std::max_element(std::begin(worst), std::end(worst));
    return {m <= 1e-10 && evaluated >= 900,
            fmt::format("max defect full {:.2e} intermediate {:.2e} one-pole {:.2e} essential {:.2e} model {:.2e} "
                        "over {} energies ({} at poles)",
                        worst[0], worst[1], worst[2], worst[3], worst[4], evaluated, skipped)};
}

Outcome route_equivalence() {
    double full_vs_int = 0.0, model_vs_sum = 0.0, fit_vs_ess = 0.0;
    for (const NetworkSpec& net : geometries()) {
        const Pipeline p(net);
        const Band band = p.band();
        const auto [center, half] = essential_window(band);
        const auto essential = p.essential_poles(center, half);
        InnerModel model = fit_model(essential, 0.0);
        model.beta00 = choose_beta00(model);
        for (double lam : sweep(band.guarded_lo(), band.guarded_hi(), 200)) {
            try {
                full_vs_int = std::max(full_vs_int, (p.scatter(lam).s - p.scatter_intermediate(lam).s).cwiseAbs().maxCoeff());
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::PoleProximity) throw;
            }
        }
        for (double lam : sweep(center - half, center + half, 200)) {
            try {
                const Vec k = p.k_plus(lam);
                const ScatteringMatrix a = model_s_matrix(model, k, lam);
                model_vs_sum = std::max(model_vs_sum, (a.s - krein_sum_s_matrix(model, k, lam).s).cwiseAbs().maxCoeff());
                fit_vs_ess = std::max(fit_vs_ess, (a.s - s_essential(essential, k, lam).s).cwiseAbs().maxCoeff());
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::PoleProximity) throw;
            }
        }
    }
    return {full_vs_int <= 1e-12 && model_vs_sum <= 1e-13 && fit_vs_ess <= 1e-11,
            fmt::format("full/intermediate {:.2e} (tol 1e-12), model/Krein sum {:.2e} (tol 1e-13), "
                        "fitted/essential {:.2e} (tol 1e-11)",
                        full_vs_int, model_vs_sum, fit_vs_ess)};
}

Outcome straight_through_identity() {
    const NetworkSpec net = straight_through(2.0, 1.5 * kPi * kPi);
    PipelineOptions opts;
    opts.lambda_cut = net.fermi_level + 40.0 * level_spacing(net, net.fermi_level);
    const Pipeline p(net, opts);
    const Band band = p.band();
    double r = 0.0, t = 0.0;
    int nudges = 0;
    for (double lam : sweep(band.lo + 0.1 * band.width(), band.hi - 0.1 * band.width(), 200)) {
        const ScatteringMatrix s = scatter_off_pole(p, lam, nudges);
        r = std::max(r, std::abs(s.s_flux(0, 0)));
        t = std::max(t, std::abs(std::abs(s.s_flux(1, 0)) - 1.0));
    }
    return {r <= 1e-2 && t <= 1e-2,
            fmt::format("max |S11| {:.2e}, max ||S21| - 1| {:.2e} (tol 1e-2), {} points moved off an L0 level", r, t,
                        nudges)};
}

Outcome separable_oracle() {
    // Full-width well of length 2 at potential -5 against unit-width wires,
    // in the one-channel and in the two-channel band.
    const double v = -5.0, length = 2.0;
    double worst = 0.0, cross = 0.0;
    int checked = 0, nudges = 0;
    for (double fermi : {1.5 * kPi * kPi, 6.0 * kPi * kPi}) {
        const Pipeline p(separable_well(length, v, fermi));
        const Band band = p.band();
        const ChannelBasis& basis = p.basis();
        for (double lam : sweep(band.guarded_lo(), band.guarded_hi(), 100)) {
            const ScatteringMatrix s = scatter_off_pole(p, lam, nudges);
            for (std::size_t j = 0; j < basis.n_open(); ++j) {
                if (basis.mode(j).wire_index != 0) continue;
                const int sj = basis.mode(j).s;
                for (std::size_t i = 0; i < basis.n_open(); ++i) {
                    if (basis.mode(i).wire_index != 1) continue;
                    const double amp = std::abs(s.s_flux(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
                    if (basis.mode(i).s == sj) {
                        const double e = lam - sj * sj * kPi * kPi;
                        worst = std::max(worst, std::abs(amp - std::abs(square_well_t(e, v, length))));
                        ++checked;
                    } else {
                        cross = std::max(cross, amp);
                    }
                }
            }
        }
    }
    return {worst <= 2e-2 && cross <= 2e-2 && checked >= 300,
            fmt::format("max ||t| - |t_1d|| {:.2e}, max mode mixing {:.2e} over {} channel samples (tol 2e-2), {} points "
                        "moved off an L0 level",
                        worst, cross, checked, nudges)};
}

Outcome fdm_oracle() {
    const NetworkSpec net = offset_two_wire(20.0);
    const double spacing = level_spacing(net, net.fermi_level);
    std::vector<double> devs;
    std::string ladder;
    std::vector<OracleRow> finest;
    int step = 0;
    for (double h : {1.0 / 8, 1.0 / 16, 1.0 / 32}) {
        PipelineOptions opts;
        opts.lambda_cut = net.fermi_level + 10.0 * spacing * (1 << step);
        // Closed-channel truncation is refined with the grid: every transverse mode the grid resolves is kept.
        opts.s_max = static_cast<int>(std::lround(1.0 / h)) - 1;
        const Pipeline p(net, opts);
        const Band band = p.band();
        // Mid 80% of the band: on the coarsest grid the discrete second threshold sits below the continuum one.
        const auto rows = oracle_compare(p, sweep(band.lo + 0.1 * band.width(), band.hi - 0.1 * band.width(), 120), h);
        double dev = 0.0;
        for (const auto& r : rows) dev = std::max(dev, r.deviation);
        devs.push_back(dev);
        ladder += fmt::format("{}h=1/{} {:.3e}", step ? ", " : "", static_cast<int>(1 / h), dev);
        if (step == 2) finest = rows;
        ++step;
    }
    auto argmax = [&](bool dn) {
        std::size_t best = 0;
        for (std::size_t i = 0; i < finest.size(); ++i)
            if ((dn ? finest[i].t_dn : finest[i].t_fdm) > (dn ? finest[best].t_dn : finest[best].t_fdm)) best = i;
        return best;
    };
    const long shift = std::labs(static_cast<long>(argmax(true)) - static_cast<long>(argmax(false)));
    const bool decreasing = devs[1] < devs[0] && devs[2] < devs[1];
    return {devs[2] <= 5e-2 && decreasing && shift <= 3,
            fmt::format("deviation ladder {} (tol 5e-2 at 1/32, strictly decreasing), refinement ratios {:.2f} {:.2f}, "
                        "peak offset {} steps (tol 3)",
                        ladder, devs[0] / devs[1], devs[1] / devs[2], shift)};
}

Outcome pole_cancellation() {
    double bounded_ratio = 0.0, route_gap = 0.0, min_full_growth = kInf;
    int roots_checked = 0;
    for (const NetworkSpec& net : {offset_two_wire(20.0), rect_network(2.5, 1.8, {{Edge::Left, 0.3}, {Edge::Bottom, 0.7}}, 25.0)}) {
        const Pipeline p(net);
        const Band band = p.band();
        const double spacing = p.spacing();
        for (const auto& root : p.spectrum().roots) {
            const double lam0 = nearest_eigenvalue(p.data(), root.lambda);
            // Pair levels and roots mutually: a root whose nearest level was already captured by a closer root
            // did not come out of that level.
            const auto& roots = p.spectrum().roots;
            const bool paired = std::all_of(roots.begin(), roots.end(), [&](const auto& r) {
                return std::abs(r.lambda - lam0) >= std::abs(root.lambda - lam0);
            });
            if (!paired) continue;
            const ResonanceSplit split0 = resonance_split(p.data(), p.basis(), root.lambda, lam0);
            if (split0.multiplicity != 1 || lam0 <= band.guarded_lo() || lam0 >= band.guarded_hi()) continue;
            // Two-sided probe through lam0, scaled to the distance from lam0 to the relocated pole:
            // the full DN map blows up like 1/eps while the intermediate map stays bounded.
            const double gap = std::abs(lam0 - root.lambda);
            double probe = 0.0, scale = 0.0, full_growth = 0.0;
            for (double eps : {1e-1, 1e-2, 1e-3, 1e-4}) {
                for (double side : {-1.0, 1.0}) {
                    const double lam = lam0 + side * eps * gap;
                    const double n = p.intermediate(lam).matrix.norm();
                    if (eps == 1e-1) scale = std::max(scale, n);
                    probe = std::max(probe, n);
                    const double full = p.blocks(lam).full().norm() / p.blocks(lam0 + side * 1e-1 * gap).full().norm();
                    full_growth = std::max(full_growth, full);
                }
            }
            bounded_ratio = std::max(bounded_ratio, probe / scale);
            min_full_growth = std::min(min_full_growth, full_growth);

            // D zero, in a bracket that excludes lam0.
            const double w = std::min(1e-3 * spacing, 0.5 * gap);
            auto dfun = [&](double lam) {
                const ResonanceSplit sp = resonance_split(p.data(), p.basis(), lam, lam0);
                return denominator_D(sp.phi_minus.col(0), sp.kmm, p.k_minus(lam), lam, lam0, sp.mu);
            };
            const double d_zero = root_in(dfun, root.lambda - w, root.lambda + w);
            // Pole of the intermediate map along its residue direction.
            const Vec v = p.residue_at(root.lambda).phi.normalized();
            // The solver may land on the root itself, where the map refuses to evaluate; 1/<v, M v> is zero there.
            auto inv = [&](double lam) {
                try {
                    return 1.0 / v.dot(p.intermediate(lam).matrix * v);
                } catch (const Error& e) {
                    if (e.kind() != ErrorKind::DispersionRoot) throw;
                    return 0.0;
                }
            };
            const double dn_pole = root_in(inv, root.lambda - w, root.lambda + w);
            route_gap = std::max({route_gap, std::abs(d_zero - root.lambda), std::abs(dn_pole - root.lambda),
                                  std::abs(dn_pole - d_zero)});
            ++roots_checked;
        }
    }
    return {bounded_ratio < 2.0 && min_full_growth > 100.0 && route_gap <= 1e-8 && roots_checked > 0,
            fmt::format("intermediate map growth through L0 levels {:.3g} (full DN map grows at least {:.3g}x), max "
                        "gap between dispersion root, D zero and DN pole {:.2e} over {} roots (tol 1e-8)",
                        bounded_ratio, min_full_growth, route_gap, roots_checked)};
}

Outcome one_pole_bound() {
    // One-wire rectangles of height 2 with the wire at offset 0.3, swept in length.
    int instances = 0, violations = 0;
    double worst_ratio = 0.0, worst_residual = 0.0, min_im = kInf;
    for (int step = 0; step <= 14; ++step) {
        const double a = 1.3 + 0.05 * step;
        const Pipeline p(rect_network(a, 2.0, {{Edge::Left, 0.3}}, 1.5 * kPi * kPi));
        for (const auto& root : p.spectrum().roots) {
            const PoleResidue res = p.residue_at(root.lambda);
            const double gamma = res.phi.squaredNorm() / p.k_plus(root.lambda)[0];
            if (gamma < 1e-8 * p.spacing()) continue;
            const ResonanceSplit split = resonance_split(p.data(), p.basis(), root.lambda,
                                                         nearest_eigenvalue(p.data(), root.lambda));
            const double thin = thin_network_norm(split.kmm, p.k_minus(root.lambda));
            const double w = std::min(2.0 * gamma, 0.05 * p.spacing());
            double d = 0.0, dev = 0.0;
            for (int i = 0; i < 40; ++i) {
                const double lam = root.lambda - w + 2.0 * w * (i + 0.5) / 40.0;
                const Vec k = p.k_plus(lam);
                d = std::max(d, p.remainder(lam, res).cwiseAbs().maxCoeff() / k.minCoeff());
                dev = std::max(dev, (p.scatter(lam).s - s_one_pole(root.lambda, res.phi, k, lam).s).norm());
            }
            if (!(thin < 1.0 && d < 0.3)) continue;
            ++instances;
            const double bound = deviation_bound(d, p.k_plus(root.lambda));
            const ResonanceZero z =
                resonance_zero(root.lambda, res.phi, [&](cplx l) { return k_plus_flux(p.basis(), l); });
            worst_ratio = std::max(worst_ratio, dev / bound);
            worst_residual = std::max(worst_residual, z.residual);
            min_im = std::min(min_im, z.lambda.imag());
            violations += !(dev <= bound && z.residual <= 1e-8 && z.lambda.imag() > 0.0);
        }
    }
    return {instances > 0 && violations == 0,
            fmt::format("{} thin instances, {} violations, max deviation/bound {:.3g}, max zero residual {:.2e}, "
                        "min Im zero {:.3e}",
                        instances, violations, worst_ratio, worst_residual, min_im)};
}

// Background of the exact DN map with its closed rows and columns scaled by t.
class ScaledBackground : public DnBackground {
public:
    ScaledBackground(std::shared_ptr<const DnBackground> inner, std::size_t n_open, double t)
        : inner_(std::move(inner)), n_open_(static_cast<Eigen::Index>(n_open)), t_(t) {}
    Mat evaluate(double lambda) const override {
        Mat m = inner_->evaluate(lambda);
        const Eigen::Index n = m.rows(), c = n - n_open_;
        m.bottomRows(c) *= t_;
        m.rightCols(c) *= t_;
        return m;
    }

private:
    std::shared_ptr<const DnBackground> inner_;
    Eigen::Index n_open_;
    double t_;
};

Outcome shift_asymptotics() {
    const NetworkSpec net = offset_two_wire(20.0);
    const Pipeline base(net);
    const ChannelBasis& basis = base.basis();
    const Band band = base.band();
    const auto n_open = static_cast<Eigen::Index>(basis.n_open());
    // Nondegenerate L0 level inside the band that is best isolated relative to its own shift: the distance to the
    // neighbouring levels divided by the estimated shift at full coupling. Poorly isolated levels make the
    // pairing of roots with levels ambiguous at t = 1.
    Eigen::Index row = -1;
    double best = 0.0;
    const auto& pairs = base.data().pairs;
    for (Eigen::Index r = 0; r < static_cast<Eigen::Index>(base.data().rows()); ++r) {
        const double lam0 = pairs[static_cast<std::size_t>(r)].eigenvalue;
        if (lam0 < band.lo + 0.1 * band.width() || lam0 > band.hi - 0.1 * band.width()) continue;
        const ResonanceSplit sp = resonance_split(base.data(), basis, lam0 - 0.01, lam0);
        if (sp.multiplicity != 1) continue;
        const double shift = std::abs(shift_estimate(sp.phi_minus.col(0), k_minus_flux(basis, lam0), lam0, sp.mu));
        if (!(shift > 0.0)) continue;
        double isolation = kInf;
        for (const auto& q : pairs)
            if (q.eigenvalue != lam0) isolation = std::min(isolation, std::abs(q.eigenvalue - lam0));
        if (isolation / shift > best) best = isolation / shift, row = r;
    }
    if (row < 0) return {false, "no nondegenerate level with closed coupling in the band"};
    const double lam0 = base.data().pairs[static_cast<std::size_t>(row)].eigenvalue;
    std::vector<double> ts, errs;
    for (double t : {1.0, 0.5, 0.25, 0.125}) {
        SpectralData d = base.data();
        d.trace_matrix.rightCols(d.trace_matrix.cols() - n_open) *= t;
        if (d.background) d.background = std::make_shared<ScaledBackground>(d.background, basis.n_open(), t);
        const auto roots = find_roots(d, basis, band);
        double root = kInf;
        for (const auto& r : roots)
            if (std::abs(r.lambda - lam0) < std::abs(root - lam0)) root = r.lambda;
        const ResonanceSplit sp = resonance_split(d, basis, root, lam0);
        const double est = shift_estimate(sp.phi_minus.col(0), k_minus_flux(basis, lam0), lam0, sp.mu);
        ts.push_back(t);
        errs.push_back(std::abs(root - est));
    }
    // Least-squares slope of log error against log t.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(ts.size());
    for (std::size_t i = 0; i < ts.size(); ++i) {
        const double x = std::log(ts[i]), y = std::log(errs[i]);
        sx += x, sy += y, sxx += x * x, sxy += x * y;
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return {std::abs(slope - 4.0) <= 0.5,
            fmt::format("level {:.6f}: errors {:.3e} {:.3e} {:.3e} {:.3e}, log-log slope {:.3f} (tol 4 +- 0.5)", lam0,
                        errs[0], errs[1], errs[2], errs[3], slope)};
}

Outcome jump_start() {
    ScalarModel m{0.0, (Vec(3) << 1.0, 2.6, 4.5).finished(), (Vec(3) << 0.5, 0.3, 0.2).finished()};
    double js_err = 0.0, recon_err = 0.0;
    std::vector<double> full_scaled, comp_max;
    for (double beta : {0.16, 0.08, 0.04, 0.02}) {
        m.beta = beta;
        const cplx k0 = resonance_continuation(m, 0);
        const JumpStart js = fit_jump_start(k0);
        const Factorization f = factorize_and_complement(m, {k0, -std::conj(k0)});
        double full_d = 0.0, comp_d = 0.0;
        const double h = 1e-7;
        for (int i = -200; i <= 200; ++i) {
            const double p = 3.0 * i / 200.0;
            js_err = std::max(js_err, std::abs(jump_start_s(js, p) + jump_start_factor(k0, p)));
            recon_err = std::max(recon_err, std::abs(f.factor_s(p) * f.complement_s(p) - scalar_model_s(m, p)));
        }
        // Derivatives near +-Re k0, within a few widths.
        for (double sign : {-1.0, 1.0})
            for (int i = -40; i <= 40; ++i) {
                const double p = sign * k0.real() + 4.0 * k0.imag() * i / 40.0;
                full_d = std::max(full_d, std::abs(scalar_model_s(m, p + h) - scalar_model_s(m, p - h)) / (2 * h));
                comp_d = std::max(comp_d, std::abs(f.complement_s(p + h) - f.complement_s(p - h)) / (2 * h));
            }
        full_scaled.push_back(full_d * k0.imag());
        comp_max.push_back(comp_d);
    }
    const auto [fmin, fmax] = std::minmax_element(full_scaled.begin(), full_scaled.end());
    const auto [cmin, cmax] = std::minmax_element(comp_max.begin(), comp_max.end());
    // Full derivative times Im k0 stays constant (growth like 1/Im k0); the complement's stays O(1).
    const bool grows = *fmax / *fmin < 1.5;
    const bool bounded = *cmax < 1.0;
    return {js_err <= 1e-12 && recon_err <= 1e-12 && grows && bounded,
            fmt::format("jump-start error {:.2e}, Blaschke reconstruction {:.2e} (tol 1e-12), |S'| Im k0 in [{:.3f}, "
                        "{:.3f}], complement |S'| in [{:.3f}, {:.3f}]",
                        js_err, recon_err, *fmin, *fmax, *cmin, *cmax)};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome determinism(const std::string& cli, const fs::path& scratch) {
    fs::create_directories(scratch);
    const fs::path config = scratch / "determinism.ini";
    {
        std::ofstream out(config);
        out << "[network]\nfermi_level = 20\n\n[wells.W]\ntype = rectangle\na = 2.0\nb = 1.5\n\n"
               "[wires.in]\nwell = W\nedge = left\noffset = 0.0\n\n[wires.out]\nwell = W\nedge = right\noffset = 0.5\n\n"
               "[run]\npoints = 120\n";
    }
    const std::vector<std::string> commands = {"scatter", "eigen", "resonances", "fit-model"};
    auto run = [&](const std::string& cmd, int threads, const std::string& tag) {
        const fs::path out = scratch / tag;
        fs::remove_all(out);
        const std::string line = fmt::format("\"{}\" --config \"{}\" --command {} --threads {} --out \"{}\" > \"{}\" 2>&1",
                                             cli, config.string(), cmd, threads, out.string(),
                                             (scratch / (tag + ".log")).string());
        if (std::system(line.c_str()) != 0) throw std::runtime_error("command failed: " + line);
        std::map<std::string, std::string> files;
        for (const auto& e : fs::directory_iterator(out)) files[e.path().filename().string()] = slurp(e.path());
        return files;
    };
    int compared = 0;
    std::string mismatch;
    for (const auto& cmd : commands) {
        const auto a = run(cmd, 1, cmd + "_a"), b = run(cmd, 1, cmd + "_b"), c = run(cmd, 3, cmd + "_c"),
                   d = run(cmd, 3, cmd + "_d");
        if (a.empty()) mismatch += cmd + " produced no files; ";
        if (a != b) mismatch += cmd + " differs between serial runs; ";
        if (c != d) mismatch += cmd + " differs between threaded runs; ";
        if (a != c) mismatch += cmd + " differs between 1 and 3 threads; ";
        compared += static_cast<int>(a.size());
    }
    return {mismatch.empty(), mismatch.empty() ? fmt::format("{} output files identical across 4 runs each", compared)
                                               : mismatch};
}

} // namespace

int main(int argc, char** argv) {
    if (argc < 3) {
        fmt::print(stderr, "usage: {} <qnet binary> <scratch directory>\n", argv[0]);
        return 2;
    }
    const std::string cli = argv[1];
    const fs::path scratch = argv[2];
    struct Criterion {
        std::string name;
        double budget; // seconds
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria = {
        {"unitarity suite", 60, unitarity_suite},
        {"route equivalence", 60, route_equivalence},
        {"straight-through identity", 60, straight_through_identity},
        {"separable one-dimensional oracle", 60, separable_oracle},
        {"finite-difference oracle", 600, fdm_oracle},
        {"pole cancellation and root routes", 60, pole_cancellation},
        {"one-pole bound", 60, one_pole_bound},
        {"shift asymptotics", 60, shift_asymptotics},
        {"jump-start factorization", 60, jump_start},
        {"determinism", 60, [&] { return determinism(cli, scratch); }},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (secs > criteria[i].budget) {
            o.pass = false;
            o.detail += fmt::format("; over the {:.0f} s budget", criteria[i].budget);
        }
        fmt::print("{} {:2d} {}: {} [{:.1f} s]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].name, o.detail, secs);
        std::fflush(stdout);
        failed += !o.pass;
    }
    return failed == 0 ? 0 : 1;
}
