#include "qnet/fdm_oracle.hpp"

#include "qnet/parallel.hpp"

#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

namespace qnet {

namespace {

constexpr double kPi = std::numbers::pi;

int grid_count(double x, double h, const char* what) {
    const double r = x / h;
    if (std::abs(r - std::round(r)) > 1e-9 * std::max(1.0, r))
        throw Error(ErrorKind::InvalidGeometry, std::string(what) + " is not a multiple of the grid step");
    return static_cast<int>(std::lround(r));
}

// Discrete transverse eigenvalue of mode s.
double transverse_level(const GridScene::WireGrid& w, int s, double h) {
    return (1.0 - std::cos(s * kPi / w.n)) / (w.mu_perp * h * h) + w.potential;
}

double axial_c(const GridScene::WireGrid& w, int s, double lambda, double h) {
    return 1.0 - w.mu_par * h * h * (lambda - transverse_level(w, s, h));
}

} // namespace

double GridScene::mode(const WireGrid& w, int s, int t) { return std::sqrt(2.0 / w.n) * std::sin(s * kPi * t / w.n); }

GridScene::GridScene(const NetworkSpec& net, const ChannelBasis& basis, double h, double lambda_max)
    : basis_(basis), h_(h) {
    if (net.wells.size() != 1) throw Error(ErrorKind::Configuration, "the grid oracle handles a single well");
    const WellSpec& well = net.wells.front();
    GridWell gw(well, h);
    const int nx = gw.nx(), ny = gw.ny();
    n_unknowns_ = gw.unknowns();

    double min_decay = kInf;
    for (const auto& m : basis.closed_modes)
        if (lambda_max < m.threshold) min_decay = std::min(min_decay, std::sqrt(2.0 * m.mass_par * (m.threshold - lambda_max)));
    double l_tr = std::isfinite(min_decay) ? 6.0 / min_decay : 1.0;

    std::map<std::pair<int, int>, std::pair<std::size_t, int>> interface; // (i, j) -> (wire grid, t)
    for (std::size_t wi = 0; wi < net.wires.size(); ++wi) {
        const WireSpec& ws = net.wires[wi];
        if (!ws.semi_infinite())
            throw Error(ErrorKind::Configuration, "the grid oracle handles semi-infinite wires only");
        WireGrid w;
        w.wire_index = wi;
        w.edge = ws.attachments.front().edge;
        w.first = grid_count(ws.attachments.front().offset, h, "wire offset");
        w.n = grid_count(ws.width, h, "wire width");
        if (w.n < 2) throw Error(ErrorKind::InvalidGeometry, "wire '" + ws.id + "' is narrower than two grid steps");
        w.columns = std::max(4, static_cast<int>(std::ceil(std::min(l_tr, 50.0 * ws.width) / h)));
        w.mu_par = ws.mass_par;
        w.mu_perp = ws.mass_perp;
        w.potential = ws.potential;
        w.node.resize(static_cast<std::size_t>((w.columns + 1) * (w.n - 1)));
        for (int c = 0; c <= w.columns; ++c)
            for (int t = 1; t < w.n; ++t) w.node[static_cast<std::size_t>(c * (w.n - 1) + (t - 1))] = n_unknowns_++;
        for (int t = 1; t < w.n; ++t) {
            const int k = w.first + t;
            std::pair<int, int> ij;
            switch (w.edge) {
            case Edge::Left: ij = {0, k}; break;
            case Edge::Right: ij = {nx, k}; break;
            case Edge::Bottom: ij = {k, 0}; break;
            case Edge::Top: ij = {k, ny}; break;
            }
            interface[ij] = {wires_.size(), t};
        }
        wires_.push_back(std::move(w));
    }
    auto well_unknown = [&](int i, int j) -> int {
        if (i > 0 && i < nx && j > 0 && j < ny) return gw.index(i, j);
        auto it = interface.find({i, j});
        if (it == interface.end()) return -1;
        return wires_[it->second.first].at(0, it->second.second);
    };

    const double ct = 1.0 / (2.0 * well.mass * h * h);
    auto& trip = static_part_;
    // Well interior.
    for (int j = 1; j < ny; ++j)
        for (int i = 1; i < nx; ++i) {
            const int k = gw.index(i, j);
            if (k < 0) continue;
            trip.emplace_back(k, k, 4.0 * ct + gw.node_potential(i, j));
            const int nb[4][2] = {{i - 1, j}, {i + 1, j}, {i, j - 1}, {i, j + 1}};
            for (const auto& q : nb) {
                const int m = well_unknown(q[0], q[1]);
                if (m >= 0) trip.emplace_back(k, m, -ct);
            }
        }
    // Interface columns and wires.
    for (const auto& w : wires_) {
        const double cax = 1.0 / (2.0 * w.mu_par * h * h);
        const double cperp = 1.0 / (2.0 * w.mu_perp * h * h);
        const double cmix = 0.5 * (ct + cperp);
        for (int t = 1; t < w.n; ++t) {
            const int k = w.at(0, t);
            const int e = w.first + t;
            int ii = 0, jj = 0, di = 0, dj = 0; // interface node and inward step
            switch (w.edge) {
            case Edge::Left: ii = 0; jj = e; di = 1; break;
            case Edge::Right: ii = nx; jj = e; di = -1; break;
            case Edge::Bottom: ii = e; jj = 0; dj = 1; break;
            case Edge::Top: ii = e; jj = ny; dj = -1; break;
            }
            trip.emplace_back(k, k, ct + cax + 2.0 * cmix + 0.5 * (gw.node_potential(ii, jj) + w.potential));
            const int in = well_unknown(ii + di, jj + dj);
            if (in >= 0) {
                trip.emplace_back(k, in, -ct);
            }
            trip.emplace_back(k, w.at(1, t), -cax);
            if (t > 1) trip.emplace_back(k, w.at(0, t - 1), -cmix);
            if (t + 1 < w.n) trip.emplace_back(k, w.at(0, t + 1), -cmix);
        }
        for (int c = 1; c <= w.columns; ++c)
            for (int t = 1; t < w.n; ++t) {
                const int k = w.at(c, t);
                trip.emplace_back(k, k, 2.0 * cax + 2.0 * cperp + w.potential);
                trip.emplace_back(k, w.at(c - 1, t), -cax);
                if (c < w.columns) trip.emplace_back(k, w.at(c + 1, t), -cax);
                if (t > 1) trip.emplace_back(k, w.at(c, t - 1), -cperp);
                if (t + 1 < w.n) trip.emplace_back(k, w.at(c, t + 1), -cperp);
            }
    }

    auto grid_of = [&](std::size_t wire_index) {
        for (std::size_t g = 0; g < wires_.size(); ++g)
            if (wires_[g].wire_index == wire_index) return g;
        throw Error(ErrorKind::Configuration, "channel on a wire outside the scene");
    };
    for (const auto& m : basis.open_modes) open_modes_.emplace_back(grid_of(m.wire_index), m.s);
    for (const auto& m : basis.closed_modes) closed_modes_.emplace_back(grid_of(m.wire_index), m.s);
}

bool GridScene::propagating(const WireGrid& w, int s, double lambda) const {
    return std::abs(axial_c(w, s, lambda, h_)) < 1.0;
}

// Root of zeta + 1/zeta = 2c: on the unit circle with positive argument for
// propagating modes (positive group velocity), inside it for decaying ones.
cplx GridScene::outgoing_factor(const WireGrid& w, int s, double lambda) const {
    const double c = axial_c(w, s, lambda, h_);
    if (std::abs(c) < 1.0) return std::polar(1.0, std::acos(c));
    return c >= 1.0 ? c - std::sqrt(c * c - 1.0) : c + std::sqrt(c * c - 1.0);
}

GridScene::Solution GridScene::solve(double lambda) const {
    const double h = h_;
    auto factor = [&](const WireGrid& w, int s) { return outgoing_factor(w, s, lambda); };
    auto is_open = [&](const WireGrid& w, int s) { return propagating(w, s, lambda); };

    // Discrete and continuum open sets must agree.
    for (std::size_t g = 0; g < wires_.size(); ++g) {
        int discrete = 0, continuum = 0;
        for (int s = 1; s < wires_[g].n; ++s) discrete += is_open(wires_[g], s);
        for (const auto& m : open_modes_) continuum += m.first == g;
        if (discrete != continuum)
            throw Error(ErrorKind::BandEdge, "grid and continuum disagree on the number of open modes at " +
                                                 std::to_string(lambda) + "; refine h or move away from the threshold");
    }

    std::vector<Eigen::Triplet<cplx>> trip;
    trip.reserve(static_part_.size() + static_cast<std::size_t>(n_unknowns_));
    for (const auto& t : static_part_) trip.emplace_back(t.row(), t.col(), cplx(t.value()));
    for (int k = 0; k < n_unknowns_; ++k) trip.emplace_back(k, k, cplx(-lambda));
    for (const auto& w : wires_) {
        const double cax = 1.0 / (2.0 * w.mu_par * h * h);
        std::vector<cplx> z(static_cast<std::size_t>(w.n));
        for (int s = 1; s < w.n; ++s) z[static_cast<std::size_t>(s)] = factor(w, s);
        for (int t = 1; t < w.n; ++t)
            for (int u = 1; u < w.n; ++u) {
                cplx acc = 0.0;
                for (int s = 1; s < w.n; ++s) acc += z[static_cast<std::size_t>(s)] * mode(w, s, t) * mode(w, s, u);
                trip.emplace_back(w.at(w.columns, t), w.at(w.columns, u), -cax * acc);
            }
    }
    Eigen::SparseMatrix<cplx> a(n_unknowns_, n_unknowns_);
    a.setFromTriplets(trip.begin(), trip.end());
    a.makeCompressed();
    Eigen::SparseLU<Eigen::SparseMatrix<cplx>> lu;
    lu.analyzePattern(a);
    lu.factorize(a);
    if (lu.info() != Eigen::Success)
        throw Error(ErrorKind::NumericalSingularity, "grid scattering system is singular at " + std::to_string(lambda) +
                                                         "; adjust h or the truncation length");

    const auto no = static_cast<Eigen::Index>(open_modes_.size());
    CMat rhs = CMat::Zero(n_unknowns_, no);
    for (Eigen::Index col = 0; col < no; ++col) {
        const auto [g, s0] = open_modes_[static_cast<std::size_t>(col)];
        const WireGrid& w = wires_[g];
        const double cax = 1.0 / (2.0 * w.mu_par * h * h);
        const cplx zo = factor(w, s0), zi = 1.0 / zo;
        const cplx amp = cax * std::pow(zi, w.columns) * (zi - zo);
        for (int t = 1; t < w.n; ++t) rhs(w.at(w.columns, t), col) = amp * mode(w, s0, t);
    }
    const CMat u = lu.solve(rhs);

    auto project = [&](const WireGrid& w, int s, int column, Eigen::Index col) {
        cplx acc = 0.0;
        for (int t = 1; t < w.n; ++t) acc += mode(w, s, t) * u(w.at(column, t), col);
        return acc;
    };
    Solution out;
    out.s.resize(no, no);
    Vec flux(no);
    for (Eigen::Index r = 0; r < no; ++r) {
        const auto [g, s] = open_modes_[static_cast<std::size_t>(r)];
        const WireGrid& w = wires_[g];
        const cplx zo = factor(w, s), zi = 1.0 / zo;
        flux[r] = std::sin(std::arg(zo)) / w.mu_par;
        Eigen::Matrix2cd m;
        m << zi, zo, zi * zi, zo * zo;
        const Eigen::PartialPivLU<Eigen::Matrix2cd> fit(m);
        for (Eigen::Index col = 0; col < no; ++col) {
            const Eigen::Vector2cd c(project(w, s, 1, col), project(w, s, 2, col));
            const Eigen::Vector2cd ab = fit.solve(c);
            out.s(r, col) = ab[1];
            out.incoming_fit_error = std::max(out.incoming_fit_error, std::abs(ab[0] - cplx(r == col ? 1.0 : 0.0)));
        }
    }
    const Vec root = flux.cwiseSqrt();
    out.s_flux = root.cast<cplx>().asDiagonal() * out.s * root.cwiseInverse().cast<cplx>().asDiagonal();
    out.unitarity_defect =
        no ? Eigen::JacobiSVD<CMat>(out.s_flux.adjoint() * out.s_flux - CMat::Identity(no, no)).singularValues()[0] : 0.0;

    const auto nc = static_cast<Eigen::Index>(closed_modes_.size());
    out.evanescent = CMat::Zero(nc, no);
    for (Eigen::Index r = 0; r < nc; ++r) {
        const auto [g, s] = closed_modes_[static_cast<std::size_t>(r)];
        const WireGrid& w = wires_[g];
        if (s >= w.n) continue; // not representable on this grid
        const cplx z = factor(w, s);
        for (Eigen::Index col = 0; col < no; ++col) out.evanescent(r, col) = project(w, s, 1, col) / z;
    }
    return out;
}

std::vector<OracleRow> oracle_compare(const Pipeline& pipeline, const std::vector<double>& lambdas, double h,
                                      int threads) {
    const double lmax = lambdas.empty() ? pipeline.band().lo : *std::max_element(lambdas.begin(), lambdas.end());
    const GridScene scene(pipeline.network(), pipeline.basis(), h, lmax);
    std::vector<OracleRow> rows(lambdas.size());
    parallel_for(lambdas.size(), threads, [&](std::size_t i) {
        const double lam = lambdas[i];
        const ScatteringMatrix dn = pipeline.scatter(lam);
        const GridScene::Solution fd = scene.solve(lam);
        OracleRow row;
        row.lambda = lam;
        row.deviation = (dn.s_flux - fd.s_flux).cwiseAbs().maxCoeff();
        const Eigen::Index r = dn.s.rows() > 1 ? 1 : 0;
        row.t_dn = std::norm(dn.s_flux(r, 0));
        row.t_fdm = std::norm(fd.s_flux(r, 0));
        row.fdm_defect = fd.unitarity_defect;
        rows[i] = row;
    });
    return rows;
}

} // namespace qnet
