#include "qnet/well_spectra.hpp"

#include "qnet/exact_dn.hpp"

#include <Eigen/SparseCholesky>

#include <functional>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

namespace qnet {

namespace {

constexpr double kPi = std::numbers::pi;

bool multiple_of(double x, double h) {
    double r = x / h;
    return std::abs(r - std::round(r)) < 1e-9 * std::max(1.0, std::abs(r));
}

} // namespace

std::vector<EigenPair> rectangle_spectrum(const WellSpec& well, double lambda_cut, Warnings* warnings) {
    if (!well.is_rectangle()) throw Error(ErrorKind::InvalidGeometry, "well '" + well.id + "' is not a rectangle");
    const double a = well.width(), b = well.height(), c = kPi * kPi / (2.0 * well.mass);
    std::vector<EigenPair> out;
    for (int p = 1;; ++p) {
        if (well.potential + c * (p * p / (a * a) + 1.0 / (b * b)) > lambda_cut) break;
        for (int q = 1;; ++q) {
            double lam = well.potential + c * (p * p / (a * a) + q * q / (b * b));
            if (lam > lambda_cut) break;
            EigenPair e;
            e.eigenvalue = lam;
            e.well = well.id;
            e.mass = well.mass;
            e.p = p;
            e.q = q;
            out.push_back(e);
        }
    }
    std::sort(out.begin(), out.end(), [](const EigenPair& x, const EigenPair& y) {
        if (x.eigenvalue != y.eigenvalue) return x.eigenvalue < y.eigenvalue;
        return x.p != y.p ? x.p < y.p : x.q < y.q;
    });
    for (std::size_t i = 0; i < out.size(); ++i) out[i].index = static_cast<int>(i);
    if (out.empty()) warn(warnings, "lambda_cut below the ground state of well '" + well.id + "'");
    return out;
}

namespace {

// Analytic normal derivative factor and tangential mode of phi_pq on an edge.
double rectangle_trace(const EigenPair& e, const WellSpec& well, Edge edge, int s, double t0, double width) {
    const double a = well.width(), b = well.height(), amp = 2.0 / std::sqrt(a * b);
    const int p = e.p, q = e.q;
    switch (edge) {
    case Edge::Left: return -amp * (p * kPi / a) * sine_overlap(s, t0, width, q, b);
    case Edge::Right: return amp * (p * kPi / a) * (p % 2 == 0 ? 1.0 : -1.0) * sine_overlap(s, t0, width, q, b);
    case Edge::Bottom: return -amp * (q * kPi / b) * sine_overlap(s, t0, width, p, a);
    case Edge::Top: return amp * (q * kPi / b) * (q % 2 == 0 ? 1.0 : -1.0) * sine_overlap(s, t0, width, p, a);
    }
    return 0.0;
}

double mode_value(int s, double t0, double width, double t) {
    return std::sqrt(2.0 / width) * std::sin(s * kPi * (t - t0) / width);
}

Vec grid_trace_row(const Vec& phi, const GridWell& grid, const std::vector<SectionColumns>& sections, int n_cols) {
    Vec row = Vec::Zero(n_cols);
    for (const auto& sec : sections) {
        auto nodes = grid.section_nodes(sec.edge, sec.t0, sec.width);
        for (std::size_t k = 0; k < sec.cols.size(); ++k) {
            double acc = 0.0;
            for (const auto& nd : nodes) acc -= mode_value(sec.s[k], sec.t0, sec.width, nd.t) * phi[nd.inner];
            row[sec.cols[k]] = acc;
        }
    }
    return row;
}

} // namespace

Vec boundary_trace_coeffs(const EigenPair& pair, const NetworkSpec& net, const ChannelBasis& basis) {
    const WellSpec& well = net.well(pair.well);
    const auto sections = well_sections(net, pair.well, basis);
    const int n = static_cast<int>(basis.size());
    if (pair.grid_vector.size() > 0) {
        const auto* g = std::get_if<GridGeometry>(&well.geometry);
        if (!g) throw Error(ErrorKind::InvalidGeometry, "grid eigenpair on a non-grid well");
        GridWell grid(well, g->h);
        return grid_trace_row(pair.grid_vector, grid, sections, n);
    }
    if (!well.is_rectangle()) throw Error(ErrorKind::InvalidGeometry, "analytic trace needs a rectangular well");
    Vec row = Vec::Zero(n);
    for (const auto& sec : sections)
        for (std::size_t k = 0; k < sec.cols.size(); ++k)
            row[sec.cols[k]] = rectangle_trace(pair, well, sec.edge, sec.s[k], sec.t0, sec.width);
    return row;
}

// ---------------------------------------------------------------------------
// Grid discretization

GridWell::GridWell(const WellSpec& well, double h) : spec_(well), h_(h) {
    if (!(h > 0)) throw Error(ErrorKind::InvalidGeometry, "grid step must be positive");
    if (!multiple_of(well.width(), h) || !multiple_of(well.height(), h))
        throw Error(ErrorKind::InvalidGeometry, "grid step must divide the sides of well '" + well.id + "'");
    nx_ = static_cast<int>(std::lround(well.width() / h));
    ny_ = static_cast<int>(std::lround(well.height() / h));
    const auto* grid = std::get_if<GridGeometry>(&well.geometry);
    const double tol = 1e-9 * h;
    auto blocked = [&](double x, double y) {
        if (!grid) return false;
        for (const auto& box : grid->obstacles)
            if (x >= box.x0 - tol && x <= box.x1 + tol && y >= box.y0 - tol && y <= box.y1 + tol) return true;
        return false;
    };
    map_.assign(static_cast<std::size_t>((nx_ + 1) * (ny_ + 1)), -1);
    for (int j = 1; j < ny_; ++j)
        for (int i = 1; i < nx_; ++i)
            if (!blocked(i * h, j * h)) {
                map_[static_cast<std::size_t>(j * (nx_ + 1) + i)] = static_cast<int>(nodes_.size());
                nodes_.emplace_back(i, j);
            }
    const double c = 1.0 / (2.0 * well.mass * h * h);
    std::vector<Eigen::Triplet<double>> trip;
    for (std::size_t k = 0; k < nodes_.size(); ++k) {
        auto [i, j] = nodes_[k];
        const double v = node_potential(i, j);
        trip.emplace_back(static_cast<int>(k), static_cast<int>(k), 4.0 * c + v);
        const int nb[4][2] = {{i - 1, j}, {i + 1, j}, {i, j - 1}, {i, j + 1}};
        for (const auto& ij : nb) {
            int m = index(ij[0], ij[1]);
            if (m >= 0) trip.emplace_back(static_cast<int>(k), m, -c);
        }
    }
    op_ = std::make_shared<Eigen::SparseMatrix<double>>(unknowns(), unknowns());
    op_->setFromTriplets(trip.begin(), trip.end());
    op_->makeCompressed();
}

double GridWell::node_potential(int i, int j) const {
    double v = spec_.potential;
    const auto* grid = std::get_if<GridGeometry>(&spec_.geometry);
    if (!grid) return v;
    const double x = i * h_, y = j * h_, tol = 1e-9 * h_;
    for (const auto& [box, dv] : grid->patches)
        if (x >= box.x0 - tol && x <= box.x1 + tol && y >= box.y0 - tol && y <= box.y1 + tol) v += dv;
    return v;
}

int GridWell::index(int i, int j) const {
    if (i < 0 || j < 0 || i > nx_ || j > ny_) return -1;
    return map_[static_cast<std::size_t>(j * (nx_ + 1) + i)];
}

const Eigen::SparseMatrix<double>& GridWell::operator_matrix() const { return *op_; }

std::vector<GridWell::SectionNode> GridWell::section_nodes(Edge edge, double offset, double width) const {
    if (!multiple_of(offset, h_) || !multiple_of(width, h_))
        throw Error(ErrorKind::InvalidGeometry, "wire section is not aligned with the grid of well '" + spec_.id + "'");
    const int j0 = static_cast<int>(std::lround(offset / h_)), n = static_cast<int>(std::lround(width / h_));
    std::vector<SectionNode> out;
    for (int k = j0 + 1; k < j0 + n; ++k) {
        int inner = -1;
        switch (edge) {
        case Edge::Left: inner = index(1, k); break;
        case Edge::Right: inner = index(nx_ - 1, k); break;
        case Edge::Bottom: inner = index(k, 1); break;
        case Edge::Top: inner = index(k, ny_ - 1); break;
        }
        if (inner < 0)
            throw Error(ErrorKind::InvalidGeometry, "wire section on the " + std::string(to_string(edge)) +
                                                        " edge of well '" + spec_.id + "' touches an obstacle");
        out.push_back({k * h_, inner});
    }
    return out;
}

GridEigenResult fdm_spectrum(const GridWell& grid, double lambda_cut) {
    const auto& a = grid.operator_matrix();
    const int n = grid.unknowns();
    GridEigenResult res;
    if (n == 0) return res;

    double vmin = a.coeff(0, 0);
    for (int k = 0; k < n; ++k) vmin = std::min(vmin, a.coeff(k, k));
    const double four_c = 4.0 / (2.0 * grid.spec().mass * grid.h() * grid.h());
    const double sigma = vmin - four_c - 1.0; // below the spectrum (Gershgorin)
    Eigen::SparseMatrix<double> shifted = a;
    for (int k = 0; k < n; ++k) shifted.coeffRef(k, k) -= sigma;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(shifted);
    if (ldlt.info() != Eigen::Success) throw Error(ErrorKind::NoConvergence, "grid eigen-solve: factorization failed");

    const WellSpec& w = grid.spec();
    double weyl = w.mass * w.width() * w.height() * std::max(0.0, lambda_cut - (vmin - four_c)) / (2.0 * kPi);
    int m = std::min(n, std::max(80, 2 * static_cast<int>(weyl) + 40));

    Mat locked(n, 0);
    std::vector<double> vals;
    std::mt19937_64 rng(20240917);
    std::normal_distribution<double> normal;
    auto orth = [&](Vec& v, const Mat& basis) {
        if (basis.cols() == 0) return;
        for (int pass = 0; pass < 2; ++pass) v -= basis * (basis.transpose() * v);
    };
    auto tol_of = [](double lam) { return 1e-9 * std::max(1.0, std::abs(lam)); };

    bool done = false;
    for (int run = 0; run < 60 && !done; ++run) {
        res.lanczos_runs = run + 1;
        const int room = n - static_cast<int>(locked.cols());
        if (room <= 0) break;
        const int steps = std::min(m, room);
        Mat v(n, steps + 1);
        Vec alpha(steps), beta(steps);
        Vec x(n);
        for (int k = 0; k < n; ++k) x[k] = normal(rng);
        orth(x, locked);
        v.col(0) = x.normalized();
        int used = steps;
        for (int j = 0; j < steps; ++j) {
            Vec wv = ldlt.solve(Vec(v.col(j)));
            orth(wv, locked);
            alpha[j] = v.col(j).dot(wv);
            for (int pass = 0; pass < 2; ++pass) wv -= v.leftCols(j + 1) * (v.leftCols(j + 1).transpose() * wv);
            beta[j] = wv.norm();
            if (beta[j] < 1e-13 * std::abs(alpha[j]) || j + 1 == steps) {
                used = j + 1;
                break;
            }
            v.col(j + 1) = wv / beta[j];
        }
        Mat t = Mat::Zero(used, used);
        for (int j = 0; j < used; ++j) {
            t(j, j) = alpha[j];
            if (j + 1 < used) t(j, j + 1) = t(j + 1, j) = beta[j];
        }
        Eigen::SelfAdjointEigenSolver<Mat> es(t);
        const Mat ritz = v.leftCols(used) * es.eigenvectors();
        const bool exhaustive = used == room;
        bool top_converged = false;
        double top_lambda = kInf;
        std::vector<std::pair<double, Vec>> accepted;
        for (int k = used - 1; k >= 0; --k) {
            double theta = es.eigenvalues()[k];
            if (!(theta > 0)) continue;
            double lam = sigma + 1.0 / theta;
            Vec xk = ritz.col(k).normalized();
            double r = (a * xk - lam * xk).norm();
            bool conv = r <= tol_of(lam);
            if (k == used - 1) {
                top_converged = conv;
                top_lambda = lam;
            }
            res.max_residual = conv ? std::max(res.max_residual, r) : res.max_residual;
            if ((conv || exhaustive) && lam <= lambda_cut) accepted.emplace_back(lam, xk);
        }
        for (auto& [lam, xk] : accepted) {
            orth(xk, locked);
            double nrm = xk.norm();
            if (nrm < 1e-6) continue;
            locked.conservativeResize(Eigen::NoChange, locked.cols() + 1);
            locked.col(locked.cols() - 1) = xk / nrm;
            vals.push_back(lam);
        }
        if (exhaustive || (top_converged && top_lambda > lambda_cut)) done = true;
        else if (accepted.empty()) m = std::min(n, 2 * m);
    }
    if (!done)
        throw Error(ErrorKind::NoConvergence, "grid eigen-solve did not converge after " +
                                                  std::to_string(res.lanczos_runs) + " Lanczos runs (" +
                                                  std::to_string(vals.size()) + " pairs locked)");
    // Final Rayleigh-Ritz on the locked space restores exact orthogonality
    // and separates near-degenerate clusters consistently.
    if (locked.cols() > 0) {
        Mat hproj = locked.transpose() * (a * locked);
        Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (hproj + hproj.transpose()));
        Mat vecs = locked * es.eigenvectors();
        for (int k = 0; k < vecs.cols(); ++k) {
            double lam = es.eigenvalues()[k];
            if (lam > lambda_cut) continue;
            Vec xk = vecs.col(k).normalized();
            Eigen::Index imax;
            xk.cwiseAbs().maxCoeff(&imax);
            if (xk[imax] < 0) xk = -xk;
            EigenPair e;
            e.eigenvalue = lam;
            e.well = w.id;
            e.mass = w.mass;
            e.grid_vector = xk / grid.h();
            res.pairs.push_back(std::move(e));
        }
    }
    for (std::size_t i = 0; i < res.pairs.size(); ++i) res.pairs[i].index = static_cast<int>(i);
    return res;
}

SpectralData fdm_spectrum(const NetworkSpec& net, const std::string& well_id, const ChannelBasis& basis,
                          double lambda_cut) {
    const WellSpec& well = net.well(well_id);
    const auto* g = std::get_if<GridGeometry>(&well.geometry);
    double h = g ? g->h : std::min(well.width(), well.height()) / 64.0;
    GridWell grid(well, h);
    auto eig = fdm_spectrum(grid, lambda_cut);
    const auto sections = well_sections(net, well_id, basis);
    const int n = static_cast<int>(basis.size());
    SpectralData d;
    d.lambda_cut = lambda_cut;
    d.pairs = std::move(eig.pairs);
    d.trace_matrix = Mat::Zero(static_cast<Eigen::Index>(d.pairs.size()), n);
    d.prefactor = Vec::Constant(static_cast<Eigen::Index>(d.pairs.size()), 1.0 / std::pow(2.0 * well.mass, 2));
    for (std::size_t r = 0; r < d.pairs.size(); ++r)
        d.trace_matrix.row(static_cast<Eigen::Index>(r)) = grid_trace_row(d.pairs[r].grid_vector, grid, sections, n);
    return d;
}

// ---------------------------------------------------------------------------
// Network assembly

double default_lambda_cut(const NetworkSpec& net) { return net.fermi_level + 40.0 * level_spacing(net, net.fermi_level); }

namespace {

// Exact DN map of one well minus the polar terms retained for it.
class WellBackground : public DnBackground {
public:
    WellBackground(std::function<Mat(double)> exact, Vec lambdas, Vec pref, Mat traces)
        : exact_(std::move(exact)), lambdas_(std::move(lambdas)), pref_(std::move(pref)), traces_(std::move(traces)) {}

    // The subtraction cancels the poles of the exact map, so the background is
    // smooth through every retained level. Right at a level both terms are
    // infinite; there the value is interpolated from two points just outside.
    Mat evaluate(double lambda) const override {
        for (Eigen::Index r = 0; r < lambdas_.size(); ++r) {
            const double delta = kRemovableRadius * std::max(1.0, std::abs(lambdas_[r]));
            const double offset = lambda - lambdas_[r];
            if (std::abs(offset) < delta) {
                const double w = 0.5 * (1.0 + offset / delta);
                return (1.0 - w) * direct(lambdas_[r] - delta) + w * direct(lambdas_[r] + delta);
            }
        }
        return direct(lambda);
    }

private:
    static constexpr double kRemovableRadius = 1e-5;

    Mat direct(double lambda) const {
        Mat out = exact_(lambda);
        for (Eigen::Index r = 0; r < traces_.rows(); ++r)
            out.noalias() -= (pref_[r] / (lambda - lambdas_[r])) * traces_.row(r).transpose() * traces_.row(r);
        return out;
    }

    std::function<Mat(double)> exact_;
    Vec lambdas_, pref_;
    Mat traces_;
};

class SumBackground : public DnBackground {
public:
    explicit SumBackground(std::vector<std::shared_ptr<const DnBackground>> parts, int n)
        : parts_(std::move(parts)), n_(n) {}
    Mat evaluate(double lambda) const override {
        Mat out = Mat::Zero(n_, n_);
        for (const auto& p : parts_) out += p->evaluate(lambda);
        return out;
    }

private:
    std::vector<std::shared_ptr<const DnBackground>> parts_;
    int n_;
};

} // namespace

SpectralData build_spectral_data(const NetworkSpec& net, const ChannelBasis& basis, SpectralOptions opts,
                                 Warnings* warnings) {
    validate(net);
    for (const auto& w : net.wires)
        if (!w.semi_infinite())
            throw Error(ErrorKind::Configuration, "wire '" + w.id +
                                                      "' is finite: the DN pipeline supports wells joined only by "
                                                      "semi-infinite wires");
    const double cut = std::isnan(opts.lambda_cut) ? default_lambda_cut(net) : opts.lambda_cut;
    const int n = static_cast<int>(basis.size());

    struct Row { EigenPair pair; Vec trace; double pref; };
    std::vector<Row> rows;
    std::vector<std::shared_ptr<const DnBackground>> parts;
    for (const auto& well : net.wells) {
        auto sections = well_sections(net, well.id, basis);
        std::vector<Row> mine;
        std::function<Mat(double)> exact;
        if (well.is_rectangle()) {
            for (auto& e : rectangle_spectrum(well, cut, warnings))
                mine.push_back({e, boundary_trace_coeffs(e, net, basis), 1.0 / std::pow(2.0 * well.mass, 2)});
            if (opts.exact_background && !sections.empty()) {
                auto dn = std::make_shared<RectangleDn>(well, sections, n);
                exact = [dn](double l) { return dn->evaluate(l); };
            }
        } else {
            const auto& g = std::get<GridGeometry>(well.geometry);
            auto grid = std::make_shared<GridWell>(well, g.h);
            auto eig = fdm_spectrum(*grid, cut);
            for (auto& e : eig.pairs) {
                Vec tr = grid_trace_row(e.grid_vector, *grid, sections, n);
                mine.push_back({std::move(e), std::move(tr), 1.0 / std::pow(2.0 * well.mass, 2)});
            }
            if (opts.exact_background && !sections.empty()) {
                auto dn = std::make_shared<GridDn>(grid, sections, n);
                exact = [dn](double l) { return dn->evaluate(l); };
            }
        }
        if (exact) {
            Vec lams(static_cast<Eigen::Index>(mine.size())), pref(lams.size());
            Mat tr(lams.size(), n);
            for (std::size_t r = 0; r < mine.size(); ++r) {
                lams[static_cast<Eigen::Index>(r)] = mine[r].pair.eigenvalue;
                pref[static_cast<Eigen::Index>(r)] = mine[r].pref;
                tr.row(static_cast<Eigen::Index>(r)) = mine[r].trace;
            }
            parts.push_back(std::make_shared<WellBackground>(exact, lams, pref, tr));
        }
        for (auto& r : mine) rows.push_back(std::move(r));
    }
    std::stable_sort(rows.begin(), rows.end(),
                     [](const Row& x, const Row& y) { return x.pair.eigenvalue < y.pair.eigenvalue; });
    SpectralData d;
    d.lambda_cut = cut;
    d.trace_matrix = Mat::Zero(static_cast<Eigen::Index>(rows.size()), n);
    d.prefactor = Vec::Zero(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        rows[r].pair.index = static_cast<int>(r);
        d.trace_matrix.row(static_cast<Eigen::Index>(r)) = rows[r].trace;
        d.prefactor[static_cast<Eigen::Index>(r)] = rows[r].pref;
        d.pairs.push_back(std::move(rows[r].pair));
    }
    if (!parts.empty()) d.background = std::make_shared<SumBackground>(std::move(parts), n);
    return d;
}

// ---------------------------------------------------------------------------
// Table I/O

void write_spectral_table(std::ostream& os, const SpectralData& data) {
    os << "qnet-spectral-table 1\n";
    os << std::setprecision(17);
    os << "rows " << data.rows() << " cols " << data.cols() << " lambda_cut " << data.lambda_cut << "\n";
    for (std::size_t r = 0; r < data.rows(); ++r) {
        const auto ri = static_cast<Eigen::Index>(r);
        os << data.pairs[r].index << ' ' << data.pairs[r].eigenvalue << ' ' << data.prefactor[ri];
        for (Eigen::Index c = 0; c < data.trace_matrix.cols(); ++c) os << ' ' << data.trace_matrix(ri, c);
        os << '\n';
    }
}

SpectralData read_spectral_table(std::istream& is) {
    auto fail = [](const std::string& m) { throw Error(ErrorKind::Io, "spectral table: " + m); };
    std::string tag;
    int version = 0;
    if (!(is >> tag >> version) || tag != "qnet-spectral-table") fail("missing header");
    if (version != 1) fail("unsupported version " + std::to_string(version));
    std::string k1, k2, k3;
    std::size_t rows = 0, cols = 0;
    SpectralData d;
    if (!(is >> k1 >> rows >> k2 >> cols >> k3 >> d.lambda_cut) || k1 != "rows" || k2 != "cols" || k3 != "lambda_cut")
        fail("malformed size line");
    d.trace_matrix = Mat::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    d.prefactor = Vec::Zero(static_cast<Eigen::Index>(rows));
    double prev = -kInf;
    for (std::size_t r = 0; r < rows; ++r) {
        EigenPair e;
        const auto ri = static_cast<Eigen::Index>(r);
        if (!(is >> e.index >> e.eigenvalue >> d.prefactor[ri])) fail("row " + std::to_string(r) + " truncated");
        for (std::size_t c = 0; c < cols; ++c)
            if (!(is >> d.trace_matrix(ri, static_cast<Eigen::Index>(c)))) fail("row " + std::to_string(r) + " truncated");
        if (e.eigenvalue < prev) fail("eigenvalues not sorted at row " + std::to_string(r));
        if (!(d.prefactor[ri] > 0)) fail("non-positive prefactor at row " + std::to_string(r));
        prev = e.eigenvalue;
        e.mass = 0.5 / std::sqrt(d.prefactor[ri]);
        d.pairs.push_back(e);
    }
    return d;
}

} // namespace qnet
