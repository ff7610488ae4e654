#include "qnet/intermediate_spectrum.hpp"

#include "qnet/parallel.hpp"

#include <boost/math/tools/toms748_solve.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace qnet {

namespace {

Eigen::Index closed_first(const ChannelBasis& basis) { return static_cast<Eigen::Index>(basis.n_open()); }
Eigen::Index closed_count(const ChannelBasis& basis) { return static_cast<Eigen::Index>(basis.n_closed()); }

// D(lambda) = DN_mm - K_minus, optionally without one eigenvalue group.
Mat dispersion_matrix(const SpectralData& data, const ChannelBasis& basis, double lambda,
                      std::optional<double> exclude = std::nullopt) {
    Mat d = dn_blocks(data, basis, lambda, exclude).mm;
    d.diagonal() -= k_minus_flux(basis, lambda);
    return d;
}

int negative_count(const Mat& d) {
    const Vec ev = Eigen::SelfAdjointEigenSolver<Mat>(d, Eigen::EigenvaluesOnly).eigenvalues();
    return static_cast<int>((ev.array() < 0.0).count());
}

// Orthonormal-column reduction of a group's closed traces: A' with A' A'^T
// equal to the group dyad sum and full column rank.
Mat reduced_traces(const Mat& a, double tol) {
    if (a.size() == 0) return a;
    Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeThinU);
    const Vec sv = svd.singularValues();
    Eigen::Index r = 0;
    while (r < sv.size() && sv[r] > tol) ++r;
    return svd.matrixU().leftCols(r) * sv.head(r).asDiagonal();
}

double trace_tolerance(const SpectralData& data) {
    return 1e-10 * std::max(1.0, data.trace_matrix.size() ? data.trace_matrix.cwiseAbs().maxCoeff() : 1.0);
}

struct Pole {
    double lambda;
    double window; // half width of the excluded interval
    Mat a;         // reduced closed traces (closed x rank)
};

template <class F>
double bracket_root(F f, double lo, double hi, double flo, double fhi) {
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    std::uintmax_t iters = 200;
    auto r = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, boost::math::tools::eps_tolerance<double>(50),
                                               iters);
    return 0.5 * (r.first + r.second);
}

} // namespace

double secular_function(const SpectralData& data, const ChannelBasis& basis, double lambda) {
    const Band band = spectral_band(basis);
    if (!(lambda > band.lo && lambda < band.hi))
        throw Error(ErrorKind::BandEdge, "energy " + std::to_string(lambda) + " is outside the spectral band (" +
                                             std::to_string(band.lo) + ", " + std::to_string(band.hi) + ")");
    if (basis.n_closed() == 0) return -1.0;
    const Mat dnmm = dn_blocks(data, basis, lambda).mm;
    const Vec s = k_minus_flux(basis, lambda).cwiseAbs().cwiseSqrt().cwiseInverse();
    Mat m = -(s.asDiagonal() * dnmm * s.asDiagonal());
    m = 0.5 * (m + m.transpose());
    return Eigen::SelfAdjointEigenSolver<Mat>(m, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff() - 1.0;
}

std::vector<DispersionRoot> find_roots(const SpectralData& data, const ChannelBasis& basis, const Band& band,
                                       int n_scan, int threads) {
    if (n_scan < 64) throw Error(ErrorKind::Configuration, "n_scan must be at least 64");
    std::vector<DispersionRoot> roots;
    if (basis.n_closed() == 0) return roots;
    const double lo = band.guarded_lo(), hi = band.guarded_hi();
    if (!(hi > lo)) throw Error(ErrorKind::BandEdge, "spectral band is empty after edge guards");
    if (!std::isfinite(lo) || !std::isfinite(hi))
        throw Error(ErrorKind::BandEdge, "root search needs a bounded band (open and closed channels)");

    const Eigen::Index c0 = closed_first(basis), nc = closed_count(basis);
    const double tol = trace_tolerance(data);

    std::vector<Pole> poles;
    const std::vector<LevelGroup> levels = level_groups(data);
    for (const auto& g : levels) {
        if (!(g.lambda > lo && g.lambda < hi)) continue;
        Mat a = reduced_traces(group_traces(data, g, c0, nc), tol);
        if (a.cols() == 0) continue;
        poles.push_back({g.lambda, 10.0 * kPoleTol * std::max(1.0, std::abs(g.lambda)), std::move(a)});
    }

    // Breakpoints: the scan grid plus both ends of every pole window.
    std::vector<double> pts;
    for (int i = 0; i < n_scan; ++i) pts.push_back(lo + (hi - lo) * i / (n_scan - 1));
    for (const auto& p : poles) {
        pts.push_back(p.lambda - p.window);
        pts.push_back(p.lambda + p.window);
    }
    std::sort(pts.begin(), pts.end());
    auto inside_window = [&](double x) {
        for (const auto& p : poles)
            if (std::abs(x - p.lambda) < p.window * (1.0 - 1e-9)) return true;
        return false;
    };
    // Levels without closed traces are not poles of D but still refuse
    // evaluation within the exclusion radius; drop scan points there.
    auto too_close = [&](double x) {
        for (const auto& g : levels)
            if (rel_gap(x, g.lambda) <= 2.0 * kPoleTol) return true;
        return false;
    };
    pts.erase(std::remove_if(pts.begin(), pts.end(),
                             [&](double x) { return x < lo || x > hi || inside_window(x) || too_close(x); }),
              pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());

    std::vector<int> count(pts.size());
    parallel_for(pts.size(), threads, [&](std::size_t i) { count[i] = negative_count(dispersion_matrix(data, basis, pts[i])); });

    auto push_root = [&](double lam, Vec nu, double residual) {
        nu.normalize();
        Eigen::Index imax;
        nu.cwiseAbs().maxCoeff(&imax);
        if (nu[imax] < 0) nu = -nu;
        roots.push_back({lam, std::move(nu), residual});
    };

    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const double a = pts[i], b = pts[i + 1];
        if (inside_window(0.5 * (a + b))) continue;
        for (int j = count[i]; j < count[i + 1]; ++j) {
            auto f = [&](double x) {
                return Eigen::SelfAdjointEigenSolver<Mat>(dispersion_matrix(data, basis, x), Eigen::EigenvaluesOnly)
                    .eigenvalues()[j];
            };
            const double x = bracket_root(f, a, b, f(a), f(b));
            Eigen::SelfAdjointEigenSolver<Mat> es(dispersion_matrix(data, basis, x));
            push_root(x, es.eigenvectors().col(j), std::abs(es.eigenvalues()[j]));
        }
    }

    // Inside a pole window the root equation is regularized by the group
    // traces A: D nu = 0 with nu = R^{-1} A y iff E y = 0, where
    // E = (lambda - p) I + A^T R^{-1} A increases with lambda.
    for (const auto& p : poles) {
        const double a = p.lambda - p.window, b = p.lambda + p.window;
        if (a < lo || b > hi) continue;
        auto emat = [&](double x) {
            const Mat r = dispersion_matrix(data, basis, x, p.lambda);
            Mat e = p.a.transpose() * r.ldlt().solve(p.a);
            e = 0.5 * (e + e.transpose());
            e.diagonal().array() += x - p.lambda;
            return e;
        };
        const int na = negative_count(emat(a)), nb = negative_count(emat(b));
        for (int j = nb; j < na; ++j) {
            auto f = [&](double x) {
                return Eigen::SelfAdjointEigenSolver<Mat>(emat(x), Eigen::EigenvaluesOnly).eigenvalues()[j];
            };
            const double x = bracket_root(f, a, b, f(a), f(b));
            const Mat r = dispersion_matrix(data, basis, x, p.lambda);
            const Mat e = emat(x);
            Eigen::SelfAdjointEigenSolver<Mat> es(e);
            const Vec y = es.eigenvectors().col(j);
            const Vec nu = r.ldlt().solve(p.a * y);
            const double residual =
                x == p.lambda ? 0.0 : (p.a * (e * y)).norm() / (std::abs(x - p.lambda) * nu.norm());
            push_root(x, nu, residual);
        }
    }
    std::stable_sort(roots.begin(), roots.end(),
                     [](const DispersionRoot& l, const DispersionRoot& r) { return l.lambda < r.lambda; });
    return roots;
}

IntermediateSpectrum intermediate_spectrum(const SpectralData& data, const ChannelBasis& basis, const Band& band,
                                           int n_scan, int threads) {
    IntermediateSpectrum out;
    out.roots = find_roots(data, basis, band, n_scan, threads);
    const double lo = band.guarded_lo(), hi = band.guarded_hi();
    const double tol = trace_tolerance(data);
    for (const auto& g : level_groups(data)) {
        if (!(g.lambda > lo && g.lambda < hi)) continue;
        const Eigen::Index rank = reduced_traces(group_traces(data, g, closed_first(basis), closed_count(basis)), tol).cols();
        const int free = static_cast<int>(g.rows.size()) - static_cast<int>(rank);
        if (free > 0) out.decoupled.push_back({g.lambda, free});
    }
    return out;
}

} // namespace qnet
