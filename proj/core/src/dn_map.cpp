#include "qnet/dn_map.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace qnet {

Mat DnBlocks::full() const {
    const auto no = pp.rows(), nc = mm.rows();
    Mat f(no + nc, no + nc);
    f.topLeftCorner(no, no) = pp;
    f.topRightCorner(no, nc) = pm;
    f.bottomLeftCorner(nc, no) = mp;
    f.bottomRightCorner(nc, nc) = mm;
    return f;
}

DnBlocks DnBlocks::from_full(const Mat& f, std::size_t n_open, double lambda) {
    const auto no = static_cast<Eigen::Index>(n_open), nc = f.rows() - no;
    DnBlocks b;
    b.lambda = lambda;
    b.pp = f.topLeftCorner(no, no);
    b.pm = f.topRightCorner(no, nc);
    b.mp = f.bottomLeftCorner(nc, no);
    b.mm = f.bottomRightCorner(nc, nc);
    return b;
}

namespace {

bool same_level(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a)); }

std::string fmt_double(double x) {
    std::ostringstream os;
    os.precision(17);
    os << x;
    return os.str();
}

} // namespace

std::vector<LevelGroup> level_groups(const SpectralData& data) {
    std::vector<LevelGroup> out;
    for (std::size_t r = 0; r < data.rows(); ++r) {
        const double lam = data.pairs[r].eigenvalue;
        if (out.empty() || !same_level(out.back().lambda, lam)) out.push_back({lam, {}});
        out.back().rows.push_back(static_cast<Eigen::Index>(r));
    }
    return out;
}

Mat group_traces(const SpectralData& data, const LevelGroup& group, Eigen::Index first, Eigen::Index count) {
    Mat a(count, static_cast<Eigen::Index>(group.rows.size()));
    for (std::size_t k = 0; k < group.rows.size(); ++k) {
        const Eigen::Index r = group.rows[k];
        a.col(static_cast<Eigen::Index>(k)) =
            std::sqrt(data.prefactor[r]) * data.trace_matrix.row(r).segment(first, count).transpose();
    }
    return a;
}

DnBlocks dn_blocks(const SpectralData& data, const ChannelBasis& basis, double lambda,
                   std::optional<double> exclude_near) {
    const auto n = static_cast<Eigen::Index>(basis.size());
    if (data.trace_matrix.cols() != n)
        throw Error(ErrorKind::Configuration, "spectral data has " + std::to_string(data.trace_matrix.cols()) +
                                                  " columns, basis has " + std::to_string(n));
    Mat dn = data.background ? data.background->evaluate(lambda) : Mat::Zero(n, n);
    double gap = kInf;
    // Degenerate groups: sum the dyads first, divide once.
    const auto rows = static_cast<Eigen::Index>(data.rows());
    Eigen::Index r = 0;
    Mat group(n, n);
    while (r < rows) {
        const double lam_r = data.pairs[static_cast<std::size_t>(r)].eigenvalue;
        Eigen::Index e = r;
        group.setZero();
        while (e < rows && same_level(data.pairs[static_cast<std::size_t>(e)].eigenvalue, lam_r)) {
            group.noalias() += data.prefactor[e] * data.trace_matrix.row(e).transpose() * data.trace_matrix.row(e);
            ++e;
        }
        const bool excluded = exclude_near && same_level(*exclude_near, lam_r);
        if (!excluded) {
            double g = std::abs(lambda - lam_r) / std::max(1.0, std::abs(lam_r));
            gap = std::min(gap, g);
            if (g <= kPoleTol)
                throw Error(ErrorKind::PoleProximity, "energy " + fmt_double(lambda) +
                                                          " is within the exclusion radius of eigenvalue " +
                                                          fmt_double(lam_r));
            dn.noalias() += group / (lambda - lam_r);
        }
        r = e;
    }
    dn = 0.5 * (dn + dn.transpose());
    DnBlocks b = DnBlocks::from_full(dn, basis.n_open(), lambda);
    b.pole_gap = gap;
    return b;
}

IntermediateDn intermediate_dn(const DnBlocks& blocks, const Vec& k_minus) {
    IntermediateDn out;
    out.lambda = blocks.lambda;
    out.near_l0_eigenvalue = blocks.pole_gap < 1e-3;
    if (blocks.mm.rows() == 0) {
        out.matrix = blocks.pp;
        return out;
    }
    Mat d = blocks.mm;
    d.diagonal() -= k_minus;
    Eigen::SelfAdjointEigenSolver<Mat> es(d);
    const Vec ev = es.eigenvalues();
    const double big = ev.cwiseAbs().maxCoeff(), small = ev.cwiseAbs().minCoeff();
    out.condition = small > 0 ? big / small : kInf;
    if (!(out.condition < kConditionGuard))
        throw Error(ErrorKind::DispersionRoot, "DN_mm - K_minus is singular at " + fmt_double(blocks.lambda) +
                                                   " (condition " + fmt_double(out.condition) +
                                                   "): this energy is an intermediate eigenvalue");
    const Mat w = es.eigenvectors().transpose() * blocks.mp;
    const Mat v = blocks.pm * es.eigenvectors();
    out.matrix = blocks.pp - v * ev.cwiseInverse().asDiagonal() * w;
    out.matrix = 0.5 * (out.matrix + out.matrix.transpose());
    return out;
}

double thin_network_norm(const Mat& closed_remainder, const Vec& k_minus) {
    if (closed_remainder.rows() == 0) return 0.0;
    const Vec s = k_minus.cwiseAbs().cwiseSqrt().cwiseInverse();
    Mat m = s.asDiagonal() * closed_remainder * s.asDiagonal();
    m = 0.5 * (m + m.transpose());
    return Eigen::SelfAdjointEigenSolver<Mat>(m, Eigen::EigenvaluesOnly).eigenvalues().cwiseAbs().maxCoeff();
}

int ResonanceSplit::dyad_rank(double tol) const {
    Mat phi(phi_plus.rows() + phi_minus.rows(), multiplicity);
    phi << phi_plus, phi_minus;
    if (phi.size() == 0) return 0;
    Eigen::JacobiSVD<Mat> svd(phi);
    const Vec sv = svd.singularValues();
    if (sv.size() == 0 || sv[0] == 0.0) return 0;
    return static_cast<int>((sv.array() > tol * sv[0]).count());
}

double nearest_eigenvalue(const SpectralData& data, double target) {
    if (data.pairs.empty()) throw Error(ErrorKind::Configuration, "no retained eigenvalues");
    double best = data.pairs.front().eigenvalue;
    for (const auto& p : data.pairs)
        if (std::abs(p.eigenvalue - target) < std::abs(best - target)) best = p.eigenvalue;
    for (const auto& p : data.pairs) {
        if (same_level(p.eigenvalue, best)) continue;
        double d1 = std::abs(best - target), d2 = std::abs(p.eigenvalue - target);
        if (std::abs(d1 - d2) <= kThresholdTol * std::max(1.0, std::abs(target)))
            throw Error(ErrorKind::Configuration, "eigenvalues " + fmt_double(best) + " and " +
                                                      fmt_double(p.eigenvalue) + " are equally near " +
                                                      fmt_double(target) + ": choose one explicitly");
    }
    return best;
}

ResonanceSplit resonance_split(const SpectralData& data, const ChannelBasis& basis, double lambda, double lambda0) {
    std::vector<Eigen::Index> group;
    for (std::size_t r = 0; r < data.rows(); ++r)
        if (same_level(data.pairs[r].eigenvalue, lambda0)) group.push_back(static_cast<Eigen::Index>(r));
    if (group.empty())
        throw Error(ErrorKind::Configuration, "resonance eigenvalue " + fmt_double(lambda0) + " is not retained");
    ResonanceSplit out;
    out.lambda0 = data.pairs[static_cast<std::size_t>(group.front())].eigenvalue;
    out.mu = data.pairs[static_cast<std::size_t>(group.front())].mass;
    out.multiplicity = static_cast<int>(group.size());
    const auto no = static_cast<Eigen::Index>(basis.n_open()), nc = static_cast<Eigen::Index>(basis.n_closed());
    out.phi_plus.resize(no, out.multiplicity);
    out.phi_minus.resize(nc, out.multiplicity);
    for (int k = 0; k < out.multiplicity; ++k) {
        const auto row = data.trace_matrix.row(group[static_cast<std::size_t>(k)]);
        out.phi_plus.col(k) = row.head(no).transpose();
        out.phi_minus.col(k) = row.tail(nc).transpose();
    }
    DnBlocks rem = dn_blocks(data, basis, lambda, out.lambda0);
    out.kpp = rem.pp;
    out.kpm = rem.pm;
    out.kmm = rem.mm;
    return out;
}

double denominator_D(const Vec& phi_minus, const Mat& kmm, const Vec& k_minus, double lambda, double lambda0,
                     double mu) {
    const double c = 4.0 * mu * mu;
    if (phi_minus.size() == 0) return c * (lambda - lambda0);
    Mat k = kmm;
    k.diagonal() -= k_minus;
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (k + k.transpose()));
    const Vec ev = es.eigenvalues();
    if (!(ev.cwiseAbs().minCoeff() > ev.cwiseAbs().maxCoeff() / kConditionGuard))
        throw Error(ErrorKind::ThinViolation, "k = K_mm - K_minus is singular at " + fmt_double(lambda));
    const Vec y = es.eigenvectors().transpose() * phi_minus;
    return c * (lambda - lambda0) + (y.array().square() / ev.array()).sum();
}

double shift_estimate(const Vec& phi_minus, const Vec& k_minus, double lambda0, double mu) {
    if (phi_minus.size() == 0) return lambda0;
    return lambda0 - (phi_minus.array().square() / k_minus.array().abs()).sum() / (4.0 * mu * mu);
}

Vec residue_vector_approx(const Vec& phi_plus, const Vec& phi_minus, const Mat& kpm, const Mat& k) {
    if (phi_minus.size() == 0) return phi_plus;
    return phi_plus - kpm * k.ldlt().solve(phi_minus);
}

Mat extract_residue(const std::function<Mat(double)>& f, double pole, double h) {
    auto sym = [&](double step) -> Mat { return 0.5 * step * (f(pole + step) - f(pole - step)); };
    const Mat coarse = sym(h), fine = sym(0.5 * h);
    Mat r = (4.0 * fine - coarse) / 3.0;
    return 0.5 * (r + r.transpose());
}

double tail_sensitivity(const SpectralData& data, const ChannelBasis& basis, double lambda) {
    const auto n = static_cast<Eigen::Index>(basis.size());
    Mat full = Mat::Zero(n, n), half = Mat::Zero(n, n);
    const double half_cut = 0.5 * data.lambda_cut;
    for (std::size_t r = 0; r < data.rows(); ++r) {
        const double lam_r = data.pairs[r].eigenvalue;
        if (rel_gap(lambda, lam_r) <= kPoleTol)
            throw Error(ErrorKind::PoleProximity, "energy " + fmt_double(lambda) + " is at eigenvalue " + fmt_double(lam_r));
        const auto row = data.trace_matrix.row(static_cast<Eigen::Index>(r));
        const Mat term = data.prefactor[static_cast<Eigen::Index>(r)] * row.transpose() * row / (lambda - lam_r);
        full += term;
        if (lam_r <= half_cut) half += term;
    }
    Eigen::JacobiSVD<Mat> svd(full - half);
    return svd.singularValues().size() ? svd.singularValues()[0] : 0.0;
}

Vec residue_vector(const Mat& residue) {
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (residue + residue.transpose()));
    const Eigen::Index top = residue.rows() - 1;
    const double lam = std::max(0.0, es.eigenvalues()[top]);
    Vec v = es.eigenvectors().col(top) * std::sqrt(lam);
    Eigen::Index imax;
    v.cwiseAbs().maxCoeff(&imax);
    if (v[imax] < 0) v = -v;
    return v;
}

} // namespace qnet
