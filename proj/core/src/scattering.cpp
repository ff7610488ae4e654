#include "qnet/scattering.hpp"

#include <algorithm>
#include <cmath>

namespace qnet {

namespace {

const cplx kI(0.0, 1.0);

double spectral_norm(const CMat& m) {
    if (m.size() == 0) return 0.0;
    return Eigen::JacobiSVD<CMat>(m).singularValues()[0];
}

CMat cayley_checked(const CMat& denominator, const CMat& numerator) {
    Eigen::PartialPivLU<CMat> lu(denominator);
    const double rc = lu.rcond();
    if (!(rc > 1.0 / kConditionGuard))
        throw Error(ErrorKind::NumericalSingularity, "scattering denominator is singular (rcond " + std::to_string(rc) + ")");
    return lu.solve(numerator);
}

} // namespace

ScatteringMatrix make_scattering(cplx lambda, CMat s, const CVec& k_plus) {
    ScatteringMatrix out;
    out.lambda = lambda;
    const CVec root = k_plus.cwiseSqrt();
    out.s_flux = root.asDiagonal() * s * root.cwiseInverse().asDiagonal();
    out.s = std::move(s);
    const auto n = out.s.rows();
    out.unitarity_defect = spectral_norm(out.s_flux.adjoint() * out.s_flux - CMat::Identity(n, n));
    out.symmetry_defect = n ? (out.s_flux - out.s_flux.transpose()).cwiseAbs().maxCoeff() : 0.0;
    return out;
}

ScatteringMatrix make_scattering(double lambda, CMat s, const Vec& k_plus) {
    return make_scattering(cplx(lambda, 0.0), std::move(s), CVec(k_plus.cast<cplx>()));
}

ScatteringMatrix s_full(const DnBlocks& blocks, const Vec& k_plus, const Vec& k_minus) {
    const auto no = blocks.pp.rows(), nc = blocks.mm.rows();
    // Unknowns: outgoing amplitudes S nu (open) and closed boundary values u_-.
    // Open rows:   DN_pp (nu + S nu) + DN_pm u_- = iK (S nu - nu)
    // Closed rows: DN_mp (nu + S nu) + DN_mm u_- = K_minus u_-
    CMat lhs(no + nc, no + nc);
    lhs.topLeftCorner(no, no) = blocks.pp.cast<cplx>();
    lhs.topLeftCorner(no, no).diagonal() -= kI * k_plus.cast<cplx>();
    lhs.topRightCorner(no, nc) = blocks.pm.cast<cplx>();
    lhs.bottomLeftCorner(nc, no) = blocks.mp.cast<cplx>();
    lhs.bottomRightCorner(nc, nc) = blocks.mm.cast<cplx>();
    lhs.bottomRightCorner(nc, nc).diagonal() -= k_minus.cast<cplx>();
    CMat rhs(no + nc, no);
    rhs.topRows(no) = -blocks.pp.cast<cplx>();
    rhs.topRows(no).diagonal() -= kI * k_plus.cast<cplx>();
    rhs.bottomRows(nc) = -blocks.mp.cast<cplx>();
    const CMat sol = cayley_checked(lhs, rhs);
    return make_scattering(blocks.lambda, sol.topRows(no), k_plus);
}

ScatteringMatrix s_intermediate(const IntermediateDn& idn, const Vec& k_plus) {
    CMat den = idn.matrix.cast<cplx>(), num = idn.matrix.cast<cplx>();
    den.diagonal() -= kI * k_plus.cast<cplx>();
    num.diagonal() += kI * k_plus.cast<cplx>();
    CMat s = -cayley_checked(den, num);
    return make_scattering(idn.lambda, std::move(s), k_plus);
}

ScatteringMatrix s_one_pole(double lambda0, const Vec& phi, const CVec& k_plus, cplx lambda) {
    const auto n = k_plus.size();
    const CVec kinv_phi = phi.cast<cplx>().cwiseQuotient(k_plus);
    const cplx g = phi.cast<cplx>().dot(kinv_phi); // conjugates phi, which is real
    const cplx den = (lambda - lambda0) + kI * g;
    CMat s = CMat::Identity(n, n);
    if (std::abs(den) == 0.0)
        throw Error(ErrorKind::NumericalSingularity, "one-pole scattering matrix evaluated at its pole");
    if (phi.size()) s.noalias() -= (2.0 * kI / den) * kinv_phi * phi.cast<cplx>().transpose();
    return make_scattering(lambda, std::move(s), k_plus);
}

ScatteringMatrix s_one_pole(double lambda0, const Vec& phi, const Vec& k_plus, double lambda) {
    return s_one_pole(lambda0, phi, CVec(k_plus.cast<cplx>()), cplx(lambda, 0.0));
}

ResonanceZero resonance_zero(double lambda0, const Vec& phi, const std::function<CVec(cplx)>& k_plus) {
    auto g = [&](cplx lam) { return lam - lambda0 - kI * phi.cast<cplx>().dot(phi.cast<cplx>().cwiseQuotient(k_plus(lam))); };
    ResonanceZero out;
    cplx lam = lambda0;
    double prev_step = kInf;
    bool contracting = true;
    for (int it = 1; it <= 100; ++it) {
        const cplx next = lambda0 + kI * phi.cast<cplx>().dot(phi.cast<cplx>().cwiseQuotient(k_plus(lam)));
        const double step = std::abs(next - lam);
        lam = next;
        out.iterations = it;
        if (step <= 1e-15 * std::max(1.0, std::abs(lam))) break;
        if (it > 3 && step > 0.9 * prev_step) {
            contracting = false;
            break;
        }
        prev_step = step;
        if (it == 100) contracting = false;
    }
    if (!contracting) {
        // Complex Newton on the scalar secular function with a central
        // difference derivative (g is analytic).
        out.newton_fallback = true;
        lam = cplx(lambda0, 0.0) + kI * 1e-3 * std::max(1.0, std::abs(lambda0));
        bool ok = false;
        for (int it = 0; it < 100; ++it) {
            const double h = 1e-6 * std::max(1.0, std::abs(lam));
            const cplx d = (g(lam + h) - g(lam - h)) / (2.0 * h);
            const cplx step = g(lam) / d;
            lam -= step;
            if (std::abs(step) <= 1e-15 * std::max(1.0, std::abs(lam))) {
                ok = true;
                break;
            }
        }
        if (!ok) throw Error(ErrorKind::NoConvergence, "resonance zero: fixed point and Newton both failed");
    }
    out.lambda = lam;
    out.residual = std::abs(g(lam));
    return out;
}

double subordination_d(const std::function<Mat(double)>& remainder, const std::function<Vec(double)>& k_plus,
                       double lo, double hi, int samples) {
    double d = 0.0;
    for (int i = 0; i < samples; ++i) {
        const double lam = samples == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * i / (samples - 1);
        const Vec s = k_plus(lam).cwiseSqrt().cwiseInverse();
        Mat m = s.asDiagonal() * remainder(lam) * s.asDiagonal();
        m = 0.5 * (m + m.transpose());
        if (m.size())
            d = std::max(d, Eigen::SelfAdjointEigenSolver<Mat>(m, Eigen::EigenvaluesOnly).eigenvalues().cwiseAbs().maxCoeff());
    }
    return d;
}

double deviation_bound(double d, const Vec& k_plus) {
    if (!(d < 1.0)) throw Error(ErrorKind::RegimeViolation, "subordination parameter d = " + std::to_string(d) + " is not below 1");
    const double ratio = std::sqrt(k_plus.maxCoeff() / k_plus.minCoeff());
    return 2.0 * d / (1.0 - d) * 1.5 * ratio;
}

ScatteringMatrix s_essential(const std::vector<EssentialPole>& poles, const Vec& k_plus, double lambda) {
    const auto n = k_plus.size();
    Mat dn = Mat::Zero(n, n);
    for (const auto& p : poles) {
        if (rel_gap(lambda, p.lambda) <= kPoleTol)
            throw Error(ErrorKind::PoleProximity, "essential approximation evaluated at its pole " + std::to_string(p.lambda));
        dn.noalias() += p.phi * p.phi.transpose() / (lambda - p.lambda);
    }
    IntermediateDn idn;
    idn.lambda = lambda;
    idn.matrix = dn;
    return s_intermediate(idn, k_plus);
}

CMat evanescent_amplitudes(const DnBlocks& blocks, const Vec& k_minus, const CMat& s) {
    const auto no = blocks.pp.rows(), nc = blocks.mm.rows();
    if (nc == 0) return CMat(0, no);
    Mat d = blocks.mm;
    d.diagonal() -= k_minus;
    Eigen::PartialPivLU<Mat> lu(d);
    if (!(lu.rcond() > 1.0 / kConditionGuard))
        throw Error(ErrorKind::DispersionRoot, "DN_mm - K_minus is singular: energy is an intermediate eigenvalue");
    const CMat g = CMat::Identity(no, no) + s;
    const Mat inv_mp = lu.solve(blocks.mp);
    return -(inv_mp.cast<cplx>() * g);
}

double matching_residual(const DnBlocks& blocks, const Vec& k_plus, const Vec& k_minus, const CMat& s,
                         const CMat& u_minus) {
    const auto no = blocks.pp.rows();
    const CMat g = CMat::Identity(no, no) + s;
    const CMat open = blocks.pp.cast<cplx>() * g + blocks.pm.cast<cplx>() * u_minus -
                      kI * k_plus.cast<cplx>().asDiagonal() * (s - CMat::Identity(no, no));
    double r = open.cwiseAbs().maxCoeff();
    if (blocks.mm.rows()) {
        const CMat closed = blocks.mp.cast<cplx>() * g + blocks.mm.cast<cplx>() * u_minus -
                            k_minus.cast<cplx>().asDiagonal() * u_minus;
        r = std::max(r, closed.cwiseAbs().maxCoeff());
    }
    return r;
}

} // namespace qnet
