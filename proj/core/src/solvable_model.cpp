#include "qnet/solvable_model.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace qnet {

namespace {

const cplx kI(0.0, 1.0);

std::string num(double x) { return std::to_string(x); }

// Polynomial in p with complex coefficients, lowest degree first.
using Poly = std::vector<cplx>;

Poly mul(const Poly& a, const Poly& b) {
    Poly c(a.size() + b.size() - 1, cplx(0.0));
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) c[i + j] += a[i] * b[j];
    return c;
}

Poly add(Poly a, const Poly& b) {
    if (a.size() < b.size()) a.resize(b.size(), cplx(0.0));
    for (std::size_t i = 0; i < b.size(); ++i) a[i] += b[i];
    return a;
}

cplx eval(const Poly& a, cplx p) {
    cplx v = 0.0;
    for (std::size_t i = a.size(); i-- > 0;) v = v * p + a[i];
    return v;
}

Poly derivative(const Poly& a) {
    Poly d;
    for (std::size_t i = 1; i < a.size(); ++i) d.push_back(static_cast<double>(i) * a[i]);
    return d.empty() ? Poly{cplx(0.0)} : d;
}

} // namespace

CMat krein_function(const InnerModel& model, cplx lambda) {
    const cplx lam = lambda - model.energy_origin;
    const auto d = model.frame.cols();
    CMat m = CMat::Zero(d, d);
    for (Eigen::Index s = 0; s < model.k2.size(); ++s) {
        const CVec w = model.frame.adjoint() * model.eigvecs.col(s).cast<cplx>();
        if (w.squaredNorm() == 0.0) continue;
        const double k2 = model.k2[s];
        if (std::abs(lam - k2) <= kPoleTol * std::max(1.0, k2))
            throw Error(ErrorKind::PoleProximity, "Krein function evaluated at its pole k^2 = " + num(k2));
        m.noalias() += (1.0 + lam * k2) / (k2 - lam) * w * w.adjoint();
    }
    return m;
}

std::vector<CMat> q_matrices(const InnerModel& model) {
    std::vector<CMat> q;
    for (Eigen::Index s = 0; s < model.k2.size(); ++s) {
        const CVec w = model.frame.adjoint() * model.eigvecs.col(s).cast<cplx>();
        q.push_back(w * w.adjoint());
    }
    return q;
}

CMat model_bracket(const InnerModel& model, cplx lambda) {
    const auto d = model.frame.cols();
    if (d == 0) return model.beta00;
    CMat g;
    if (!model.beta11) {
        g = krein_function(model, lambda);
    } else if (model.frame.rows() == d) {
        // Square frame: M^{-1} = F^*(A - lambda)(I + lambda A)^{-1} F has no
        // poles where M does, so G = (M^{-1} + beta11)^{-1} stays regular.
        const cplx lam = lambda - model.energy_origin;
        CVec r(model.k2.size());
        for (Eigen::Index s = 0; s < r.size(); ++s) r[s] = (model.k2[s] - lam) / (1.0 + lam * model.k2[s]);
        const CMat e = model.eigvecs.cast<cplx>();
        const CMat minv = model.frame.adjoint() * e * r.asDiagonal() * e.adjoint() * model.frame;
        g = (minv + *model.beta11).inverse();
    } else {
        const CMat m = krein_function(model, lambda);
        g = m * (CMat::Identity(d, d) + *model.beta11 * m).inverse();
    }
    return model.beta00 - model.beta01 * g * model.beta10();
}

ScatteringMatrix model_s_matrix(const InnerModel& model, const CVec& k_plus, cplx lambda) {
    const CMat b = model_bracket(model, lambda);
    CMat den = -b, num = b;
    den.diagonal() += kI * k_plus;
    num.diagonal() += kI * k_plus;
    Eigen::PartialPivLU<CMat> lu(den);
    if (!(lu.rcond() > 1.0 / kConditionGuard))
        throw Error(ErrorKind::NumericalSingularity, "model scattering matrix: singular denominator (pole of S)");
    return make_scattering(lambda, lu.solve(num), k_plus);
}

ScatteringMatrix model_s_matrix(const InnerModel& model, const Vec& k_plus, double lambda) {
    return model_s_matrix(model, CVec(k_plus.cast<cplx>()), cplx(lambda, 0.0));
}

CMat choose_beta00(const InnerModel& model) {
    const auto n = model.beta01.rows();
    CMat b = CMat::Zero(n, n);
    const auto q = q_matrices(model);
    for (std::size_t s = 0; s < q.size(); ++s)
        b.noalias() -= model.k2[static_cast<Eigen::Index>(s)] * model.beta01 * q[s] * model.beta10();
    return 0.5 * (b + b.adjoint());
}

ScatteringMatrix krein_sum_s_matrix(const InnerModel& model, const Vec& k_plus, double lambda) {
    if (model.beta11) throw Error(ErrorKind::Configuration, "Krein-sum form needs the plain layout (no beta11)");
    const double lam = lambda - model.energy_origin;
    const auto n = model.beta01.rows();
    CMat sigma = CMat::Zero(n, n);
    const auto q = q_matrices(model);
    for (std::size_t s = 0; s < q.size(); ++s) {
        const double k2 = model.k2[static_cast<Eigen::Index>(s)];
        if (q[s].norm() == 0.0) continue;
        if (std::abs(lam - k2) <= kPoleTol * std::max(1.0, k2))
            throw Error(ErrorKind::PoleProximity, "Krein sum evaluated at its pole k^2 = " + num(k2));
        sigma.noalias() += (1.0 + k2 * k2) / (k2 - lam) * model.beta01 * q[s] * model.beta10();
    }
    CMat den = sigma, nume = -sigma;
    den.diagonal() += kI * k_plus.cast<cplx>();
    nume.diagonal() += kI * k_plus.cast<cplx>();
    return make_scattering(lambda, den.partialPivLu().solve(nume), k_plus);
}

InnerModel fit_model(const std::vector<EssentialPole>& poles, double energy_origin, Warnings* warnings) {
    InnerModel m;
    m.energy_origin = energy_origin;
    const auto nt = static_cast<Eigen::Index>(poles.size());
    const Eigen::Index n_open = poles.empty() ? 0 : poles.front().phi.size();
    m.k2.resize(nt);
    m.eigvecs = Mat::Identity(nt, nt);
    if (nt == 0) {
        m.frame = CMat(0, 0);
        m.beta01 = CMat(0, 0);
        m.beta00 = CMat(0, 0);
        return m;
    }
    Mat phi_t(n_open, nt);
    for (Eigen::Index s = 0; s < nt; ++s) {
        const auto& p = poles[static_cast<std::size_t>(s)];
        if (p.phi.size() != n_open) throw Error(ErrorKind::Configuration, "residue vectors differ in length");
        const double k2 = p.lambda - energy_origin;
        if (!(k2 > 0.0))
            throw Error(ErrorKind::Unfittable, "pole " + num(p.lambda) + " is not above the energy origin " +
                                                   num(energy_origin) + "; shift the origin");
        m.k2[s] = k2;
        phi_t.col(s) = p.phi / std::sqrt(1.0 + k2 * k2);
    }
    // phi_t = U Sigma V^T: frame F = V_d, beta01 = U_d Sigma_d, so that
    // beta01 F^* e_s reproduces column s exactly.
    Eigen::JacobiSVD<Mat> svd(phi_t, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vec sv = svd.singularValues();
    Eigen::Index d = 0;
    while (d < sv.size() && sv[d] > 1e-12 * std::max(1e-300, sv[0])) ++d;
    m.frame = svd.matrixV().leftCols(d).cast<cplx>();
    m.beta01 = (svd.matrixU().leftCols(d) * sv.head(d).asDiagonal()).cast<cplx>();

    // N_i and N_{-i} = (A + i)(A - i)^{-1} N_i must not share a direction.
    if (d > 0 && d < nt) {
        CVec cay(nt);
        for (Eigen::Index s = 0; s < nt; ++s) cay[s] = (m.k2[s] + kI) / (m.k2[s] - kI);
        const CMat g = (cay.asDiagonal() * m.frame).householderQr().householderQ() * CMat::Identity(nt, d);
        const CMat residual = g - m.frame * (m.frame.adjoint() * g);
        const Vec angles = Eigen::JacobiSVD<CMat>(residual).singularValues();
        if (!(angles.minCoeff() > 1e-8)) {
            m.deficiency_overlap = true;
            warn(warnings, "deficiency subspaces N_i and N_-i overlap (smallest principal angle " +
                               num(angles.minCoeff()) + "); dimension kept at " + std::to_string(d));
        }
    } else if (d == nt && nt > 0) {
        m.deficiency_overlap = true;
        warn(warnings, "deficiency subspace is the whole inner space; N_i and N_-i coincide");
    }
    m.beta00 = choose_beta00(m);
    return m;
}

cplx scalar_model_s(const ScalarModel& model, cplx p) {
    const double b2 = model.beta * model.beta;
    cplx f = 0.0;
    for (Eigen::Index s = 0; s < model.k2.size(); ++s) {
        const double k2 = model.k2[s];
        const cplx den = k2 - p * p;
        if (std::abs(den) <= 1e-14 * std::max(1.0, k2)) {
            if (b2 * model.q[s] != 0.0) return -1.0;
            continue;
        }
        f += model.q[s] * (1.0 + k2 * k2) / den;
    }
    return (kI * p - b2 * f) / (kI * p + b2 * f);
}

namespace {

Poly scalar_numerator(const ScalarModel& model) {
    const double b2 = model.beta * model.beta;
    const auto n = model.k2.size();
    auto level = [&](Eigen::Index t) { return Poly{cplx(model.k2[t]), cplx(0.0), cplx(-1.0)}; };
    Poly all{cplx(1.0)};
    for (Eigen::Index t = 0; t < n; ++t) all = mul(all, level(t));
    Poly out = mul(Poly{cplx(0.0), kI}, all);
    for (Eigen::Index s = 0; s < n; ++s) {
        Poly others{cplx(-b2 * model.q[s] * (1.0 + model.k2[s] * model.k2[s]))};
        for (Eigen::Index t = 0; t < n; ++t)
            if (t != s) others = mul(others, level(t));
        out = add(out, others);
    }
    return out;
}

} // namespace

std::vector<cplx> scalar_model_zeros(const ScalarModel& model) {
    const Poly a = scalar_numerator(model);
    const std::size_t deg = a.size() - 1;
    std::vector<cplx> roots;
    if (deg == 0) return roots;
    CMat comp = CMat::Zero(static_cast<Eigen::Index>(deg), static_cast<Eigen::Index>(deg));
    for (std::size_t i = 1; i < deg; ++i) comp(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i - 1)) = 1.0;
    for (std::size_t i = 0; i < deg; ++i) comp(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(deg - 1)) = -a[i] / a[deg];
    Eigen::ComplexEigenSolver<CMat> es(comp, false);
    const Poly da = derivative(a);
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
        cplx z = es.eigenvalues()[i];
        for (int it = 0; it < 8; ++it) {
            const cplx d = eval(da, z);
            if (d == cplx(0.0)) break;
            const cplx step = eval(a, z) / d;
            z -= step;
            if (std::abs(step) <= 1e-16 * std::max(1.0, std::abs(z))) break;
        }
        roots.push_back(z);
    }
    std::sort(roots.begin(), roots.end(), [](cplx x, cplx y) {
        return x.real() != y.real() ? x.real() < y.real() : x.imag() < y.imag();
    });
    return roots;
}

cplx resonance_continuation(const ScalarModel& model, std::size_t level, int steps) {
    if (level >= static_cast<std::size_t>(model.k2.size())) throw Error(ErrorKind::InvalidIndex, "no such level");
    const auto l = static_cast<Eigen::Index>(level);
    const double k0 = std::sqrt(model.k2[l]);
    const double c0 = model.q[l] * (1.0 + model.k2[l] * model.k2[l]);
    auto rest = [&](cplx p) {
        cplx f = 0.0;
        for (Eigen::Index s = 0; s < model.k2.size(); ++s)
            if (s != l) f += model.q[s] * (1.0 + model.k2[s] * model.k2[s]) / (model.k2[s] - p * p);
        return f;
    };
    // p = k0 - beta^2 c0 / ((p + k0)(ip - beta^2 F_rest(p)))
    auto solve_at = [&](double beta, cplx start, cplx& out) {
        const double b2 = beta * beta;
        cplx p = start;
        double prev = kInf;
        for (int it = 0; it < 500; ++it) {
            const cplx next = k0 - b2 * c0 / ((p + k0) * (kI * p - b2 * rest(p)));
            const double step = std::abs(next - p);
            p = next;
            if (step <= 1e-15 * std::max(1.0, std::abs(p))) {
                out = p;
                return true;
            }
            if (it > 2 && step > 0.5 * prev) return false;
            prev = step;
        }
        return false;
    };
    cplx p = k0;
    double beta = 0.0, db = model.beta / std::max(1, steps);
    int halvings = 0;
    while (beta < model.beta) {
        const double target = std::min(model.beta, beta + db);
        cplx next;
        if (solve_at(target, p, next)) {
            p = next;
            beta = target;
        } else {
            db *= 0.5;
            if (++halvings > 40)
                throw Error(ErrorKind::NoConvergence, "resonance continuation failed near beta = " + num(beta));
        }
    }
    return p;
}

cplx blaschke_s(const std::vector<cplx>& zeros, cplx p) {
    cplx v = 1.0;
    for (const cplx z : zeros) v *= (p - z) / (p - std::conj(z));
    return v;
}

cplx jump_start_factor(cplx k, cplx p) { return (p - k) * (p + std::conj(k)) / ((p - std::conj(k)) * (p + k)); }

InnerModel JumpStart::model() const {
    InnerModel m;
    m.k2 = Vec::Constant(1, kappa2);
    m.eigvecs = Mat::Identity(1, 1);
    m.frame = CMat::Identity(1, 1);
    m.beta00 = CMat::Constant(1, 1, beta00);
    m.beta01 = CMat::Constant(1, 1, std::sqrt(beta01_sq));
    m.beta11 = CMat::Constant(1, 1, beta11);
    return m;
}

JumpStart fit_jump_start(cplx k) {
    if (!(k.imag() > 0.0))
        throw Error(ErrorKind::RegimeViolation, "jump-start needs Im k > 0 (got " + num(k.imag()) + "): real resonance is degenerate");
    JumpStart js;
    js.k = k;
    js.kappa2 = 1.0 / std::norm(k);
    js.beta11 = 1.0 / js.kappa2;

    // Target: -S0(p) = (ip + a - b p^2)/(ip - a + b p^2). Matching numerator
    // coefficients of (ip + a - b p^2) = c (-p^2 + 2i Im(k) p + |k|^2) in
    // powers p^0, p^1, p^2 gives a linear system for (a, b, c).
    const double y = k.imag(), r2 = std::norm(k);
    Eigen::Matrix3d sys;
    Eigen::Vector3d rhs;
    sys << 1, 0, -r2,   // p^0: a = c |k|^2
        0, 0, 2 * y,    // p^1: i = c 2i y
        0, -1, 1;       // p^2: -b = -c
    rhs << 0, 1, 0;
    const Eigen::Vector3d abc = sys.fullPivLu().solve(rhs);
    const double a = abc[0], b = abc[1];

    // The bracket is beta00 - |beta01|^2 g(lambda) with g affine because
    // beta11 kappa^2 = 1; sample g from the model machinery.
    JumpStart unit = js;
    unit.beta00 = 0.0;
    unit.beta01_sq = 1.0;
    const InnerModel probe = unit.model();
    const double l1 = js.kappa2 + 1.0, l2 = js.kappa2 + 2.0, l3 = js.kappa2 + 3.5;
    const double g1 = -model_bracket(probe, l1)(0, 0).real();
    const double g2 = -model_bracket(probe, l2)(0, 0).real();
    const double g3 = -model_bracket(probe, l3)(0, 0).real();
    const double slope = (g2 - g1) / (l2 - l1), intercept = g1 - slope * l1;
    if (std::abs(intercept + slope * l3 - g3) > 1e-10 * std::max(1.0, std::abs(g3)))
        throw Error(ErrorKind::NumericalSingularity, "jump-start bracket is not affine in lambda");
    // a - b lambda = beta00 - |beta01|^2 (intercept + slope lambda)
    js.beta01_sq = b / slope;
    js.beta00 = a + js.beta01_sq * intercept;

    double err = 0.0;
    for (int i = 0; i <= 200; ++i) {
        const double p = -10.0 + 0.1 * i + 1e-3;
        err = std::max(err, std::abs(jump_start_s(js, p) + jump_start_factor(k, p)));
    }
    js.match_error = err;
    if (!(err <= 1e-10))
        throw Error(ErrorKind::NumericalSingularity, "jump-start model does not reproduce the factor (error " + num(err) + ")");
    return js;
}

cplx jump_start_s(const JumpStart& js, cplx p) {
    return model_s_matrix(js.model(), CVec::Constant(1, p), p * p).s(0, 0);
}

Factorization factorize_and_complement(const ScalarModel& model, const std::vector<cplx>& factor) {
    Factorization f;
    f.zeros = scalar_model_zeros(model);
    std::vector<bool> used(f.zeros.size(), false);
    for (const cplx z : factor) {
        std::size_t best = f.zeros.size();
        double dist = kInf;
        for (std::size_t i = 0; i < f.zeros.size(); ++i)
            if (std::abs(f.zeros[i] - z) < dist) {
                dist = std::abs(f.zeros[i] - z);
                best = i;
            }
        if (best == f.zeros.size() || dist > 1e-8 * std::max(1.0, std::abs(z)))
            throw Error(ErrorKind::Configuration, "factor zero is not a zero of the full scattering matrix");
        if (used[best]) throw Error(ErrorKind::Configuration, "factor set lists the same zero twice");
        used[best] = true;
        f.factor.push_back(f.zeros[best]);
    }
    for (std::size_t i = 0; i < f.zeros.size(); ++i)
        if (!used[i]) f.complement.push_back(f.zeros[i]);
    return f;
}

} // namespace qnet
