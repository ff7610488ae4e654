#include "doctest.h"
#include "support.hpp"

#include "qnet/dn_map.hpp"
#include "qnet/exact_dn.hpp"

#include <memory>

using namespace qnet;
using namespace qnet::testing;

namespace {

// One open mode (threshold 1) and one closed mode (threshold 9).
ChannelBasis scalar_basis() { return synthetic_basis({1.0}, {9.0}); }

Mat traces(std::initializer_list<std::initializer_list<double>> rows) {
    Mat m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
    Eigen::Index r = 0;
    for (const auto& row : rows) {
        Eigen::Index c = 0;
        for (double v : row) m(r, c++) = v;
        ++r;
    }
    return m;
}

ErrorKind kind_of(const auto& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an error");
    return ErrorKind::Io;
}

} // namespace

TEST_CASE("a single retained eigenvalue gives a one-term series") {
    const ChannelBasis basis = scalar_basis();
    SpectralData d = synthetic_data({5.0}, traces({{0.7, 0.3}}));
    d.prefactor[0] = 0.25; // 1/(2 mu)^2 with mu = 1
    const DnBlocks b = dn_blocks(d, basis, 3.0);
    CHECK(b.pp(0, 0) == doctest::Approx(0.25 * 0.49 / (3.0 - 5.0)).epsilon(1e-15));
    CHECK(b.pm(0, 0) == doctest::Approx(0.25 * 0.21 / (3.0 - 5.0)).epsilon(1e-15));
    CHECK(b.mm(0, 0) == doctest::Approx(0.25 * 0.09 / (3.0 - 5.0)).epsilon(1e-15));
    CHECK(b.mp(0, 0) == b.pm(0, 0));

    const DnBlocks far = dn_blocks(d, basis, 1e9);
    CHECK(far.full().cwiseAbs().maxCoeff() < 1e-9);
    CHECK(kind_of([&] { dn_blocks(d, basis, 5.0 + 1e-9); }) == ErrorKind::PoleProximity);
}

TEST_CASE("full and from_full are inverse") {
    Mat f(3, 3);
    f << 1, 2, 3, 2, 4, 5, 3, 5, 6;
    const DnBlocks b = DnBlocks::from_full(f, 1, 2.0);
    CHECK(b.pp.rows() == 1);
    CHECK(b.mm.rows() == 2);
    CHECK((b.full() - f).norm() == 0.0);
}

TEST_CASE("intermediate DN map by block elimination") {
    SUBCASE("decoupled channels") {
        Mat f = Mat::Zero(2, 2);
        f(0, 0) = 1.5;
        f(1, 1) = -0.5;
        const IntermediateDn idn = intermediate_dn(DnBlocks::from_full(f, 1, 2.0), Vec::Constant(1, -2.0));
        CHECK(idn.matrix(0, 0) == 1.5);
    }
    SUBCASE("scalar elimination a - c^2/(b - k)") {
        const double a = 0.3, b = 0.8, c = -1.1, k = -2.5;
        Mat f(2, 2);
        f << a, c, c, b;
        const IntermediateDn idn = intermediate_dn(DnBlocks::from_full(f, 1, 2.0), Vec::Constant(1, k));
        CHECK(idn.matrix(0, 0) == doctest::Approx(a - c * c / (b - k)).epsilon(1e-15));
    }
    SUBCASE("singular denominator is a dispersion root") {
        Mat f(2, 2);
        f << 0.3, 1.0, 1.0, -2.5;
        CHECK(kind_of([&] { intermediate_dn(DnBlocks::from_full(f, 1, 2.0), Vec::Constant(1, -2.5)); }) ==
              ErrorKind::DispersionRoot);
    }
}

TEST_CASE("rank-one resonance data: the pole cancels in the intermediate map") {
    // DN^L = -a^2 k/(b^2 - k (lam - lam0)) for a single row (a, b): finite at lam0.
    const ChannelBasis basis = scalar_basis();
    const double a = 0.8, b = 0.6, lam0 = 5.0;
    const SpectralData d = synthetic_data({lam0}, traces({{a, b}}));
    auto dnl = [&](double lam) {
        const DnBlocks blocks = dn_blocks(d, basis, lam);
        return intermediate_dn(blocks, k_minus_flux(basis, lam)).matrix(0, 0);
    };
    const double lo = dnl(lam0 - 1e-4), hi = dnl(lam0 + 1e-4);
    const double k0 = k_minus_flux(basis, lam0)[0];
    // Smooth through lam0: the two probes differ by about slope * 2e-4 with slope near 20.
    CHECK(std::abs(lo - hi) < 1e-2);
    CHECK((lo + hi) / 2.0 == doctest::Approx(-a * a * k0 / (b * b)).epsilon(1e-4));
    for (double lam : {3.0, 4.5, 6.0, 7.5}) {
        const double k = k_minus_flux(basis, lam)[0];
        CHECK(dnl(lam) == doctest::Approx(-a * a * k / (b * b - k * (lam - lam0))).epsilon(1e-13));
    }
}

TEST_CASE("exact DN diagonal entries decrease between eigenvalues") {
    const NetworkSpec net = offset_two_wire();
    const ChannelBasis basis = classify_channels(net, 4);
    const SpectralData d = build_spectral_data(net, basis);
    const double step = 1e-5;
    for (double lam = 10.3; lam < 39.0; lam += 0.37) {
        bool near = false;
        for (const auto& p : d.pairs) near = near || std::abs(p.eigenvalue - lam) < 0.01;
        if (near) continue;
        const Mat lo = dn_blocks(d, basis, lam - step).full(), hi = dn_blocks(d, basis, lam + step).full();
        CHECK(((hi - lo).diagonal().array() < 0).all());
        const Mat mid = dn_blocks(d, basis, lam).full();
        CHECK((mid - mid.transpose()).cwiseAbs().maxCoeff() <= 1e-13 * std::max(1.0, mid.cwiseAbs().maxCoeff()));
    }
}

TEST_CASE("exact background is smooth through a retained level") {
    // The lowest level of a unit-height channel has no closed-channel trace, so it is a decoupled pole
    // and energies land on it exactly.
    const NetworkSpec net = straight_through(2.0, 20.0);
    const ChannelBasis basis = classify_channels(net, 4);
    const SpectralData d = build_spectral_data(net, basis);
    REQUIRE(d.background);
    const double lam0 = d.pairs.front().eigenvalue;
    const Mat at = d.background->evaluate(lam0);
    REQUIRE(at.allFinite());
    // Second differences of a smooth function stay small across the level.
    const double step = 1e-3;
    const Mat lo = d.background->evaluate(lam0 - step), hi = d.background->evaluate(lam0 + step);
    CHECK((lo + hi - 2.0 * at).cwiseAbs().maxCoeff() <= 1e-4 * std::max(1.0, at.cwiseAbs().maxCoeff()));
    const Mat blocks = dn_blocks(d, basis, lam0, lam0).full();
    CHECK(blocks.allFinite());
}

TEST_CASE("rectangle DN map is independent of the expansion axis") {
    const NetworkSpec net = rect_network(2.0, 1.5, {{Edge::Left, 0.25}, {Edge::Bottom, 0.5}}, 20.0);
    const ChannelBasis basis = classify_channels(net, 4);
    const auto sections = well_sections(net, "W", basis);
    const int n = static_cast<int>(basis.size());
    const RectangleDn vertical(net.wells[0], sections, n, RectangleDn::Axis::Vertical);
    const RectangleDn horizontal(net.wells[0], sections, n, RectangleDn::Axis::Horizontal);
    for (double lam : {12.3, 18.0, 27.7}) {
        const Mat v = vertical.evaluate(lam), h = horizontal.evaluate(lam);
        CHECK((v - h).cwiseAbs().maxCoeff() <= 1e-10 * std::max(1.0, v.cwiseAbs().maxCoeff()));
    }
}

TEST_CASE("discrete DN map converges to the rectangle closed form at second order") {
    const NetworkSpec net = rect_network(2.0, 1.5, {{Edge::Left, 0.0}, {Edge::Right, 0.5}}, 20.0);
    const ChannelBasis basis = classify_channels(net, 3);
    const auto sections = well_sections(net, "W", basis);
    const int n = static_cast<int>(basis.size());
    const Mat exact = RectangleDn(net.wells[0], sections, n).evaluate(17.5);
    std::vector<double> err;
    for (double h : {1.0 / 16, 1.0 / 32, 1.0 / 64}) {
        auto grid = std::make_shared<GridWell>(net.wells[0], h);
        err.push_back((GridDn(grid, sections, n).evaluate(17.5) - exact).cwiseAbs().maxCoeff());
    }
    CHECK(err[0] / err[1] > 3.0);
    CHECK(err[1] / err[2] > 3.0);
}

TEST_CASE("thin network norm") {
    CHECK(thin_network_norm(Mat::Zero(2, 2), Vec::Constant(2, -3.0)) == 0.0);
    CHECK(thin_network_norm(Mat::Constant(1, 1, 0.6), Vec::Constant(1, -2.0)) == doctest::Approx(0.3));
    Mat k(2, 2);
    k << 1.0, 0.5, 0.5, 2.0;
    Vec km(2);
    km << -1.0, -4.0;
    // |K|^{-1/2} k |K|^{-1/2} = [[1, 0.25], [0.25, 0.5]].
    const double expected = 0.75 + std::sqrt(0.0625 + 0.0625);
    CHECK(thin_network_norm(k, km) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("resonance split reassembles the blocks") {
    const ChannelBasis basis = synthetic_basis({1.0, 1.5}, {9.0, 10.0});
    const SpectralData d =
        synthetic_data({3.0, 5.0, 7.0, 12.0}, traces({{0.3, -0.2, 0.5, 0.1},
                                                      {0.8, 0.4, 0.6, -0.3},
                                                      {-0.1, 0.9, 0.2, 0.4},
                                                      {0.5, 0.5, -0.7, 0.2}}));
    const double lam = 4.6;
    const ResonanceSplit sp = resonance_split(d, basis, lam, 5.0);
    CHECK(sp.multiplicity == 1);
    CHECK(sp.dyad_rank() == 1);
    const DnBlocks b = dn_blocks(d, basis, lam);
    const double w = 1.0 / (4.0 * sp.mu * sp.mu) / (lam - 5.0);
    CHECK((sp.kpp + w * sp.phi_plus * sp.phi_plus.transpose() - b.pp).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((sp.kpm + w * sp.phi_plus * sp.phi_minus.transpose() - b.pm).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((sp.kmm + w * sp.phi_minus * sp.phi_minus.transpose() - b.mm).cwiseAbs().maxCoeff() < 1e-14);

    SUBCASE("single eigenvalue data leaves no remainder") {
        const SpectralData one = synthetic_data({5.0}, traces({{0.8, 0.4, 0.6, -0.3}}));
        const ResonanceSplit s1 = resonance_split(one, basis, lam, 5.0);
        CHECK(s1.kpp.norm() == 0.0);
        CHECK(s1.kpm.norm() == 0.0);
        CHECK(s1.kmm.norm() == 0.0);
    }
    SUBCASE("degenerate group has a dyad of rank equal to its multiplicity") {
        const SpectralData deg =
            synthetic_data({5.0, 5.0}, traces({{0.8, 0.4, 0.6, -0.3}, {-0.1, 0.9, 0.2, 0.4}}));
        const ResonanceSplit s2 = resonance_split(deg, basis, lam, 5.0);
        CHECK(s2.multiplicity == 2);
        CHECK(s2.dyad_rank() == 2);
    }
}

TEST_CASE("nearest eigenvalue refuses ties") {
    const SpectralData d = synthetic_data({4.0, 6.0}, traces({{1.0, 0.0}, {0.0, 1.0}}));
    CHECK(nearest_eigenvalue(d, 4.8) == 4.0);
    CHECK(kind_of([&] { nearest_eigenvalue(d, 5.0); }) == ErrorKind::Configuration);
}

TEST_CASE("denominator D and the first-order shift") {
    const Vec km = Vec::Constant(1, -4.41);
    SUBCASE("decoupled resonance") {
        const Vec zero = Vec::Zero(1);
        CHECK(denominator_D(zero, Mat::Zero(1, 1), km, 5.0, 5.0, 0.5) == 0.0);
        CHECK(shift_estimate(zero, km, 5.0, 0.5) == 5.0);
    }
    SUBCASE("scalar shift arithmetic") {
        CHECK(shift_estimate(Vec::Ones(1), km, 5.0, 0.5) == doctest::Approx(5.0 - 0.226757369614512).epsilon(1e-14));
    }
    SUBCASE("scalar zero of D by bisection matches the shift to first order") {
        const double f = 0.2, kappa = 4.41;
        auto d_of = [&](double lam) {
            return denominator_D(Vec::Constant(1, f), Mat::Zero(1, 1), Vec::Constant(1, -kappa), lam, 5.0, 0.5);
        };
        double lo = 4.0, hi = 5.0;
        REQUIRE(d_of(lo) < 0);
        REQUIRE(d_of(hi) > 0);
        for (int i = 0; i < 200; ++i) {
            const double mid = 0.5 * (lo + hi);
            (d_of(mid) < 0 ? lo : hi) = mid;
        }
        CHECK(lo < 5.0);
        CHECK(lo == doctest::Approx(shift_estimate(Vec::Constant(1, f), Vec::Constant(1, -kappa), 5.0, 0.5))
                        .epsilon(1e-12));
    }
    SUBCASE("singular k is a thin-network violation") {
        CHECK(kind_of([&] {
                  denominator_D(Vec::Ones(1), Mat::Constant(1, 1, -4.41), km, 5.0, 5.0, 0.5);
              }) == ErrorKind::ThinViolation);
    }
}

TEST_CASE("approximate residue vector") {
    const Vec pp = (Vec(2) << 0.5, -0.2).finished();
    const Vec pm = (Vec(1) << 0.3).finished();
    CHECK((residue_vector_approx(pp, pm, Mat::Zero(2, 1), Mat::Constant(1, 1, 2.0)) - pp).norm() == 0.0);
    const Vec r = residue_vector_approx(pp, pm, Mat::Constant(2, 1, 1.0), Mat::Constant(1, 1, 2.0));
    CHECK(r[0] == doctest::Approx(0.5 - 0.15));
    CHECK(r[1] == doctest::Approx(-0.2 - 0.15));
}

TEST_CASE("residue extraction recovers the dyad") {
    const Vec v = (Vec(3) << 0.4, -1.2, 0.7).finished();
    const double pole = 7.3;
    auto f = [&](double x) -> Mat {
        Mat smooth(3, 3);
        smooth << std::sin(x), x, 1.0, x, std::cos(x), x * x, 1.0, x * x, std::exp(0.1 * x);
        return v * v.transpose() / (x - pole) + smooth;
    };
    const Mat r = extract_residue(f, pole, 1e-3);
    CHECK((r - v * v.transpose()).cwiseAbs().maxCoeff() < 1e-10);
    const Vec w = residue_vector(r);
    CHECK((w + v).norm() < 1e-10); // sign fixed by the largest component
}

TEST_CASE("tail sensitivity is finite and vanishes without a tail") {
    const NetworkSpec net = offset_two_wire();
    const ChannelBasis basis = classify_channels(net, 3);
    SpectralOptions opts;
    opts.exact_background = false;
    const SpectralData d = build_spectral_data(net, basis, opts);
    const double t = tail_sensitivity(d, basis, 20.0);
    CHECK(std::isfinite(t));
    CHECK(t > 0.0);
    SpectralData low = d;
    low.lambda_cut = 1e6;
    CHECK(tail_sensitivity(low, basis, 20.0) == 0.0);
}
