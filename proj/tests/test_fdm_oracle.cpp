#include "doctest.h"
#include "support.hpp"

#include "qnet/fdm_oracle.hpp"

using namespace qnet;
using namespace qnet::testing;

namespace {

std::vector<double> band_points(const Band& band, int n) {
    std::vector<double> out;
    for (int i = 0; i < n; ++i) out.push_back(band.lo + band.width() * (0.1 + 0.8 * (i + 0.5) / n));
    return out;
}

} // namespace

TEST_CASE("grid scene of a straight waveguide transmits fully") {
    const NetworkSpec net = straight_through();
    const ChannelBasis basis = classify_channels(net, 2);
    const Band band = spectral_band(basis);
    const GridScene scene(net, basis, 1.0 / 32, band.hi);
    for (double lam : band_points(band, 5)) {
        const GridScene::Solution s = scene.solve(lam);
        CHECK(std::abs(s.s_flux(0, 0)) <= 1e-3);
        CHECK(std::abs(std::abs(s.s_flux(1, 0)) - 1.0) <= 1e-3);
        CHECK(s.unitarity_defect <= 5e-3);
        CHECK(s.incoming_fit_error < 1e-8);
    }
}

TEST_CASE("grid scene of a separable well follows the square-well transmission") {
    const double v = -5.0, length = 2.0;
    const NetworkSpec net = separable_well(length, v, 1.5 * kPi * kPi);
    const ChannelBasis basis = classify_channels(net, 2);
    const Band band = spectral_band(basis);
    const GridScene scene(net, basis, 1.0 / 32, band.hi);
    for (double lam : band_points(band, 6)) {
        const cplx t = square_well_t(lam - kPi * kPi, v, length);
        CHECK(std::abs(std::abs(scene.solve(lam).s_flux(1, 0)) - std::abs(t)) < 1e-2);
    }
}

TEST_CASE("grid and DN scattering converge at second order") {
    const Pipeline p(offset_two_wire());
    const std::vector<double> lams = band_points(p.band(), 4);
    std::vector<double> dev;
    for (double h : {1.0 / 8, 1.0 / 16, 1.0 / 32}) {
        double worst = 0.0;
        for (const OracleRow& r : oracle_compare(p, lams, h)) {
            worst = std::max(worst, r.deviation);
            CHECK(r.fdm_defect <= 5e-3);
        }
        dev.push_back(worst);
    }
    MESSAGE("deviations " << dev[0] << " " << dev[1] << " " << dev[2]);
    CHECK(dev[1] < dev[0]);
    CHECK(dev[2] < dev[1]);
    CHECK(dev[2] < 5e-2);
    CHECK(dev[0] / dev[1] > 2.5);
    CHECK(dev[1] / dev[2] > 2.5);
}

TEST_CASE("oracle comparison is independent of the thread count") {
    const Pipeline p(offset_two_wire());
    const std::vector<double> lams = band_points(p.band(), 5);
    const auto a = oracle_compare(p, lams, 1.0 / 8, 1), b = oracle_compare(p, lams, 1.0 / 8, 3);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].deviation == b[i].deviation);
        CHECK(a[i].t_fdm == b[i].t_fdm);
    }
}

TEST_CASE("discrete wire modes") {
    const NetworkSpec net = straight_through();
    const ChannelBasis basis = classify_channels(net, 2);
    const GridScene scene(net, basis, 1.0 / 16, 20.0);
    REQUIRE(scene.wires().size() == 2);
    const auto& w = scene.wires()[0];
    // Orthonormal discrete sine modes.
    for (int s = 1; s < 4; ++s)
        for (int r = 1; r < 4; ++r) {
            double dot = 0.0;
            for (int t = 1; t < w.n; ++t) dot += GridScene::mode(w, s, t) * GridScene::mode(w, r, t);
            CHECK(dot == doctest::Approx(s == r ? 1.0 : 0.0).epsilon(1e-12));
        }
    // Open modes propagate with a unit-modulus factor, closed ones decay.
    CHECK(scene.propagating(w, 1, 15.0));
    CHECK(std::abs(std::abs(scene.outgoing_factor(w, 1, 15.0)) - 1.0) < 1e-14);
    CHECK_FALSE(scene.propagating(w, 2, 15.0));
    CHECK(std::abs(scene.outgoing_factor(w, 2, 15.0)) < 1.0);
}
