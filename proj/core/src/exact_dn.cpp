#include "qnet/exact_dn.hpp"

#include <Eigen/SparseLU>

#include <cmath>
#include <numbers>

namespace qnet {

namespace {

constexpr double kPi = std::numbers::pi;

double sinc(double z) { return std::abs(z) < 1e-8 ? 1.0 - z * z / 6.0 : std::sin(z) / z; }

// Integrals over [0, delta] of cos(c u + d) and sin(c u + d), stable for c -> 0.
double int_cos(double c, double d, double delta) { return delta * std::cos(d + 0.5 * c * delta) * sinc(0.5 * c * delta); }
double int_sin(double c, double d, double delta) { return delta * std::sin(d + 0.5 * c * delta) * sinc(0.5 * c * delta); }

// Projections of sin(k t), cos(k t) and exp(kappa t + shift) onto the channel
// mode sqrt(2/delta) sin(s pi (t - t0)/delta) supported on [t0, t0 + delta].
double proj_sin(int s, double t0, double delta, double k) {
    double alpha = s * kPi / delta;
    return std::sqrt(2.0 / delta) * 0.5 * (int_cos(alpha - k, -k * t0, delta) - int_cos(alpha + k, k * t0, delta));
}

double proj_cos(int s, double t0, double delta, double k) {
    double alpha = s * kPi / delta;
    return std::sqrt(2.0 / delta) * 0.5 * (int_sin(alpha + k, k * t0, delta) + int_sin(alpha - k, -k * t0, delta));
}

double proj_exp(int s, double t0, double delta, double kappa, double shift) {
    double alpha = s * kPi / delta;
    double sign = (s % 2 == 0) ? 1.0 : -1.0;
    return std::sqrt(2.0 / delta) * alpha *
           (std::exp(kappa * t0 + shift) - sign * std::exp(kappa * (t0 + delta) + shift)) / (alpha * alpha + kappa * kappa);
}

// One tangential mode: its cross-well profile X(x), x in [0, Ln], equal to 1
// on the source side and 0 on the opposite side.
struct CrossProfile {
    double kappa2, Ln;
    double root;  // kappa (evanescent) or k (oscillatory)
    bool evanescent;
    double e2;    // exp(-2 kappa Ln)

    CrossProfile(double kappa2_, double Ln_) : kappa2(kappa2_), Ln(Ln_) {
        evanescent = kappa2 > 0;
        if (evanescent) {
            root = std::sqrt(kappa2);
            e2 = std::exp(-2.0 * root * Ln);
        } else {
            root = kappa2 < 0 ? std::sqrt(-kappa2) : 1e-9 / Ln;
            e2 = 0.0;
        }
    }

    // Outward normal derivative of X on the source side.
    double d_same() const {
        if (evanescent) return root * (1.0 + e2) / (1.0 - e2);
        return root * std::cos(root * Ln) / std::sin(root * Ln);
    }
    // Outward normal derivative of X on the opposite side.
    double d_opposite() const {
        if (evanescent) return -root * 2.0 * std::exp(-root * Ln) / (1.0 - e2);
        return -root / std::sin(root * Ln);
    }
    // Projection of X onto a channel mode on a perpendicular edge; the
    // perpendicular edge coordinate is the cross-well coordinate x.
    double project(bool source_low, int s, double t0, double delta) const {
        if (evanescent) {
            double k = root;
            if (source_low) return (proj_exp(s, t0, delta, -k, 0.0) - proj_exp(s, t0, delta, k, -2.0 * k * Ln)) / (1.0 - e2);
            return (proj_exp(s, t0, delta, k, -k * Ln) - proj_exp(s, t0, delta, -k, -k * Ln)) / (1.0 - e2);
        }
        double k = root, sn = std::sin(k * Ln), cs = std::cos(k * Ln);
        if (source_low) return (sn * proj_cos(s, t0, delta, k) - cs * proj_sin(s, t0, delta, k)) / sn;
        return proj_sin(s, t0, delta, k) / sn;
    }
};

bool on_axis(Edge e, bool vertical_axis) { return is_vertical(e) == vertical_axis; }
bool low_side(Edge e) { return e == Edge::Left || e == Edge::Bottom; }

} // namespace

double sine_overlap(int s, double t0, double delta, int n, double L) { return proj_sin(s, t0, delta, n * kPi / L); }

std::vector<SectionColumns> well_sections(const NetworkSpec& net, const std::string& well_id,
                                          const ChannelBasis& basis) {
    std::vector<SectionColumns> out;
    for (std::size_t wi = 0; wi < net.wires.size(); ++wi) {
        const WireSpec& w = net.wires[wi];
        if (!w.semi_infinite() || w.attachments.front().well != well_id) continue;
        SectionColumns sec;
        sec.edge = w.attachments.front().edge;
        sec.t0 = w.attachments.front().offset;
        sec.width = w.width;
        for (std::size_t c = 0; c < basis.size(); ++c) {
            const ChannelMode& m = basis.mode(c);
            if (m.wire_index == wi) {
                sec.s.push_back(m.s);
                sec.cols.push_back(static_cast<int>(c));
            }
        }
        if (!sec.cols.empty()) out.push_back(std::move(sec));
    }
    return out;
}

RectangleDn::RectangleDn(const WellSpec& well, std::vector<SectionColumns> sections, int n_cols, Axis mixed_axis,
                         int static_terms)
    : well_(well), sections_(std::move(sections)), n_cols_(n_cols),
      mixed_vertical_(mixed_axis != Axis::Horizontal) {
    if (!well_.is_rectangle()) throw Error(ErrorKind::InvalidGeometry, "closed-form DN requires a rectangle");
    static_ = Mat::Zero(n_cols_, n_cols_);
    const double v = well_.potential;
    accumulate(true, v, 1, static_terms, 1.0, static_, mixed_vertical_);
    accumulate(false, v, 1, static_terms, 1.0, static_, !mixed_vertical_);
}

void RectangleDn::accumulate(bool vertical_axis, double lambda, int q_from, int q_to, double weight, Mat& out,
                             bool include_mixed) const {
    const double Lt = vertical_axis ? well_.height() : well_.width();
    const double Ln = vertical_axis ? well_.width() : well_.height();
    const double mu = well_.mass;
    const double pref = weight * (2.0 / Lt) / (2.0 * mu);

    std::vector<std::size_t> src, perp;
    for (std::size_t i = 0; i < sections_.size(); ++i)
        (on_axis(sections_[i].edge, vertical_axis) ? src : perp).push_back(i);
    if (src.empty()) return;
    if (!include_mixed) perp.clear();

    std::vector<Vec> ov(sections_.size());
    for (int q = q_from; q <= q_to; ++q) {
        const double beta = q * kPi / Lt;
        const CrossProfile prof(beta * beta - 2.0 * mu * (lambda - well_.potential), Ln);
        const double dsame = prof.d_same(), dopp = prof.d_opposite();
        for (std::size_t i : src) {
            const auto& sec = sections_[i];
            ov[i].resize(static_cast<Eigen::Index>(sec.s.size()));
            for (std::size_t a = 0; a < sec.s.size(); ++a) ov[i][a] = proj_sin(sec.s[a], sec.t0, sec.width, beta);
        }
        for (std::size_t i : src) {
            const auto& si = sections_[i];
            for (std::size_t j : src) {
                const auto& sj = sections_[j];
                const double d = (si.edge == sj.edge) ? dsame : dopp;
                for (std::size_t a = 0; a < si.s.size(); ++a)
                    for (std::size_t b = 0; b < sj.s.size(); ++b)
                        out(sj.cols[b], si.cols[a]) += pref * d * ov[i][a] * ov[j][b];
            }
            for (std::size_t j : perp) {
                const auto& sj = sections_[j];
                const double sigma = low_side(sj.edge) ? -1.0 : (q % 2 == 0 ? 1.0 : -1.0);
                for (std::size_t b = 0; b < sj.s.size(); ++b) {
                    const double pr = prof.project(low_side(si.edge), sj.s[b], sj.t0, sj.width);
                    for (std::size_t a = 0; a < si.s.size(); ++a) {
                        const double v = pref * ov[i][a] * sigma * beta * pr;
                        out(sj.cols[b], si.cols[a]) += v;
                        out(si.cols[a], sj.cols[b]) += v;
                    }
                }
            }
        }
    }
}

Mat RectangleDn::evaluate(double lambda) const {
    Mat out = static_;
    const double mu = well_.mass, v = well_.potential;
    for (bool vertical : {true, false}) {
        const double Lt = vertical ? well_.height() : well_.width();
        const double q_osc = Lt * std::sqrt(std::max(0.0, 2.0 * mu * (lambda - v))) / kPi;
        const int q_max = static_cast<int>(2.0 * q_osc) + 400;
        const bool mixed = vertical == mixed_vertical_;
        accumulate(vertical, lambda, 1, q_max, 1.0, out, mixed);
        accumulate(vertical, v, 1, q_max, -1.0, out, mixed);
    }
    return 0.5 * (out + out.transpose());
}

GridDn::GridDn(std::shared_ptr<const GridWell> grid, std::vector<SectionColumns> sections, int n_cols)
    : grid_(std::move(grid)), sections_(std::move(sections)), n_cols_(n_cols) {}

Mat GridDn::evaluate(double lambda) const {
    const GridWell& g = *grid_;
    const double h = g.h(), mu = g.spec().mass;
    const int n = g.unknowns();
    Eigen::SparseMatrix<double> a = g.operator_matrix();
    for (int i = 0; i < n; ++i) a.coeffRef(i, i) -= lambda;
    a.makeCompressed();
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(a);
    if (lu.info() != Eigen::Success)
        throw Error(ErrorKind::PoleProximity, "discrete DN: singular grid operator at " + std::to_string(lambda));

    struct Col { int col; const SectionColumns* sec; int s; std::vector<GridWell::SectionNode> nodes; };
    std::vector<Col> cols;
    for (const auto& sec : sections_) {
        auto nodes = g.section_nodes(sec.edge, sec.t0, sec.width);
        for (std::size_t k = 0; k < sec.cols.size(); ++k) cols.push_back({sec.cols[k], &sec, sec.s[k], nodes});
    }
    auto mode_value = [](const Col& c, double t) {
        return std::sqrt(2.0 / c.sec->width) * std::sin(c.s * kPi * (t - c.sec->t0) / c.sec->width);
    };
    Mat rhs = Mat::Zero(n, static_cast<Eigen::Index>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k)
        for (const auto& nd : cols[k].nodes) rhs(nd.inner, static_cast<Eigen::Index>(k)) += mode_value(cols[k], nd.t) / (2.0 * mu * h * h);
    Mat u = lu.solve(rhs);

    Mat out = Mat::Zero(n_cols_, n_cols_);
    for (std::size_t r = 0; r < cols.size(); ++r)
        for (std::size_t c = 0; c < cols.size(); ++c) {
            double acc = 0.0;
            for (const auto& nd : cols[r].nodes) {
                double g_here = (cols[r].sec == cols[c].sec) ? mode_value(cols[c], nd.t) : 0.0;
                acc += h * mode_value(cols[r], nd.t) * (g_here - u(nd.inner, static_cast<Eigen::Index>(c)));
            }
            out(cols[r].col, cols[c].col) = acc / (2.0 * mu * h);
        }
    // Half-cell correction: the one-sided difference (g - u_inner)/h misses
    // (h/2) u_nn, and u_nn = -u_tt - 2 mu (lambda - V) g on the wall. The term
    // is entire in lambda, so the polar part of the map is unchanged.
    for (const auto& c : cols) {
        const double beta = c.s * kPi / c.sec->width;
        out(c.col, c.col) += 0.5 * h * (beta * beta / (2.0 * mu) - (lambda - g.spec().potential));
    }
    return 0.5 * (out + out.transpose());
}

} // namespace qnet
