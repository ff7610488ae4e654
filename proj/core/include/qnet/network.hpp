#pragma once

#include "qnet/common.hpp"

#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace qnet {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Edges of a well's bounding rectangle [0,a] x [0,b]. The edge coordinate runs
// along y on Left/Right and along x on Bottom/Top.
enum class Edge { Left, Right, Bottom, Top };

const char* to_string(Edge e);
Edge edge_from_string(const std::string& s);
inline bool is_vertical(Edge e) { return e == Edge::Left || e == Edge::Right; }

struct Attachment {
    std::string well;
    Edge edge = Edge::Left;
    double offset = 0.0; // start of the wire's bottom section along the edge
};

struct WireSpec {
    std::string id;
    double width = 1.0;
    double length = kInf; // kInf for semi-infinite wires
    double potential = 0.0;
    double mass_par = 0.5;
    double mass_perp = 0.5;
    std::vector<Attachment> attachments;

    bool semi_infinite() const { return !(length < kInf); }
};

// Axis-aligned box in well-local coordinates.
struct Box {
    double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
    bool contains(double x, double y) const { return x > x0 && x < x1 && y > y0 && y < y1; }
};

struct RectGeometry {
    double a = 1.0;
    double b = 1.0;
};

// Staircase domain on a uniform grid: the bounding rectangle minus obstacle
// boxes, with optional piecewise-constant potential patches added to the
// well's base potential.
struct GridGeometry {
    double a = 1.0;
    double b = 1.0;
    double h = 0.05;
    std::vector<Box> obstacles;
    std::vector<std::pair<Box, double>> patches;
};

struct WellSpec {
    std::string id;
    std::variant<RectGeometry, GridGeometry> geometry = RectGeometry{};
    double mass = 0.5;
    double potential = 0.0;

    bool is_rectangle() const { return std::holds_alternative<RectGeometry>(geometry); }
    double width() const;  // a
    double height() const; // b
    double edge_length(Edge e) const { return is_vertical(e) ? height() : width(); }
};

struct NetworkSpec {
    std::vector<WellSpec> wells;
    std::vector<WireSpec> wires;
    double fermi_level = 0.0;

    const WellSpec& well(const std::string& id) const;
    std::size_t well_index(const std::string& id) const;
    const WireSpec& wire(const std::string& id) const;
};

// Throws InvalidGeometry with a message naming the offending item.
void validate(const NetworkSpec& net);

struct ChannelMode {
    std::string wire;
    std::size_t wire_index = 0; // index into NetworkSpec::wires
    int s = 1;
    double threshold = 0.0;
    double mass_par = 0.5;
    bool open = false;
};

struct ChannelBasis {
    std::vector<ChannelMode> open_modes;
    std::vector<ChannelMode> closed_modes;
    int s_max = 1;
    bool scattering_defined = true; // false when no channel is open

    std::size_t n_open() const { return open_modes.size(); }
    std::size_t n_closed() const { return closed_modes.size(); }
    std::size_t size() const { return n_open() + n_closed(); }
    // Column ordering shared by every trace matrix: open modes then closed.
    const ChannelMode& mode(std::size_t col) const {
        return col < n_open() ? open_modes[col] : closed_modes[col - n_open()];
    }
};

struct Band {
    double lo = -kInf; // largest open threshold
    double hi = kInf;  // smallest closed threshold
    double width() const { return hi - lo; }
    double guarded_lo() const { return lo + kEdgeGuard * std::max(1.0, std::abs(lo)); }
    double guarded_hi() const { return hi - kEdgeGuard * std::max(1.0, std::abs(hi)); }
};

double threshold(const WireSpec& wire, int s);

ChannelBasis classify_channels(const NetworkSpec& net, int s_max);

Band spectral_band(const ChannelBasis& basis, Warnings* warnings = nullptr);
Band spectral_band(const NetworkSpec& net, Warnings* warnings = nullptr);

// Wavenumbers sqrt(2 mu_par) sqrt(lambda - T) of open modes.
Vec k_plus(const ChannelBasis& basis, double lambda);
// Decrements -sqrt(2 mu_par) sqrt(T - lambda) of closed modes.
Vec k_minus(const ChannelBasis& basis, double lambda);

// Flux-normalized versions K/(2 mu_par): these enter the matching conditions
// together with the mass-weighted DN map and reduce to K when mu_par = 1/2.
Vec k_plus_flux(const ChannelBasis& basis, double lambda);
Vec k_minus_flux(const ChannelBasis& basis, double lambda);
// Analytic continuation of the open wavenumbers to complex energies
// (principal square root), flux-normalized.
CVec k_plus_flux(const ChannelBasis& basis, cplx lambda);

// Typical level spacing of a network's wells at energy lambda (Weyl law).
double level_spacing(const NetworkSpec& net, double lambda);

} // namespace qnet
