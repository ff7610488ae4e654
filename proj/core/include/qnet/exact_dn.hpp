#pragma once

#include "qnet/common.hpp"
#include "qnet/network.hpp"
#include "qnet/well_spectra.hpp"

#include <memory>
#include <string>
#include <vector>

namespace qnet {

// A wire's bottom section on a well edge together with the basis columns of
// its channel modes.
struct SectionColumns {
    Edge edge = Edge::Left;
    double t0 = 0.0;
    double width = 1.0;
    std::vector<int> s;    // transverse indices
    std::vector<int> cols; // matching columns in the basis ordering
};

std::vector<SectionColumns> well_sections(const NetworkSpec& net, const std::string& well_id,
                                          const ChannelBasis& basis);

// Closed-form DN map of a constant-potential rectangle restricted to channel
// modes. Each tangential sine mode of a source edge is a one-dimensional
// boundary value problem across the well; the response series converges
// algebraically and is accelerated by subtracting its value at lambda = V,
// which is summed once at construction.
class RectangleDn {
public:
    enum class Axis { Auto, Vertical, Horizontal };

    RectangleDn(const WellSpec& well, std::vector<SectionColumns> sections, int n_cols,
                Axis mixed_axis = Axis::Auto, int static_terms = 100000);

    // Full n_cols x n_cols matrix (zero outside this well's columns).
    Mat evaluate(double lambda) const;

private:
    void accumulate(bool vertical_axis, double lambda, int q_from, int q_to, double weight, Mat& out,
                    bool include_mixed) const;

    WellSpec well_;
    std::vector<SectionColumns> sections_;
    int n_cols_;
    bool mixed_vertical_;
    Mat static_;
};

// Exact DN map of the 5-point discrete well, by sparse solves.
class GridDn {
public:
    GridDn(std::shared_ptr<const GridWell> grid, std::vector<SectionColumns> sections, int n_cols);
    Mat evaluate(double lambda) const;

private:
    std::shared_ptr<const GridWell> grid_;
    std::vector<SectionColumns> sections_;
    int n_cols_;
};

} // namespace qnet
