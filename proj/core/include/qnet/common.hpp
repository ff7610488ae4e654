#pragma once

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace qnet {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;

// Non-fatal diagnostics collected by operations that degrade gracefully.
using Warnings = std::vector<std::string>;

enum class ErrorKind {
    InvalidIndex,
    InvalidGeometry,
    DegenerateFermiLevel,
    BandEdge,
    PoleProximity,
    DispersionRoot,
    ThinViolation,
    RegimeViolation,
    NumericalSingularity,
    NoConvergence,
    Configuration,
    Unfittable,
    Io,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

inline void warn(Warnings* sink, std::string message) {
    if (sink) sink->push_back(std::move(message));
}

// Relative distance used for all "too close to" guards.
inline double rel_gap(double x, double y) {
    return std::abs(x - y) / std::max(1.0, std::max(std::abs(x), std::abs(y)));
}

constexpr double kThresholdTol = 1e-9;
constexpr double kPoleTol = 1e-7;
constexpr double kConditionGuard = 1e12;
constexpr double kEdgeGuard = 1e-4;

} // namespace qnet
