#pragma once

#include "qnet/common.hpp"
#include "qnet/scattering.hpp"

#include <optional>
#include <vector>

namespace qnet {

// Zero-range star model with inner structure: a positive matrix
// A = E diag(k^2) E^T on C^{N_T} restricted to the orthogonal complement of a
// deficiency subspace N = range(frame), coupled to the open channels through
// boundary parameters beta.
struct InnerModel {
    Vec k2;          // eigenvalues of A, positive
    Mat eigvecs;     // orthonormal eigenvectors (columns)
    CMat frame;      // orthonormal basis of N (N_T x d)
    CMat beta00;     // open x open, Hermitian
    CMat beta01;     // open x d
    std::optional<CMat> beta11; // d x d Hermitian; absent in the plain layout
    double energy_origin = 0.0; // the Krein function is evaluated at lambda - origin
    bool deficiency_overlap = false; // N_i and N_{-i} share a direction

    std::size_t dim() const { return static_cast<std::size_t>(k2.size()); }
    std::size_t deficiency() const { return static_cast<std::size_t>(frame.cols()); }
    CMat beta10() const { return beta01.adjoint(); }
    Mat A() const { return eigvecs * k2.asDiagonal() * eigvecs.transpose(); }
};

// M(lambda) = P_N (I + lambda A)(A - lambda)^{-1} P_N in the frame basis.
CMat krein_function(const InnerModel& model, cplx lambda);

// Q_s = (F^* e_s)(F^* e_s)^*, one per eigenvector.
std::vector<CMat> q_matrices(const InnerModel& model);

// beta00 - beta01 G beta10 with G = M, or M (I + beta11 M)^{-1} when beta11 is set.
CMat model_bracket(const InnerModel& model, cplx lambda);

// S = (iK - B)^{-1} (iK + B) with B the model bracket.
ScatteringMatrix model_s_matrix(const InnerModel& model, const CVec& k_plus, cplx lambda);
ScatteringMatrix model_s_matrix(const InnerModel& model, const Vec& k_plus, double lambda);

// -sum_s k_s^2 beta01 Q_s beta10: the bracket then collapses to minus the Krein sum.
CMat choose_beta00(const InnerModel& model);

// S = (iK + Sigma)^{-1} (iK - Sigma) with the Krein sum
// Sigma = sum_s (1 + k_s^4)/(k_s^2 - lambda) beta01 Q_s beta10 (beta11 must be absent).
ScatteringMatrix krein_sum_s_matrix(const InnerModel& model, const Vec& k_plus, double lambda);

// Model whose scattering matrix equals the essential (few-pole) one: k_s^2 =
// lambda_s - origin, beta01 Q_s beta10 = phi_s phi_s^T / (1 + k_s^4), beta00
// from choose_beta00.
InnerModel fit_model(const std::vector<EssentialPole>& poles, double energy_origin = 0.0,
                     Warnings* warnings = nullptr);

// Scalar (one open channel) model.
struct ScalarModel {
    double beta = 0.0;
    Vec k2; // levels k_s^2
    Vec q;  // weights |<e, e_s>|^2
};

// (ip - beta^2 F)/(ip + beta^2 F), F = sum_s q_s (1 + k_s^4)/(k_s^2 - p^2); -1 at a level.
cplx scalar_model_s(const ScalarModel& model, cplx p);

// All 2N+1 zeros of the scalar model's S in the complex p plane: the
// numerator i p prod(k^2 - p^2) - beta^2 sum q_s (1 + k_s^4) prod_{t != s}(k_t^2 - p^2)
// solved through its companion matrix and polished by Newton steps.
std::vector<cplx> scalar_model_zeros(const ScalarModel& model);

// Continuation in beta of the resonance that starts at p = sqrt(k2[level]).
cplx resonance_continuation(const ScalarModel& model, std::size_t level, int steps = 16);

// prod (p - z)/(p - conj z).
cplx blaschke_s(const std::vector<cplx>& zeros, cplx p);

// One-level model with beta11 = 1/kappa^2 and kappa^2 = 1/|k|^2 whose
// scattering matrix is -(p - k)(p + conj k)/((p - conj k)(p + k)).
struct JumpStart {
    cplx k;
    double kappa2 = 0.0;
    double beta00 = 0.0;
    double beta01_sq = 0.0;
    double beta11 = 0.0;
    double match_error = 0.0; // max pointwise deviation on the validation grid

    InnerModel model() const;
};

// (p - k)(p + conj k)/((p - conj k)(p + k)).
cplx jump_start_factor(cplx k, cplx p);

JumpStart fit_jump_start(cplx k);
cplx jump_start_s(const JumpStart& js, cplx p);

struct Factorization {
    std::vector<cplx> zeros;      // all zeros of the full S
    std::vector<cplx> factor;     // factored-out group
    std::vector<cplx> complement; // the rest
    cplx factor_s(cplx p) const { return blaschke_s(factor, p); }
    cplx complement_s(cplx p) const { return blaschke_s(complement, p); }
};

// Splits the zeros of the full scalar S into the given factor set (matched
// to computed zeros) and its complement.
Factorization factorize_and_complement(const ScalarModel& model, const std::vector<cplx>& factor);

} // namespace qnet
