#pragma once

// Characteristic function, scattering matrices and the identities tying them
// to the Weyl matrix.
//
// Wherever a formula calls for M^* it is evaluated as m_reflected(), i.e. the
// analytic continuation of the boundary value M(s)^* from s > 0. On the
// positive axis the two coincide; off it (for instance at z = -tau^2) only
// the continuation keeps the expressions rational in M and k.

#include "qgscat/graph.hpp"
#include "qgscat/linalg.hpp"
#include "qgscat/weyl.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace qgscat {

/// S(z) = (M - iI)(M + iI)^{-1}, the Cayley transform of the full Weyl matrix.
CMatrix char_function(const MetricGraph& g, const SpectralPoint& z);

struct ChiPair {
    CMatrix plus;   // (I + i kappa) / 2
    CMatrix minus;  // (I - i kappa) / 2

    static ChiPair from_couplings(const CVector& a);
};

enum class ScatteringKind { Full, External };

struct ScatteringMatrix {
    CMatrix values;
    SpectralPoint at;
    ScatteringKind kind;
};

/// (M - kappa)^{-1} (M^* - kappa) (M^*)^{-1} M on the whole vertex space.
ScatteringMatrix sigma_full(const MetricGraph& g, const CVector& couplings, const SpectralPoint& z);

/// The external block of sigma_full. Throws NoLeads for a lead-free graph.
ScatteringMatrix sigma_external(const MetricGraph& g, const CVector& couplings, const SpectralPoint& z);

/// Coupling-dependent and geometry-only factors of sigma_external; their
/// product (in this order) reproduces it.
struct ExternalFactors {
    CMatrix coupling_factor;  // P_e (M - kappa)^{-1} (M^* - kappa) P_e
    CMatrix geometry_factor;  // P_e (M^*)^{-1} M P_e
};

ExternalFactors sigma_external_factors(const MetricGraph& g, const CVector& couplings,
                                       const SpectralPoint& z);

/// P_e (M^*)^{-1} M P_e: depends on lengths and topology only.
CMatrix geometry_factor(const MetricGraph& g, const SpectralPoint& z);

/// Scattering matrix written through S and the chi pair:
/// (I + chi^-(S - I))^{-1} (I + chi^+(S^* - I)) (I + S^*)^{-1} (I + S).
/// S^* is the adjoint of S, so this is meant for real s > 0.
CMatrix sigma_chi_form(const MetricGraph& g, const CVector& couplings, const SpectralPoint& s);

struct WeightMatrices {
    CMatrix left;          // I - S^* S
    CMatrix right;         // I - S S^*
    CMatrix left_from_m;   // -2i (M^* - iI)^{-1} (M - M^*) (M + iI)^{-1}
    CMatrix right_from_m;  //  2i (M + iI)^{-1} (M^* - M) (M^* - iI)^{-1}
    double left_residual = 0.0;
    double right_residual = 0.0;
};

/// Here M^* is the genuine adjoint of m_full at z.
WeightMatrices weight_matrices(const MetricGraph& g, const SpectralPoint& z);

struct ScatteringSample {
    Complex z;
    CMatrix sigma;
};

/// Samples of the external scattering matrix: the input of the inverse problem.
struct ScatteringDataset {
    std::string graph_hash;
    std::uint64_t seed = 0;
    double noise = 0.0;
    std::vector<ScatteringSample> samples;
};

} // namespace qgscat
