#pragma once

// Weyl (Dirichlet-to-Neumann) matrices of a δ-coupled metric graph and the
// Robin-to-Dirichlet blocks built from them.

#include "qgscat/graph.hpp"
#include "qgscat/linalg.hpp"

#include <span>

namespace qgscat {

/// Edges with |sin(k l)| below this are treated as sitting on a pole.
inline constexpr double kSinTolerance = 1e-12;

/// Square root on the branch Im k >= 0 (positive real for z > 0).
Complex sqrt_upper(Complex z);

/// A spectral parameter z together with its square root k on the upper branch.
class SpectralPoint {
public:
    explicit SpectralPoint(Complex z);

    /// z = -tau^2 with k = i*tau exactly.
    static SpectralPoint from_tau(double tau);

    Complex z() const { return z_; }
    Complex k() const { return k_; }
    SpectralPoint conjugate() const { return SpectralPoint(std::conj(z_)); }

private:
    SpectralPoint(Complex z, Complex k) : z_(z), k_(k) {}

    Complex z_;
    Complex k_;
};

enum class WeylKind { CompactPart, Full };

struct WeylMatrix {
    CMatrix values;
    SpectralPoint at;
    WeylKind kind;
};

/// cot, csc and tan(./2) of k*l, evaluated through e^{i k l} so that nothing
/// overflows on the positive imaginary k axis.
struct EdgeTrig {
    Complex cot;
    Complex csc;
    Complex half_tan;
    double abs_sin;
};

EdgeTrig edge_trig(Complex k, double length);

/// Weyl matrix of the compact part (leads ignored). Throws ZeroEnergy at
/// z = 0 and SpectralSingularity at an edge Dirichlet eigenvalue.
WeylMatrix m_compact(const MetricGraph& g, const SpectralPoint& z);

/// m_compact plus i k on the diagonal of every vertex carrying a lead.
WeylMatrix m_full(const MetricGraph& g, const SpectralPoint& z);

/// m_compact minus i k on the lead diagonal: the continuation of M(s)^* off
/// the positive axis (equal to the adjoint of m_full for real s > 0).
CMatrix m_reflected(const MetricGraph& g, const SpectralPoint& z);

/// Diagonal 0/1 projector onto vertices with a lead.
CMatrix lead_projector(const MetricGraph& g);

CMatrix coupling_matrix(const CVector& a);

/// Block of (M_compact(z) - diag(a))^{-1} on `subset` (in the given order).
CMatrix rtd_map(const MetricGraph& g, const CVector& couplings, std::span<const std::size_t> subset,
                const SpectralPoint& z);

/// Same, on the external vertex set.
CMatrix rtd_map_external(const MetricGraph& g, const CVector& couplings, const SpectralPoint& z);

/// Spectral norm of (M_compact(z) - diag(a))^{-1}; +inf when singular.
double resolvent_norm_probe(const MetricGraph& g, const CVector& couplings, const SpectralPoint& z);

} // namespace qgscat
