#include "qgscat/weyl.hpp"

#include "qgscat/errors.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace qgscat {

namespace {

constexpr Complex kI{0.0, 1.0};

std::string describe(Complex z) {
    std::ostringstream os;
    os.precision(17);
    os << "z=(" << z.real() << "," << z.imag() << ")";
    return os.str();
}

} // namespace

Complex sqrt_upper(Complex z) {
    Complex k = std::sqrt(z);
    if (k.imag() < 0.0) {
        k = -k;
    }
    return k;
}

SpectralPoint::SpectralPoint(Complex z) : z_(z), k_(sqrt_upper(z)) {}

SpectralPoint SpectralPoint::from_tau(double tau) {
    if (!(tau > 0.0)) {
        throw InvalidArgument("tau must be positive");
    }
    return SpectralPoint(Complex(-tau * tau, 0.0), Complex(0.0, tau));
}

EdgeTrig edge_trig(Complex k, double length) {
    // theta has Im >= 0, so |v| <= 1 and w = v^2 never overflows.
    const Complex theta = k * length;
    EdgeTrig t;
    if (theta.imag() == 0.0) {
        // Real k: real trig keeps the compact matrix exactly real.
        const double x = theta.real();
        const double s = std::sin(x);
        t.cot = std::cos(x) / s;
        t.csc = 1.0 / s;
        t.half_tan = std::tan(0.5 * x);
        t.abs_sin = std::fabs(s);
        return t;
    }
    const Complex v = std::exp(kI * theta);
    const Complex w = v * v;
    t.cot = kI * (w + 1.0) / (w - 1.0);
    t.csc = 2.0 * kI * v / (w - 1.0);
    t.half_tan = -kI * (v - 1.0) / (v + 1.0);
    if (theta.imag() > 40.0) {
        t.abs_sin = std::numeric_limits<double>::infinity();
    } else {
        t.abs_sin = std::abs(std::sin(theta));
    }
    return t;
}

WeylMatrix m_compact(const MetricGraph& g, const SpectralPoint& z) {
    if (z.z() == Complex(0.0, 0.0)) {
        throw ZeroEnergy("Weyl matrix undefined at z = 0");
    }
    const auto n = static_cast<Eigen::Index>(g.vertex_count());
    const Complex k = z.k();
    CMatrix m = CMatrix::Zero(n, n);
    for (std::size_t e = 0; e < g.edge_count(); ++e) {
        const double l = g.edges()[e].length;
        const EdgeTrig t = edge_trig(k, l);
        if (!(t.abs_sin >= kSinTolerance)) {
            throw SpectralSingularity(describe(z.z()) + " is at a Dirichlet eigenvalue of edge '" +
                                      g.edges()[e].id + "' (|sin(kl)|=" + std::to_string(t.abs_sin) + ")");
        }
        const auto u = static_cast<Eigen::Index>(g.tail(e));
        const auto v = static_cast<Eigen::Index>(g.head(e));
        if (u == v) {
            m(u, u) += 2.0 * k * t.half_tan;
        } else {
            m(u, u) -= k * t.cot;
            m(v, v) -= k * t.cot;
            m(u, v) += k * t.csc;
            m(v, u) += k * t.csc;
        }
    }
    return WeylMatrix{std::move(m), z, WeylKind::CompactPart};
}

CMatrix lead_projector(const MetricGraph& g) {
    const auto n = static_cast<Eigen::Index>(g.vertex_count());
    CMatrix p = CMatrix::Zero(n, n);
    for (auto i : g.external_indices()) {
        p(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = 1.0;
    }
    return p;
}

WeylMatrix m_full(const MetricGraph& g, const SpectralPoint& z) {
    WeylMatrix w = m_compact(g, z);
    const Complex ik = kI * z.k();
    for (auto i : g.external_indices()) {
        w.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) += ik;
    }
    w.kind = WeylKind::Full;
    return w;
}

CMatrix m_reflected(const MetricGraph& g, const SpectralPoint& z) {
    CMatrix m = m_compact(g, z).values;
    const Complex ik = kI * z.k();
    for (auto i : g.external_indices()) {
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) -= ik;
    }
    return m;
}

CMatrix coupling_matrix(const CVector& a) {
    return a.asDiagonal();
}

namespace {

CMatrix shifted_compact(const MetricGraph& g, const CVector& couplings, const SpectralPoint& z) {
    if (static_cast<std::size_t>(couplings.size()) != g.vertex_count()) {
        throw InvalidArgument("coupling vector size does not match vertex count");
    }
    CMatrix a = m_compact(g, z).values;
    a.diagonal() -= couplings;
    return a;
}

} // namespace

CMatrix rtd_map(const MetricGraph& g, const CVector& couplings, std::span<const std::size_t> subset,
                const SpectralPoint& z) {
    for (auto i : subset) {
        if (i >= g.vertex_count()) {
            throw InvalidArgument("subset index out of range");
        }
    }
    const CMatrix shifted = shifted_compact(g, couplings, z);
    const CMatrix inv = checked_inverse(shifted, "M_compact - kappa at " + describe(z.z()));
    return principal_block(inv, subset);
}

CMatrix rtd_map_external(const MetricGraph& g, const CVector& couplings, const SpectralPoint& z) {
    const auto ext = g.external_indices();
    return rtd_map(g, couplings, ext, z);
}

double resolvent_norm_probe(const MetricGraph& g, const CVector& couplings, const SpectralPoint& z) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    CMatrix shifted;
    try {
        shifted = shifted_compact(g, couplings, z);
    } catch (const SpectralError&) {
        return inf;
    }
    if (shifted.size() == 0) {
        return 0.0;
    }
    if (!shifted.allFinite()) {
        return inf;
    }
    const double smin = min_singular_value(shifted);
    if (!(smin > 0.0)) {
        return inf;
    }
    return 1.0 / smin;
}

} // namespace qgscat
