#include "qgscat/scattering.hpp"

#include "qgscat/errors.hpp"

namespace qgscat {

namespace {

constexpr Complex kI{0.0, 1.0};

CMatrix identity(Eigen::Index n) { return CMatrix::Identity(n, n); }

void check_size(const MetricGraph& g, const CVector& couplings) {
    if (static_cast<std::size_t>(couplings.size()) != g.vertex_count()) {
        throw InvalidArgument("coupling vector size does not match vertex count");
    }
}

} // namespace

CMatrix char_function(const MetricGraph& g, const SpectralPoint& z) {
    // Real z is read as the boundary value from above.
    if (z.z().imag() < 0.0) {
        throw InvalidArgument("characteristic function requires Im z >= 0");
    }
    const CMatrix m = m_full(g, z).values;
    const auto n = m.rows();
    CheckedLU plus(m + kI * identity(n), "M + iI");
    // S = (M - iI)(M + iI)^{-1}; solve from the right via the transpose,
    // using that M (hence M + iI) is complex symmetric.
    return plus.solve((m - kI * identity(n)).transpose()).transpose();
}

ChiPair ChiPair::from_couplings(const CVector& a) {
    const auto n = a.size();
    CMatrix kappa = coupling_matrix(a);
    return ChiPair{(identity(n) + kI * kappa) / 2.0, (identity(n) - kI * kappa) / 2.0};
}

ScatteringMatrix sigma_full(const MetricGraph& g, const CVector& couplings, const SpectralPoint& z) {
    check_size(g, couplings);
    const CMatrix m = m_full(g, z).values;
    const CMatrix ms = m_reflected(g, z);
    const CMatrix kappa = coupling_matrix(couplings);
    CheckedLU shifted(m - kappa, "M - kappa");
    CheckedLU adj(ms, "M^*");
    CMatrix sigma = shifted.solve((ms - kappa) * adj.solve(m));
    return ScatteringMatrix{std::move(sigma), z, ScatteringKind::Full};
}

ExternalFactors sigma_external_factors(const MetricGraph& g, const CVector& couplings,
                                       const SpectralPoint& z) {
    check_size(g, couplings);
    const auto ext = g.external_indices();
    if (ext.empty()) {
        throw NoLeads("graph has no external vertices");
    }
    const CMatrix m = m_full(g, z).values;
    const CMatrix ms = m_reflected(g, z);
    const CMatrix kappa = coupling_matrix(couplings);
    CheckedLU shifted(m - kappa, "M - kappa");
    CheckedLU adj(ms, "M^*");
    ExternalFactors f;
    f.coupling_factor = principal_block(shifted.solve(ms - kappa), ext);
    f.geometry_factor = principal_block(adj.solve(m), ext);
    return f;
}

ScatteringMatrix sigma_external(const MetricGraph& g, const CVector& couplings, const SpectralPoint& z) {
    if (g.external_indices().empty()) {
        throw NoLeads("graph has no external vertices");
    }
    ScatteringMatrix full = sigma_full(g, couplings, z);
    const auto ext = g.external_indices();
    return ScatteringMatrix{principal_block(full.values, ext), z, ScatteringKind::External};
}

CMatrix geometry_factor(const MetricGraph& g, const SpectralPoint& z) {
    const auto ext = g.external_indices();
    if (ext.empty()) {
        throw NoLeads("graph has no external vertices");
    }
    const CMatrix m = m_full(g, z).values;
    CheckedLU adj(m_reflected(g, z), "M^*");
    return principal_block(adj.solve(m), ext);
}

CMatrix sigma_chi_form(const MetricGraph& g, const CVector& couplings, const SpectralPoint& s) {
    check_size(g, couplings);
    const CMatrix m = m_full(g, s).values;
    const auto n = m.rows();
    const CMatrix id = identity(n);
    const CMatrix sm = CheckedLU(m + kI * id, "M + iI").solve((m - kI * id).transpose()).transpose();
    const CMatrix sa = sm.adjoint();
    const ChiPair chi = ChiPair::from_couplings(couplings);

    const CMatrix first = id + chi.minus * (sm - id);
    const CMatrix second = id + chi.plus * (sa - id);
    CheckedLU first_lu(first, "I + chi^-(S - I)");
    CheckedLU star_lu(id + sa, "I + S^*");
    return first_lu.solve(second * star_lu.solve(id + sm));
}

WeightMatrices weight_matrices(const MetricGraph& g, const SpectralPoint& z) {
    const CMatrix m = m_full(g, z).values;
    const CMatrix ma = m.adjoint();
    const auto n = m.rows();
    const CMatrix id = identity(n);
    CheckedLU plus(m + kI * id, "M + iI");
    CheckedLU adj_minus(ma - kI * id, "M^* - iI");
    const CMatrix s = plus.solve((m - kI * id).transpose()).transpose();

    WeightMatrices w;
    w.left = id - s.adjoint() * s;
    w.right = id - s * s.adjoint();
    const CMatrix plus_inv = plus.inverse();
    const CMatrix adj_minus_inv = adj_minus.inverse();
    w.left_from_m = -2.0 * kI * adj_minus_inv * (m - ma) * plus_inv;
    w.right_from_m = 2.0 * kI * plus_inv * (ma - m) * adj_minus_inv;
    w.left_residual = (w.left - w.left_from_m).norm();
    w.right_residual = (w.right - w.right_from_m).norm();
    return w;
}

} // namespace qgscat
