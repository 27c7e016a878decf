#include "support.hpp"

#include "qgscat/errors.hpp"
#include "qgscat/fleet.hpp"
#include "qgscat/oracle.hpp"
#include "qgscat/scattering.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>

using namespace qgscat;
using namespace qgscat::testing;

namespace {

constexpr Complex kI{0.0, 1.0};

CMatrix identity(Eigen::Index n) { return CMatrix::Identity(n, n); }

// Random graphs with random real couplings.
struct Case {
    MetricGraph g;
    CVector a;
};

Case random_case(std::mt19937_64& rng) {
    MetricGraph g = random_graph(rng);
    CVector a = random_couplings(rng, g.vertex_count()).cast<Complex>();
    return {g, a};
}

} // namespace

TEST_CASE("characteristic function of a single lead at z = 1 vanishes") {
    const CMatrix s = char_function(lead_only(0.0), SpectralPoint(1.0));
    CHECK(std::abs(s(0, 0)) < 1e-15);
}

TEST_CASE("characteristic function is a contraction on the upper half-plane") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> re(-40.0, 100.0);
    std::uniform_real_distribution<double> im(1e-4, 5.0);
    for (int trial = 0; trial < 200; ++trial) {
        const MetricGraph g = random_graph(rng);
        const CMatrix s = char_function(g, SpectralPoint(Complex(re(rng), im(rng))));
        CHECK(op_norm(s) <= 1.0 + 1e-12);
    }
}

TEST_CASE("weight identities in the upper half-plane") {
    std::mt19937_64 rng(32);
    std::uniform_real_distribution<double> re(-40.0, 100.0);
    std::uniform_real_distribution<double> im(1e-2, 5.0);
    for (int trial = 0; trial < 100; ++trial) {
        const MetricGraph g = random_graph(rng);
        const WeightMatrices w = weight_matrices(g, SpectralPoint(Complex(re(rng), im(rng))));
        CHECK(w.left_residual < 1e-12);
        CHECK(w.right_residual < 1e-12);
        Eigen::SelfAdjointEigenSolver<CMatrix> left(w.left, Eigen::EigenvaluesOnly);
        Eigen::SelfAdjointEigenSolver<CMatrix> right(w.right, Eigen::EigenvaluesOnly);
        CHECK(left.eigenvalues().minCoeff() > -1e-12);
        CHECK(right.eigenvalues().minCoeff() > -1e-12);
    }
}

TEST_CASE("weights at real energies") {
    SECTION("lead-free graph has zero weights") {
        MetricGraph g({vertex("a"), vertex("b")}, {edge("e", "a", "b", 1.3), edge("l", "b", "b", 0.8)});
        const WeightMatrices w = weight_matrices(g, SpectralPoint(7.0));
        CHECK(max_abs(w.left) < 1e-12);
        CHECK(max_abs(w.right) < 1e-12);
    }
    SECTION("rank is bounded by the number of leads") {
        std::mt19937_64 rng(33);
        std::uniform_real_distribution<double> energy(0.5, 80.0);
        for (int trial = 0; trial < 40; ++trial) {
            const MetricGraph g = random_graph(rng);
            try {
                const WeightMatrices w = weight_matrices(g, SpectralPoint(energy(rng)));
                Eigen::SelfAdjointEigenSolver<CMatrix> eig(w.left, Eigen::EigenvaluesOnly);
                const auto ev = eig.eigenvalues();
                const long significant = (ev.array().abs() > 1e-10).count();
                CHECK(significant <= long(g.lead_count()));
            } catch (const SpectralError&) {
            }
        }
    }
}

TEST_CASE("scattering matrix at zero coupling is the identity") {
    std::mt19937_64 rng(34);
    for (int trial = 0; trial < 30; ++trial) {
        const MetricGraph g = random_graph(rng);
        const CVector zero = CVector::Zero(Eigen::Index(g.vertex_count()));
        try {
            const SpectralPoint s(0.5 + trial);
            CHECK(max_abs(sigma_full(g, zero, s).values - identity(zero.size())) < 1e-12);
            CHECK(max_abs(sigma_external(g, zero, s).values - identity(Eigen::Index(g.lead_count()))) < 1e-12);
        } catch (const SpectralError&) {
        }
    }
}

TEST_CASE("scalar scattering matrix closed form") {
    for (double a : {-3.0, -0.5, 0.0, 1.0, 2.0, 4.5}) {
        for (double s : {0.3, 1.0, 4.0, 25.0}) {
            const MetricGraph g = lead_only(a);
            const CVector c = CVector::Constant(1, a);
            const Complex ik = kI * std::sqrt(s);
            const Complex want = (ik + a) / (ik - a);
            CHECK(std::abs(sigma_full(g, c, SpectralPoint(s)).values(0, 0) - want) < 1e-12);
            CHECK(std::abs(sigma_external(g, c, SpectralPoint(s)).values(0, 0) - want) < 1e-12);
            const Complex k = std::sqrt(s);
            CHECK(std::abs(sigma_chi_form(g, c, SpectralPoint(s))(0, 0) - (k - kI * a) / (k + kI * a)) < 1e-12);
        }
    }
    const CMatrix v = sigma_external(lead_only(2.0), CVector::Constant(1, 2.0), SpectralPoint(4.0)).values;
    CHECK(std::abs(v(0, 0) - Complex(0.0, -1.0)) < 1e-15);
}

TEST_CASE("external scattering matrix without leads is refused") {
    MetricGraph g({vertex("a"), vertex("b")}, {edge("e", "a", "b", 1.0)});
    CHECK_THROWS_AS(sigma_external(g, CVector::Zero(2), SpectralPoint(2.0)), NoLeads);
}

TEST_CASE("two leads joined by an edge agree with the plane-wave oracle") {
    MetricGraph g({vertex("v1", 0.7, true), vertex("v2", -1.2, true)}, {edge("e1", "v1", "v2", 1.0)});
    const CVector a = g.couplings();
    for (double s : {0.8, 3.1, 17.0, 60.0}) {
        const CMatrix model = sigma_external(g, a, SpectralPoint(s)).values;
        const CMatrix oracle = planewave_relative_scattering(g, a, s).matrix;
        CHECK(op_norm(model - oracle) < 1e-10);
        CHECK(op_norm(model.adjoint() * model - identity(2)) < 1e-12);
    }
}

TEST_CASE("external scattering matrix is unitary at real energies") {
    std::mt19937_64 rng(35);
    std::uniform_real_distribution<double> energy(0.1, 100.0);
    for (int graph = 0; graph < 10; ++graph) {
        const Case c = random_case(rng);
        for (int trial = 0; trial < 50; ++trial) {
            try {
                const CMatrix sig = sigma_external(c.g, c.a, SpectralPoint(energy(rng))).values;
                CHECK(op_norm(sig.adjoint() * sig - identity(sig.rows())) < 1e-10);
                CHECK(std::abs(std::abs(sig.determinant()) - 1.0) < 1e-10);
            } catch (const SpectralError&) {
            }
        }
    }
}

TEST_CASE("chi form at zero coupling and the conjugation identity") {
    std::mt19937_64 rng(36);
    std::uniform_real_distribution<double> energy(0.2, 60.0);
    int compared = 0;
    for (int trial = 0; trial < 60; ++trial) {
        Case c = random_case(rng);
        const SpectralPoint s(energy(rng));
        try {
            const CVector zero = CVector::Zero(c.a.size());
            CHECK(max_abs(sigma_chi_form(c.g, zero, s) - identity(zero.size())) < 1e-10);
            const CMatrix m = m_full(c.g, s).values;
            const CMatrix shift = m + kI * identity(m.rows());
            const CMatrix want = shift * sigma_full(c.g, c.a, s).values * shift.inverse();
            const CMatrix got = sigma_chi_form(c.g, c.a, s);
            CHECK(op_norm(got - want) < 1e-10 * std::max(1.0, op_norm(want)));
            ++compared;
        } catch (const SpectralError&) {
        }
    }
    CHECK(compared > 40);
}

TEST_CASE("coupling factor is unitary and obeys the reflection identity") {
    std::mt19937_64 rng(37);
    std::uniform_real_distribution<double> energy(0.2, 60.0);
    for (int trial = 0; trial < 60; ++trial) {
        Case c = random_case(rng);
        if (c.g.lead_count() == 0) {
            continue;
        }
        const double s = energy(rng);
        const SpectralPoint z(s);
        try {
            const ExternalFactors f = sigma_external_factors(c.g, c.a, z);
            const CMatrix& u = f.coupling_factor;
            CHECK(op_norm(u.adjoint() * u - identity(u.rows())) < 1e-10);
            CHECK(op_norm(f.coupling_factor * f.geometry_factor - sigma_external(c.g, c.a, z).values) < 1e-10);

            // (M - kappa)^{-1}(M^* - kappa) = I - 2 i sqrt(s) (M - kappa)^{-1} P_e
            const CMatrix m = m_full(c.g, z).values;
            const CMatrix mk = m - coupling_matrix(c.a);
            const CMatrix lhs = mk.lu().solve(CMatrix(m.adjoint() - coupling_matrix(c.a)));
            const CMatrix rhs =
                identity(m.rows()) - 2.0 * kI * std::sqrt(s) * mk.lu().solve(lead_projector(c.g));
            CHECK(op_norm(lhs - rhs) < 1e-10 * std::max(1.0, op_norm(lhs)));
        } catch (const SpectralError&) {
        }
    }
}

TEST_CASE("geometry factor does not depend on the couplings") {
    MetricGraph g({vertex("v1", 0, true), vertex("v2"), vertex("v3", 0, true)},
                  {edge("e1", "v1", "v2", 1.1), edge("e2", "v2", "v3", 0.6), edge("e3", "v3", "v1", 1.9)});
    const SpectralPoint z(5.5);
    const CMatrix g0 = geometry_factor(g, z);
    CVector a(3);
    a << 1.0, -2.0, 0.5;
    CHECK(max_abs(sigma_external_factors(g, a, z).geometry_factor - g0) < 1e-14);
    a << -4.0, 3.0, 2.0;
    CHECK(max_abs(sigma_external_factors(g, a, z).geometry_factor - g0) < 1e-14);
}
