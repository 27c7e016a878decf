#include "support.hpp"

#include "qgscat/errors.hpp"
#include "qgscat/fleet.hpp"
#include "qgscat/oracle.hpp"
#include "qgscat/scattering.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace qgscat;
using namespace qgscat::testing;
using Catch::Matchers::WithinAbs;

namespace {

constexpr Complex kI{0.0, 1.0};
constexpr double kPi = std::numbers::pi;

MetricGraph neumann_interval() { return MetricGraph({vertex("a"), vertex("b")}, {edge("e", "a", "b", kPi)}); }

} // namespace

TEST_CASE("plane-wave reflection off a single vertex") {
    for (double a : {-2.5, 0.0, 0.3, 2.0, 7.0}) {
        for (double s : {0.25, 1.0, 9.0, 50.0}) {
            const Complex ik = kI * std::sqrt(s);
            const PlaneWaveResult r = planewave_scattering(lead_only(a), CVector::Constant(1, a), s);
            CHECK(std::abs(r.matrix(0, 0) - (a + ik) / (ik - a)) < 1e-12);
            CHECK(r.retries == 0);
        }
    }
    const PlaneWaveResult neumann = planewave_scattering(lead_only(0.0), CVector::Zero(1), 3.0);
    CHECK(std::abs(neumann.matrix(0, 0) - 1.0) < 1e-15);
}

TEST_CASE("plane-wave scattering is unitary and matches the Weyl-matrix model") {
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> energy(0.1, 100.0);
    int compared = 0;
    for (int trial = 0; trial < 60; ++trial) {
        const MetricGraph g = random_graph(rng);
        if (g.lead_count() == 0) {
            continue;
        }
        const CVector a = random_couplings(rng, g.vertex_count()).cast<Complex>();
        const double s = energy(rng);
        try {
            const PlaneWaveResult raw = planewave_scattering(g, a, s);
            const auto n = raw.matrix.rows();
            CHECK(op_norm(raw.matrix.adjoint() * raw.matrix - CMatrix::Identity(n, n)) < 1e-12);
            const PlaneWaveResult rel = planewave_relative_scattering(g, a, s);
            const CMatrix model = sigma_external(g, a, SpectralPoint(rel.energy)).values;
            CHECK(op_norm(model - rel.matrix) < 1e-10);
            ++compared;
        } catch (const SpectralError&) {
        }
    }
    CHECK(compared > 40);
}

TEST_CASE("Kirchhoff plane-wave matrix is not the identity once leads are joined") {
    // The Weyl-matrix formula gives I at zero coupling; the bare plane-wave
    // matrix carries transmission through the edge.
    MetricGraph g({vertex("v1", 0, true), vertex("v2", 0, true)}, {edge("e1", "v1", "v2", 1.0)});
    const PlaneWaveResult r = planewave_scattering(g, CVector::Zero(2), 2.0);
    CHECK(std::abs(r.matrix(0, 1)) > 0.1);
    CHECK(op_norm(planewave_relative_scattering(g, CVector::Zero(2), 2.0).matrix - CMatrix::Identity(2, 2)) < 1e-12);
}

TEST_CASE("Neumann interval eigenvalues are the squares") {
    const std::vector<double> ev = compact_eigenvalues(neumann_interval(), Eigen::VectorXd::Zero(2), -0.5, 40.0);
    REQUIRE(ev.size() == 7);
    for (std::size_t m = 0; m < ev.size(); ++m) {
        CHECK_THAT(ev[m], WithinAbs(double(m * m), 1e-9));
    }
}

TEST_CASE("large couplings approach the Dirichlet spectrum") {
    const std::vector<double> ev = compact_eigenvalues(neumann_interval(), Eigen::VectorXd::Constant(2, 1e8), 0.5, 30.0);
    REQUIRE(ev.size() == 5);
    for (std::size_t i = 0; i < ev.size(); ++i) {
        const double m = double(i + 1);
        CHECK(std::fabs(ev[i] - m * m) < 1e-6);
        CHECK(ev[i] != m * m);
    }
}

TEST_CASE("Neumann interval eigenvalues are poles of the resolvent probe") {
    for (double z : compact_eigenvalues(neumann_interval(), Eigen::VectorXd::Zero(2), 0.5, 40.0)) {
        CHECK(resolvent_norm_probe(neumann_interval(), CVector::Zero(2), SpectralPoint(Complex(z, 1e-8))) > 1e6);
    }
}

namespace {

// Distance of k l / pi to the nearest integer, minimised over edges.
double edge_dirichlet_distance(const MetricGraph& g, double z) {
    double best = INFINITY;
    for (const auto& e : g.edges()) {
        const double r = std::sqrt(z) * e.length / kPi;
        best = std::min(best, std::fabs(r - std::round(r)));
    }
    return best;
}

} // namespace

TEST_CASE("reported eigenvalues are poles of the probe or edge-Dirichlet points") {
    std::mt19937_64 rng(42);
    int poles = 0;
    int hidden = 0;
    for (int trial = 0; trial < 15; ++trial) {
        const MetricGraph g = random_graph(rng);
        if (g.edge_count() == 0) {
            continue;
        }
        const Eigen::VectorXd a = random_couplings(rng, g.vertex_count());
        const CVector c = a.cast<Complex>();
        for (double z : compact_eigenvalues(g, a, 0.5, 60.0)) {
            const double near = resolvent_norm_probe(g, c, SpectralPoint(Complex(z, 1e-8)));
            const double nearer = resolvent_norm_probe(g, c, SpectralPoint(Complex(z, 1e-10)));
            if (nearer / near > 50.0) {
                // Simple pole: the probe grows like 1/Im z.
                CHECK(nearer / near < 150.0);
                ++poles;
            } else {
                // Eigenfunction vanishes at every vertex, so the vertex data cannot see it.
                CHECK(edge_dirichlet_distance(g, z) < 1e-9);
                ++hidden;
            }
        }
    }
    CHECK(poles > 20);
    CHECK(hidden > 0);
}

TEST_CASE("eigenvalues vanish on a graph without compact edges") {
    CHECK(compact_eigenvalues(lead_only(1.0), Eigen::VectorXd::Ones(1), 0.5, 50.0).empty());
}

TEST_CASE("synthetic datasets are reproducible") {
    const MetricGraph g = interval_with_lead(1.3, 0.5, -1.0);
    const CVector a = g.couplings();
    const std::vector<Complex> z{2.0, 5.0, Complex(-4.0, 0.0), Complex(3.0, 1.0)};

    const ScatteringDataset clean1 = synth_dataset(g, a, z);
    const ScatteringDataset clean2 = synth_dataset(g, a, z, 0.0, 99);
    REQUIRE(clean1.samples.size() == z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
        CHECK(clean1.samples[i].sigma == clean2.samples[i].sigma);
        CHECK(clean1.samples[i].z == z[i]);
    }

    const ScatteringDataset noisy1 = synth_dataset(g, a, z, 1e-6, 7);
    const ScatteringDataset noisy2 = synth_dataset(g, a, z, 1e-6, 7);
    const ScatteringDataset noisy3 = synth_dataset(g, a, z, 1e-6, 8);
    CHECK(noisy1.samples[0].sigma == noisy2.samples[0].sigma);
    CHECK(noisy1.samples[0].sigma != noisy3.samples[0].sigma);
    const double dev = max_abs(noisy1.samples[0].sigma - clean1.samples[0].sigma);
    CHECK(dev > 0.0);
    CHECK(dev < 1e-4);
}

TEST_CASE("synthetic datasets reject singular points only on request") {
    const MetricGraph g = interval_with_lead(kPi, 0.0, 0.0);
    const std::vector<Complex> z{2.0, 4.0, 6.0};
    CHECK_THROWS_AS(synth_dataset(g, g.couplings(), z), SpectralError);
    std::vector<Complex> rejected;
    const ScatteringDataset d = synth_dataset(g, g.couplings(), z, 0.0, 0, &rejected);
    CHECK(d.samples.size() == 2);
    REQUIRE(rejected.size() == 1);
    CHECK(rejected[0] == Complex(4.0, 0.0));
}
