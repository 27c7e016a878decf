#include "qgscat/oracle.hpp"

#include "qgscat/errors.hpp"
#include "qgscat/io.hpp"
#include "qgscat/weyl.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace qgscat {

namespace {

constexpr Complex kI{0.0, 1.0};

// Unknown layout: vertex values, then (c, d) per compact edge, then one
// outgoing amplitude per lead.
CMatrix planewave_once(const MetricGraph& g, const CVector& a, double s) {
    const Complex k = std::sqrt(Complex(s, 0.0));
    const auto nv = static_cast<Eigen::Index>(g.vertex_count());
    const auto ne = static_cast<Eigen::Index>(g.edge_count());
    const auto ext = g.external_indices();
    const auto nl = static_cast<Eigen::Index>(ext.size());
    const Eigen::Index size = nv + 2 * ne + nl;

    auto coef = [&](Eigen::Index e) { return nv + 2 * e; };
    std::vector<Eigen::Index> lead_of(g.vertex_count(), -1);
    for (Eigen::Index j = 0; j < nl; ++j) {
        lead_of[ext[static_cast<std::size_t>(j)]] = j;
    }

    CMatrix sys = CMatrix::Zero(size, size);
    CMatrix rhs = CMatrix::Zero(size, nl);
    Eigen::Index row = 0;

    // Continuity at both ends of every compact edge.
    for (Eigen::Index e = 0; e < ne; ++e) {
        const auto u = static_cast<Eigen::Index>(g.tail(static_cast<std::size_t>(e)));
        const auto v = static_cast<Eigen::Index>(g.head(static_cast<std::size_t>(e)));
        const double l = g.edges()[static_cast<std::size_t>(e)].length;
        const Complex ep = std::exp(kI * k * l);
        const Complex em = std::exp(-kI * k * l);
        sys(row, coef(e)) = 1.0;
        sys(row, coef(e) + 1) = 1.0;
        sys(row, u) = -1.0;
        ++row;
        sys(row, coef(e)) = ep;
        sys(row, coef(e) + 1) = em;
        sys(row, v) = -1.0;
        ++row;
    }
    // Continuity onto each lead: A + B = phi.
    for (Eigen::Index j = 0; j < nl; ++j) {
        const auto m = static_cast<Eigen::Index>(ext[static_cast<std::size_t>(j)]);
        sys(row, nv + 2 * ne + j) = 1.0;
        sys(row, m) = -1.0;
        rhs(row, j) = -1.0;
        ++row;
    }
    // δ-matching: sum of outward derivatives equals a_m phi_m.
    for (Eigen::Index m = 0; m < nv; ++m) {
        const Eigen::Index r = row + m;
        sys(r, m) -= a(m);
    }
    for (Eigen::Index e = 0; e < ne; ++e) {
        const auto u = static_cast<Eigen::Index>(g.tail(static_cast<std::size_t>(e)));
        const auto v = static_cast<Eigen::Index>(g.head(static_cast<std::size_t>(e)));
        const double l = g.edges()[static_cast<std::size_t>(e)].length;
        const Complex ep = std::exp(kI * k * l);
        const Complex em = std::exp(-kI * k * l);
        // left end: u'(0) = ik (c - d)
        sys(row + u, coef(e)) += kI * k;
        sys(row + u, coef(e) + 1) -= kI * k;
        // right end: -u'(l) = -ik (c e^{ikl} - d e^{-ikl})
        sys(row + v, coef(e)) -= kI * k * ep;
        sys(row + v, coef(e) + 1) += kI * k * em;
    }
    for (Eigen::Index j = 0; j < nl; ++j) {
        const auto m = static_cast<Eigen::Index>(ext[static_cast<std::size_t>(j)]);
        // lead: -A'(0)... derivative of A e^{-ikx} + B e^{ikx} at 0 is ik(B - A)
        sys(row + m, nv + 2 * ne + j) += kI * k;
        rhs(row + m, j) += kI * k;
    }

    CMatrix sol;
    try {
        sol = CheckedLU(sys, "plane-wave matching system").solve(rhs);
    } catch (const SingularMatrix& e) {
        throw SingularSystem(e.what());
    }
    return sol.bottomRows(nl);
}

} // namespace

PlaneWaveResult planewave_scattering(const MetricGraph& g, const CVector& couplings, double s) {
    require_admissible(g);
    if (!(s > 0.0)) {
        throw InvalidArgument("plane-wave scattering requires s > 0");
    }
    if (static_cast<std::size_t>(couplings.size()) != g.vertex_count()) {
        throw InvalidArgument("coupling vector size does not match vertex count");
    }
    if (g.external_indices().empty()) {
        throw NoLeads("graph has no external vertices");
    }
    PlaneWaveResult out;
    double energy = s;
    for (int attempt = 0;; ++attempt) {
        try {
            out.matrix = planewave_once(g, couplings, energy);
            out.energy = energy;
            out.retries = attempt;
            return out;
        } catch (const SingularSystem&) {
            if (attempt == 3) {
                throw;
            }
            energy *= 1.0 + 1e-7;
        }
    }
}

PlaneWaveResult planewave_relative_scattering(const MetricGraph& g, const CVector& couplings, double s) {
    PlaneWaveResult coupled = planewave_scattering(g, couplings, s);
    const CVector zero = CVector::Zero(couplings.size());
    PlaneWaveResult kirchhoff = planewave_scattering(g, zero, coupled.energy);
    coupled.matrix = coupled.matrix * kirchhoff.matrix.adjoint();
    coupled.retries += kirchhoff.retries;
    coupled.energy = kirchhoff.energy;
    return coupled;
}

namespace {

// Basis per edge: c cos(kx) + d sin(kx)/k, real for real z.
Eigen::MatrixXd secular_matrix(const MetricGraph& g, const Eigen::VectorXd& a, double z) {
    const auto nv = static_cast<Eigen::Index>(g.vertex_count());
    const auto ne = static_cast<Eigen::Index>(g.edge_count());
    const Eigen::Index size = nv + 2 * ne;
    Eigen::MatrixXd sys = Eigen::MatrixXd::Zero(size, size);

    auto basis = [z](double x) {
        if (z > 0.0) {
            const double k = std::sqrt(z);
            return std::pair{std::cos(k * x), std::sin(k * x) / k};
        }
        if (z < 0.0) {
            const double t = std::sqrt(-z);
            return std::pair{std::cosh(t * x), std::sinh(t * x) / t};
        }
        return std::pair{1.0, x};
    };

    Eigen::Index row = 0;
    for (Eigen::Index e = 0; e < ne; ++e) {
        const auto u = static_cast<Eigen::Index>(g.tail(static_cast<std::size_t>(e)));
        const auto v = static_cast<Eigen::Index>(g.head(static_cast<std::size_t>(e)));
        const auto [cl, sl] = basis(g.edges()[static_cast<std::size_t>(e)].length);
        const Eigen::Index c = nv + 2 * e;
        sys(row, c) = 1.0;
        sys(row, u) -= 1.0;
        ++row;
        sys(row, c) = cl;
        sys(row, c + 1) = sl;
        sys(row, v) -= 1.0;
        ++row;
    }
    for (Eigen::Index m = 0; m < nv; ++m) {
        sys(row + m, m) -= a(m);
    }
    for (Eigen::Index e = 0; e < ne; ++e) {
        const auto u = static_cast<Eigen::Index>(g.tail(static_cast<std::size_t>(e)));
        const auto v = static_cast<Eigen::Index>(g.head(static_cast<std::size_t>(e)));
        const auto [cl, sl] = basis(g.edges()[static_cast<std::size_t>(e)].length);
        const Eigen::Index c = nv + 2 * e;
        sys(row + u, c + 1) += 1.0;      // u'(0) = d
        sys(row + v, c) += z * sl;       // -u'(l) = z c Sn(l) - d C(l)
        sys(row + v, c + 1) -= cl;
    }
    for (Eigen::Index r = 0; r < size; ++r) {
        const double scale = sys.row(r).cwiseAbs().maxCoeff();
        if (scale > 0.0) {
            sys.row(r) /= scale;
        }
    }
    return sys;
}

void check_real_couplings(const MetricGraph& g, const Eigen::VectorXd& a) {
    require_admissible(g);
    if (static_cast<std::size_t>(a.size()) != g.vertex_count()) {
        throw InvalidArgument("coupling vector size does not match vertex count");
    }
}

} // namespace

double secular_function(const MetricGraph& g, const Eigen::VectorXd& couplings, double z) {
    check_real_couplings(g, couplings);
    const auto m = secular_matrix(g, couplings, z);
    if (m.size() == 0) {
        return 1.0;
    }
    return m.partialPivLu().determinant();
}

double secular_min_singular(const MetricGraph& g, const Eigen::VectorXd& couplings, double z) {
    check_real_couplings(g, couplings);
    const auto m = secular_matrix(g, couplings, z);
    if (m.size() == 0) {
        return 1.0;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    return svd.singularValues()(svd.singularValues().size() - 1);
}

std::vector<double> compact_eigenvalues(const MetricGraph& g, const Eigen::VectorXd& couplings, double lo,
                                        double hi, const EigenvalueSearch& opts) {
    check_real_couplings(g, couplings);
    if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
        throw InvalidArgument("eigenvalue interval must be bounded with lo < hi");
    }
    if (g.vertex_count() == 0 || opts.grid_points < 3) {
        return {};
    }
    const auto det = [&](double z) { return secular_function(g, couplings, z); };
    const auto smin = [&](double z) { return secular_min_singular(g, couplings, z); };

    const std::size_t n = opts.grid_points;
    std::vector<double> zs(n), ds(n), ss(n);
    for (std::size_t i = 0; i < n; ++i) {
        zs[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
        ds[i] = det(zs[i]);
        ss[i] = smin(zs[i]);
    }

    std::vector<double> roots;
    auto close_to_known = [&](double z) {
        return std::any_of(roots.begin(), roots.end(), [&](double r) {
            return std::fabs(r - z) <= 1e-7 * std::max(1.0, std::fabs(z));
        });
    };

    for (std::size_t i = 0; i < n; ++i) {
        if (ds[i] == 0.0) {
            roots.push_back(zs[i]);
            continue;
        }
        if (i + 1 < n && ds[i + 1] != 0.0 && std::signbit(ds[i]) != std::signbit(ds[i + 1])) {
            double a = zs[i], b = zs[i + 1];
            double fa = ds[i];
            while (b - a > opts.tolerance * std::max(1.0, std::fabs(a))) {
                const double mid = 0.5 * (a + b);
                if (mid <= a || mid >= b) {
                    break;
                }
                const double fm = det(mid);
                if (fm == 0.0) {
                    a = b = mid;
                    break;
                }
                if (std::signbit(fm) == std::signbit(fa)) {
                    a = mid;
                    fa = fm;
                } else {
                    b = mid;
                }
            }
            roots.push_back(0.5 * (a + b));
        }
    }

    // Zeros of even multiplicity do not change sign; look for sigma_min dips.
    const double golden = 0.5 * (std::sqrt(5.0) - 1.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (!(ss[i] <= ss[i - 1] && ss[i] <= ss[i + 1])) {
            continue;
        }
        double a = zs[i - 1], b = zs[i + 1];
        double x1 = b - golden * (b - a), x2 = a + golden * (b - a);
        double f1 = smin(x1), f2 = smin(x2);
        for (int it = 0; it < 200 && b - a > opts.tolerance * std::max(1.0, std::fabs(a)); ++it) {
            if (f1 < f2) {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - golden * (b - a);
                f1 = smin(x1);
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + golden * (b - a);
                f2 = smin(x2);
            }
        }
        const double zmin = 0.5 * (a + b);
        if (smin(zmin) < opts.degenerate_floor && !close_to_known(zmin)) {
            roots.push_back(zmin);
        }
    }

    std::sort(roots.begin(), roots.end());
    roots.erase(std::unique(roots.begin(), roots.end(),
                            [](double x, double y) { return std::fabs(x - y) <= 1e-7 * std::max(1.0, std::fabs(x)); }),
                roots.end());
    return roots;
}

ScatteringDataset synth_dataset(const MetricGraph& g, const CVector& couplings, std::span<const Complex> z_samples,
                                double noise_level, std::uint64_t seed, std::vector<Complex>* rejected) {
    require_admissible(g);
    if (noise_level < 0.0) {
        throw InvalidArgument("noise level must be non-negative");
    }
    ScatteringDataset data;
    data.graph_hash = geometry_hash(g);
    data.seed = seed;
    data.noise = noise_level;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (const Complex z : z_samples) {
        CMatrix sigma;
        try {
            sigma = sigma_external(g, couplings, SpectralPoint(z)).values;
        } catch (const SpectralError&) {
            if (rejected == nullptr) {
                throw;
            }
            rejected->push_back(z);
            continue;
        }
        if (noise_level > 0.0) {
            const double scale = noise_level * sigma.cwiseAbs().maxCoeff() / std::sqrt(2.0);
            for (Eigen::Index c = 0; c < sigma.cols(); ++c) {
                for (Eigen::Index r = 0; r < sigma.rows(); ++r) {
                    const double re = normal(rng);
                    const double im = normal(rng);
                    sigma(r, c) += scale * Complex(re, im);
                }
            }
        }
        data.samples.push_back({z, std::move(sigma)});
    }
    return data;
}

} // namespace qgscat
