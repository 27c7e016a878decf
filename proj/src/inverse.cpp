#include "qgscat/inverse.hpp"

#include "qgscat/errors.hpp"
#include "qgscat/io.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace qgscat {

namespace {

constexpr Complex kI{0.0, 1.0};
constexpr double kEps = std::numeric_limits<double>::epsilon();

std::size_t external_position(const MetricGraph& g, std::size_t vertex) {
    const auto ext = g.external_indices();
    auto it = std::find(ext.begin(), ext.end(), vertex);
    if (it == ext.end()) {
        throw InvalidArgument("vertex '" + g.vertices()[vertex].id + "' has no lead");
    }
    return static_cast<std::size_t>(it - ext.begin());
}

} // namespace

RtDSample recover_rtd(const CMatrix& sigma_e, const MetricGraph& geometry, const SpectralPoint& z) {
    const auto n = static_cast<Eigen::Index>(geometry.external_indices().size());
    if (sigma_e.rows() != n || sigma_e.cols() != n) {
        throw InvalidArgument("scattering sample has the wrong size for the geometry");
    }
    CMatrix geom;
    try {
        geom = geometry_factor(geometry, z);
        const CMatrix id = CMatrix::Identity(n, n);
        CheckedLU geom_lu(geom, "P_e (M^*)^{-1} M P_e");
        // sigma * geom^{-1} via the transposed solve.
        const CMatrix coupling_part = geom_lu.solve(sigma_e.transpose()).transpose();
        CheckedLU outer(id + coupling_part, "P_e + sigma_e [P_e (M^*)^{-1} M P_e]^{-1}");
        CMatrix block = (2.0 * outer.inverse() - id) / (kI * z.k());
        return RtDSample{z, std::move(block)};
    } catch (const SingularMatrix& e) {
        throw SingularFactor(e.what());
    }
}

RootExtraction extract_root_coupling(const RtDAtTau& rtd_at_tau, const MetricGraph& geometry,
                                     std::string_view root, std::span<const double> tau_grid, double min_reach) {
    require_admissible(geometry);
    if (tau_grid.empty()) {
        throw InvalidArgument("empty tau grid");
    }
    for (std::size_t i = 0; i < tau_grid.size(); ++i) {
        if (!(tau_grid[i] > 0.0) || (i > 0 && !(tau_grid[i] > tau_grid[i - 1]))) {
            throw InvalidArgument("tau grid must be positive and strictly increasing");
        }
    }
    const double lmin = geometry.min_length();
    if (std::isfinite(lmin) && tau_grid.back() * lmin < min_reach) {
        throw InvalidArgument("tau grid does not reach tau * l_min >= " + std::to_string(min_reach));
    }
    const std::size_t r = geometry.require_vertex(root);
    const std::size_t pos = external_position(geometry, r);
    const int deg = degree_table(geometry).degree[r];

    RootExtraction out;
    std::vector<double> floors;
    for (double tau : tau_grid) {
        const RtDSample sample = rtd_at_tau(tau);
        const auto p = static_cast<Eigen::Index>(pos);
        const Complex f = sample.block(p, p);
        const double value = (-tau * deg - 1.0 / f).real();
        out.taus.push_back(tau);
        out.estimates.push_back(value);
        floors.push_back(256.0 * kEps * std::max({1.0, tau * deg, std::abs(1.0 / f)}));
    }

    const auto& a = out.estimates;
    const std::size_t n = a.size();
    for (std::size_t i = 2; i < n; ++i) {
        const double prev = std::fabs(a[i - 1] - a[i - 2]);
        const double cur = std::fabs(a[i] - a[i - 1]);
        if (cur > prev + floors[i] + floors[i - 1]) {
            throw NonConvergence("root coupling estimates stop contracting at tau=" + std::to_string(out.taus[i]));
        }
    }
    out.coupling = a.back();
    if (n >= 3) {
        const double d1 = a[n - 2] - a[n - 3];
        const double d2 = a[n - 1] - a[n - 2];
        if (std::fabs(d2) > floors[n - 1] + floors[n - 2] && std::fabs(d2 - d1) > 0.0) {
            const double shift = d2 * d2 / (d2 - d1);
            // Only trust the geometric-tail correction when it is smaller than the last step.
            if (std::fabs(shift) <= std::fabs(d2)) {
                out.coupling = a[n - 1] - shift;
                out.accelerated = true;
            }
        }
    }
    return out;
}

namespace {

// Neville extrapolation of (x_i, y_i) to x = 0.
Complex extrapolate_to_zero(const std::vector<double>& x, const std::vector<Complex>& y) {
    std::vector<Complex> p = y;
    const std::size_t n = x.size();
    for (std::size_t m = 1; m < n; ++m) {
        for (std::size_t i = 0; i + m < n; ++i) {
            p[i] = (x[i + m] * p[i] - x[i] * p[i + 1]) / (x[i + m] - x[i]);
        }
    }
    return p[0];
}

Complex root_entry(const MetricGraph& g, const CVector& a, std::size_t root, const SpectralPoint& z) {
    const std::size_t idx[] = {root};
    return rtd_map(g, a, idx, z)(0, 0);
}

} // namespace

ContractionProbe contraction_limit_probe(const MetricGraph& g, const CVector& couplings, std::string_view root,
                                         std::string_view edge, std::span<const double> eps_sequence,
                                         const SpectralPoint& z) {
    require_admissible(g);
    const MetricGraph base = g.compact_part().with_couplings(couplings);
    const std::size_t r = base.require_vertex(root);
    const Edge& target = base.edges()[base.require_edge(edge)];
    if (target.is_loop()) {
        throw ContractLoop("edge '" + target.id + "' is a loop");
    }
    if (target.u != root && target.v != root) {
        throw InvalidArgument("edge '" + target.id + "' is not incident to '" + std::string(root) + "'");
    }

    ContractionProbe out;
    for (double eps : eps_sequence) {
        if (!(eps > 0.0)) {
            throw InvalidArgument("contraction lengths must be positive");
        }
        try {
            const MetricGraph shrunk = base.with_edge_length(edge, eps);
            out.values.push_back(root_entry(shrunk, couplings, r, z));
            out.eps.push_back(eps);
        } catch (const SpectralError&) {
            // this length sits on a singular set; skip it
        }
    }
    if (out.eps.size() < 2) {
        throw NonConvergence("fewer than two admissible contraction lengths");
    }

    const MetricGraph contracted = contract_edge(base, edge);
    const std::size_t merged = contracted.require_vertex(merged_vertex_id(target.u, target.v));
    out.contracted = root_entry(contracted, contracted.couplings(), merged, z);

    // Extrapolate from the (up to) six smallest lengths.
    std::vector<std::size_t> order(out.eps.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    std::sort(order.begin(), order.end(), [&](auto i, auto j) { return out.eps[i] < out.eps[j]; });
    const std::size_t use = std::min<std::size_t>(6, order.size());
    std::vector<double> xs;
    std::vector<Complex> ys;
    for (std::size_t i = 0; i < use; ++i) {
        xs.push_back(out.eps[order[i]]);
        ys.push_back(out.values[order[i]]);
    }
    out.limit = extrapolate_to_zero(xs, ys);
    out.relative_error = std::abs(out.limit - out.contracted) / std::max(std::abs(out.contracted), 1e-300);

    // Least-squares slope of log error against log eps.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int count = 0;
    for (std::size_t i = 0; i < out.eps.size(); ++i) {
        const double err = std::abs(out.values[i] - out.contracted);
        if (!(err > 0.0)) {
            continue;
        }
        const double lx = std::log(out.eps[i]);
        const double ly = std::log(err);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++count;
    }
    if (count >= 2) {
        const double denom = count * sxx - sx * sx;
        out.observed_order = denom != 0.0 ? (count * sxy - sx * sy) / denom : 0.0;
    } else {
        out.observed_order = std::numeric_limits<double>::infinity();
    }
    return out;
}

double path_sum_formula(const MetricGraph& g, const CVector& couplings, const PathSet& paths, std::size_t l,
                        double tau) {
    require_admissible(g);
    if (l >= paths.paths.size()) {
        throw InvalidArgument("path index out of range");
    }
    const TreePath& path = paths.paths[l];
    const auto deg = degree_table(g);
    int deg_sum = 0;
    for (const auto& id : path.vertices) {
        deg_sum += deg.degree[g.require_vertex(id)];
    }

    MetricGraph current = g.compact_part().with_couplings(couplings);
    std::string root = paths.root;
    for (const auto& edge_id : path.edges) {
        const Edge& e = current.edges()[current.require_edge(edge_id)];
        if (e.u != root && e.v != root) {
            throw InvalidArgument("path edge '" + edge_id + "' does not leave the contracted root");
        }
        root = merged_vertex_id(e.u, e.v);
        current = contract_edge(current, edge_id);
    }
    const std::size_t r = current.require_vertex(root);
    const Complex f = root_entry(current, current.couplings(), r, SpectralPoint::from_tau(tau));
    const auto n_path = static_cast<double>(path.vertex_count());
    return (-tau * (deg_sum - 2.0 * (n_path - 1.0)) - 1.0 / f).real();
}

std::vector<CMatrix> lm_jacobian(const MetricGraph& g, const Eigen::VectorXd& a, const SpectralPoint& z,
                                 std::span<const std::size_t> subset) {
    if (static_cast<std::size_t>(a.size()) != g.vertex_count()) {
        throw InvalidArgument("coupling vector size does not match vertex count");
    }
    CMatrix shifted = m_compact(g, z).values;
    shifted.diagonal() -= a.cast<Complex>();
    const CMatrix resolvent = checked_inverse(shifted, "M_compact - kappa");
    const auto n = static_cast<Eigen::Index>(subset.size());
    std::vector<CMatrix> out;
    out.reserve(g.vertex_count());
    for (Eigen::Index k = 0; k < a.size(); ++k) {
        CMatrix d(n, n);
        for (Eigen::Index r = 0; r < n; ++r) {
            for (Eigen::Index c = 0; c < n; ++c) {
                d(r, c) = resolvent(static_cast<Eigen::Index>(subset[r]), k) *
                          resolvent(k, static_cast<Eigen::Index>(subset[c]));
            }
        }
        out.push_back(std::move(d));
    }
    return out;
}

std::string_view to_string(RecoveryMethod m) {
    return m == RecoveryMethod::Asymptotic ? "asymptotic" : "least-squares";
}

std::vector<Complex> recovery_sample_plan(const MetricGraph& geometry) {
    const double lmin = std::isfinite(geometry.min_length()) ? geometry.min_length() : 1.0;
    std::vector<Complex> zs;
    for (int i = 1; i <= 8; ++i) {
        const double tau = 6.0 / lmin * i / 8.0;
        zs.emplace_back(-tau * tau, 0.0);
    }
    for (int i = 1; i <= 12; ++i) {
        zs.emplace_back(0.37 + 6.1 * i, 0.0);
    }
    for (int i = 1; i <= 20; ++i) {
        zs.emplace_back(-5.0 + 3.0 * i, 3.0);
    }
    return zs;
}

std::size_t required_samples(std::size_t vertex_count) {
    return std::max<std::size_t>(2 * vertex_count, 8);
}

namespace {

struct Problem {
    const MetricGraph* geometry = nullptr;
    std::vector<std::size_t> ext;
    std::vector<RtDSample> data;

    Eigen::Index residual_size() const {
        const auto n = static_cast<Eigen::Index>(ext.size());
        return 2 * n * n * static_cast<Eigen::Index>(data.size());
    }

    // Returns false when the model is singular at some sample.
    bool residual(const Eigen::VectorXd& a, Eigen::VectorXd& r) const {
        const auto n = static_cast<Eigen::Index>(ext.size());
        r.resize(residual_size());
        const CVector ac = a.cast<Complex>();
        Eigen::Index at = 0;
        try {
            for (const auto& s : data) {
                const CMatrix model = rtd_map(*geometry, ac, ext, s.at);
                for (Eigen::Index c = 0; c < n; ++c) {
                    for (Eigen::Index q = 0; q < n; ++q) {
                        const Complex d = model(q, c) - s.block(q, c);
                        r(at++) = d.real();
                        r(at++) = d.imag();
                    }
                }
            }
        } catch (const SpectralError&) {
            return false;
        }
        return r.allFinite();
    }

    Eigen::MatrixXd jacobian(const Eigen::VectorXd& a) const {
        const auto n = static_cast<Eigen::Index>(ext.size());
        Eigen::MatrixXd j(residual_size(), a.size());
        Eigen::Index row = 0;
        for (const auto& s : data) {
            const auto parts = lm_jacobian(*geometry, a, s.at, ext);
            for (Eigen::Index c = 0; c < n; ++c) {
                for (Eigen::Index q = 0; q < n; ++q) {
                    for (Eigen::Index k = 0; k < a.size(); ++k) {
                        j(row, k) = parts[static_cast<std::size_t>(k)](q, c).real();
                        j(row + 1, k) = parts[static_cast<std::size_t>(k)](q, c).imag();
                    }
                    row += 2;
                }
            }
        }
        return j;
    }
};

// Same fit on inverted blocks: the data side is (RtD)^{-1} and the model is the
// Schur complement M_ee - kappa_e - M_ei (M_ii - kappa_i)^{-1} M_ie. It is
// affine in the external couplings and, off the real axis, has no poles in the
// internal ones, which makes it a safe globalization stage.
struct InverseProblem {
    const MetricGraph* geometry = nullptr;
    std::vector<std::size_t> ext;
    std::vector<std::size_t> inner;
    std::vector<SpectralPoint> at;
    std::vector<CMatrix> target;
    std::vector<CMatrix> weyl;

    InverseProblem(const MetricGraph& g, const std::vector<std::size_t>& external, const std::vector<RtDSample>& data)
        : geometry(&g), ext(external), inner(g.internal_indices()) {
        for (const auto& s : data) {
            try {
                CheckedLU lu(s.block, "RtD block");
                target.push_back(lu.inverse());
                weyl.push_back(m_compact(g, s.at).values);
                at.push_back(s.at);
            } catch (const SpectralError&) {
                // not invertible at this point; the direct stage still uses it
            }
        }
    }

    Eigen::Index residual_size() const {
        const auto n = static_cast<Eigen::Index>(ext.size());
        return 2 * n * n * static_cast<Eigen::Index>(target.size());
    }

    // Schur complement and, for each internal vertex, the column M_ei R e_k.
    bool model(std::size_t s, const Eigen::VectorXd& a, CMatrix& schur, CMatrix* cols) const {
        const CMatrix& m = weyl[s];
        const auto n = static_cast<Eigen::Index>(ext.size());
        const auto ni = static_cast<Eigen::Index>(inner.size());
        schur.resize(n, n);
        CMatrix mei(n, ni);
        for (Eigen::Index r = 0; r < n; ++r) {
            const auto er = static_cast<Eigen::Index>(ext[static_cast<std::size_t>(r)]);
            for (Eigen::Index c = 0; c < n; ++c) {
                schur(r, c) = m(er, static_cast<Eigen::Index>(ext[static_cast<std::size_t>(c)]));
            }
            schur(r, r) -= a(er);
            for (Eigen::Index c = 0; c < ni; ++c) {
                mei(r, c) = m(er, static_cast<Eigen::Index>(inner[static_cast<std::size_t>(c)]));
            }
        }
        if (ni == 0) {
            return true;
        }
        CMatrix mii(ni, ni);
        for (Eigen::Index r = 0; r < ni; ++r) {
            const auto ir = static_cast<Eigen::Index>(inner[static_cast<std::size_t>(r)]);
            for (Eigen::Index c = 0; c < ni; ++c) {
                mii(r, c) = m(ir, static_cast<Eigen::Index>(inner[static_cast<std::size_t>(c)]));
            }
            mii(r, r) -= a(ir);
        }
        try {
            CheckedLU lu(mii, "M_ii - kappa_i");
            // M_ei R; M is complex symmetric so R M_ie is its transpose.
            const CMatrix left = lu.solve(mei.transpose()).transpose();
            schur -= left * mei.transpose();
            if (cols != nullptr) {
                *cols = left;
            }
        } catch (const SpectralError&) {
            return false;
        }
        return true;
    }

    bool residual(const Eigen::VectorXd& a, Eigen::VectorXd& r) const {
        const auto n = static_cast<Eigen::Index>(ext.size());
        r.resize(residual_size());
        Eigen::Index pos = 0;
        CMatrix schur;
        for (std::size_t s = 0; s < target.size(); ++s) {
            if (!model(s, a, schur, nullptr)) {
                return false;
            }
            for (Eigen::Index c = 0; c < n; ++c) {
                for (Eigen::Index q = 0; q < n; ++q) {
                    const Complex d = schur(q, c) - target[s](q, c);
                    r(pos++) = d.real();
                    r(pos++) = d.imag();
                }
            }
        }
        return r.allFinite();
    }

    Eigen::MatrixXd jacobian(const Eigen::VectorXd& a) const {
        const auto n = static_cast<Eigen::Index>(ext.size());
        Eigen::MatrixXd j = Eigen::MatrixXd::Zero(residual_size(), a.size());
        Eigen::Index row = 0;
        CMatrix schur;
        CMatrix cols;
        for (std::size_t s = 0; s < target.size(); ++s) {
            model(s, a, schur, &cols);
            for (Eigen::Index c = 0; c < n; ++c) {
                for (Eigen::Index q = 0; q < n; ++q) {
                    if (q == c) {
                        j(row, static_cast<Eigen::Index>(ext[static_cast<std::size_t>(q)])) = -1.0;
                    }
                    for (std::size_t k = 0; k < inner.size(); ++k) {
                        const auto kk = static_cast<Eigen::Index>(k);
                        const Complex d = -cols(q, kk) * cols(c, kk);
                        j(row, static_cast<Eigen::Index>(inner[k])) = d.real();
                        j(row + 1, static_cast<Eigen::Index>(inner[k])) = d.imag();
                    }
                    row += 2;
                }
            }
        }
        return j;
    }
};

double fit_cost(const InverseProblem& prob, const Eigen::VectorXd& a) {
    Eigen::VectorXd r;
    return prob.residual(a, r) ? r.squaredNorm() : std::numeric_limits<double>::infinity();
}

// Cyclic coordinate search: each coupling in turn is moved to the global
// minimum of the cost along its axis (grid over the prior box, then golden
// section on the best bracket). Pulls far-away starts into the right basin.
Eigen::VectorXd coordinate_sweeps(const InverseProblem& prob, Eigen::VectorXd a, double box, int sweeps = 6,
                                  int grid = 801) {
    double cost = fit_cost(prob, a);
    const double h = 2.0 * box / (grid - 1);
    for (int sweep = 0; sweep < sweeps; ++sweep) {
        const double before = cost;
        for (Eigen::Index k = 0; k < a.size(); ++k) {
            Eigen::VectorXd t = a;
            auto along = [&](double x) {
                t(k) = x;
                return fit_cost(prob, t);
            };
            int best = -1;
            double best_cost = cost;
            for (int i = 0; i < grid; ++i) {
                const double c = along(-box + i * h);
                if (c < best_cost) {
                    best_cost = c;
                    best = i;
                }
            }
            if (best < 0) {
                continue;
            }
            double lo = -box + std::max(best - 1, 0) * h;
            double hi = -box + std::min(best + 1, grid - 1) * h;
            constexpr double g = 0.6180339887498949;
            double x1 = hi - g * (hi - lo);
            double x2 = lo + g * (hi - lo);
            double f1 = along(x1);
            double f2 = along(x2);
            for (int it = 0; it < 60 && hi - lo > 1e-10; ++it) {
                if (f1 < f2) {
                    hi = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = hi - g * (hi - lo);
                    f1 = along(x1);
                } else {
                    lo = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = lo + g * (hi - lo);
                    f2 = along(x2);
                }
            }
            const double xg = -box + best * h;
            const double xr = f1 < f2 ? x1 : x2;
            const double fr = std::min(f1, f2);
            a(k) = fr < best_cost ? xr : xg;
            cost = std::min(fr, best_cost);
        }
        if (!(cost < before * (1.0 - 1e-6))) {
            break;
        }
    }
    return a;
}

// Residual indistinguishable from rounding in the model evaluation.
bool at_roundoff(const Eigen::VectorXd& r) { return r.norm() <= 1e-10 * std::sqrt(static_cast<double>(r.size())); }

// Stationary to working precision: the undamped Gauss-Newton step is below sqrt(eps) of x.
bool gauss_newton_negligible(const Eigen::MatrixXd& jtj, const Eigen::VectorXd& grad, const Eigen::VectorXd& x) {
    const Eigen::VectorXd step = jtj.completeOrthogonalDecomposition().solve(-grad);
    return step.allFinite() && step.norm() <= 1.5e-8 * (x.norm() + 1.0);
}

template <class Fit>
StartResult levenberg_marquardt(const Fit& prob, Eigen::VectorXd x, const RecoveryOptions& opts) {
    StartResult out;
    out.start = x;
    x = x.cwiseMax(-opts.box).cwiseMin(opts.box);

    Eigen::VectorXd r;
    if (!prob.residual(x, r)) {
        // Nudge off a singular starting point.
        x.array() += 1e-3;
        if (!prob.residual(x, r)) {
            out.result = x;
            out.residual = std::numeric_limits<double>::infinity();
            out.stop_reason = "model singular at start";
            return out;
        }
    }
    double cost = 0.5 * r.squaredNorm();
    double lambda = opts.damping_init;

    int iter = 0;
    for (; iter < opts.max_iterations; ++iter) {
        const Eigen::MatrixXd j = prob.jacobian(x);
        const Eigen::VectorXd grad = j.transpose() * r;
        // Largest cosine between the residual and a Jacobian column.
        const double rn = r.norm();
        double cosine = 0.0;
        for (Eigen::Index k = 0; k < j.cols(); ++k) {
            const double cn = j.col(k).norm();
            if (cn > 0.0 && rn > 0.0) {
                cosine = std::max(cosine, std::fabs(grad(k)) / (cn * rn));
            }
        }
        if (rn == 0.0 || cosine <= opts.gtol) {
            out.converged = true;
            out.stop_reason = "gradient";
            break;
        }
        const Eigen::MatrixXd jtj = j.transpose() * j;
        Eigen::VectorXd scale = jtj.diagonal().cwiseMax(1e-12 * std::max(1.0, jtj.diagonal().maxCoeff()));

        bool accepted = false;
        bool small_step = false;
        while (lambda < 1e20) {
            Eigen::MatrixXd lhs = jtj;
            lhs.diagonal() += lambda * scale;
            const Eigen::VectorXd step = lhs.ldlt().solve(-grad);
            Eigen::VectorXd trial = (x + step).cwiseMax(-opts.box).cwiseMin(opts.box);
            const Eigen::VectorXd taken = trial - x;
            if (taken.norm() < opts.xtol * (x.norm() + opts.xtol)) {
                small_step = true;
                break;
            }
            Eigen::VectorXd rt;
            if (prob.residual(trial, rt)) {
                const double trial_cost = 0.5 * rt.squaredNorm();
                if (trial_cost < cost) {
                    const double reduction = (cost - trial_cost) / std::max(cost, 1e-300);
                    x = trial;
                    r = rt;
                    cost = trial_cost;
                    lambda = std::max(lambda / 10.0, 1e-15);
                    accepted = true;
                    if (reduction < opts.ftol) {
                        out.converged = true;
                        out.stop_reason = "ftol";
                    }
                    break;
                }
            }
            lambda *= 10.0;
        }
        if (small_step) {
            // A vanishing step is only a convergence signal when it comes from
            // lightly damped Gauss-Newton; under heavy damping it means stagnation.
            out.converged = lambda <= opts.damping_init || at_roundoff(r) || gauss_newton_negligible(jtj, grad, x);
            out.stop_reason = out.converged ? "step" : "stalled";
            break;
        }
        if (!accepted) {
            // Damping exhausted: no descent direction resolvable in double precision.
            out.converged = at_roundoff(r) || gauss_newton_negligible(jtj, grad, x);
            out.stop_reason = "damping";
            break;
        }
        if (out.converged) {
            ++iter;
            break;
        }
    }
    if (iter >= opts.max_iterations && out.stop_reason.empty()) {
        out.stop_reason = "max_iterations";
    }
    out.iterations = iter;
    out.result = x;
    out.residual = r.norm();
    return out;
}

} // namespace

RecoveryReport recover_couplings(const ScatteringDataset& data, const MetricGraph& geometry,
                                 const RecoveryOptions& opts) {
    require_admissible(geometry);
    if (!data.graph_hash.empty() && data.graph_hash != geometry_hash(geometry)) {
        throw InvalidArgument("dataset was generated for a different graph (hash mismatch)");
    }
    const auto ext = geometry.external_indices();
    if (ext.empty()) {
        throw NoLeads("geometry has no external vertices");
    }
    if (!compact_connected(geometry)) {
        throw Disconnected("compact part of the geometry is not connected");
    }
    const std::size_t nv = geometry.vertex_count();
    if (data.samples.size() < required_samples(nv)) {
        throw InsufficientData("dataset has " + std::to_string(data.samples.size()) + " samples; at least " +
                               std::to_string(required_samples(nv)) + " required");
    }

    RecoveryReport report;
    for (const auto& v : geometry.vertices()) {
        report.vertex_ids.push_back(v.id);
    }
    for (auto i : ext) {
        report.external_ids.push_back(geometry.vertices()[i].id);
    }

    Problem prob;
    prob.geometry = &geometry;
    prob.ext = ext;
    std::map<double, std::size_t> by_tau;
    for (const auto& s : data.samples) {
        const SpectralPoint z = (s.z.imag() == 0.0 && s.z.real() < 0.0) ? SpectralPoint::from_tau(std::sqrt(-s.z.real()))
                                                                          : SpectralPoint(s.z);
        try {
            prob.data.push_back(recover_rtd(s.sigma, geometry, z));
            if (s.z.imag() == 0.0 && s.z.real() < 0.0) {
                by_tau[z.k().imag()] = prob.data.size() - 1;
            }
        } catch (const SpectralError&) {
            ++report.samples_skipped;
        }
    }
    report.samples_used = prob.data.size();
    if (prob.data.size() < required_samples(nv)) {
        throw InsufficientData("only " + std::to_string(prob.data.size()) + " samples admissible");
    }
    if (by_tau.empty()) {
        throw InsufficientData("dataset has no z = -tau^2 samples for the asymptotic stage");
    }

    // Asymptotic initialization of the external couplings.
    std::vector<double> taus;
    for (const auto& [tau, idx] : by_tau) {
        taus.push_back(tau);
    }
    for (double tau : taus) {
        report.tau_sweep.push_back({tau, std::vector<double>(ext.size(), 0.0)});
    }
    report.initial = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(nv));
    report.method.assign(nv, RecoveryMethod::LeastSquares);
    const auto rtd_at = [&](double tau) { return prob.data[by_tau.at(tau)]; };
    const auto deg = degree_table(geometry);
    for (std::size_t j = 0; j < ext.size(); ++j) {
        const std::string& id = geometry.vertices()[ext[j]].id;
        const auto p = static_cast<Eigen::Index>(j);
        for (std::size_t t = 0; t < taus.size(); ++t) {
            const Complex f = rtd_at(taus[t]).block(p, p);
            report.tau_sweep[t].estimates[j] = (-taus[t] * deg.degree[ext[j]] - 1.0 / f).real();
        }
        // A sequence that is not yet contracting still gives a usable start.
        double estimate = report.tau_sweep.back().estimates[j];
        bool asymptotic = false;
        try {
            estimate = extract_root_coupling(rtd_at, geometry, id, taus, 0.0).coupling;
            asymptotic = true;
        } catch (const Error& e) {
            report.extraction_notes.push_back(id + ": " + e.what() + "; starting from the last estimate");
        }
        if (std::isfinite(estimate) && std::fabs(estimate) <= opts.box) {
            report.initial(static_cast<Eigen::Index>(ext[j])) = estimate;
            if (asymptotic) {
                report.method[ext[j]] = RecoveryMethod::Asymptotic;
            }
        } else {
            report.extraction_notes.push_back(id + ": estimate outside prior box");
        }
    }

    // Least-squares closure, optionally from the prior box corners as well.
    std::vector<Eigen::VectorXd> starts{report.initial};
    if (opts.multistart) {
        starts.push_back(Eigen::VectorXd::Constant(static_cast<Eigen::Index>(nv), opts.box));
        starts.push_back(Eigen::VectorXd::Constant(static_cast<Eigen::Index>(nv), -opts.box));
    }
    std::size_t best = 0;
    // Globalization on inverted blocks at off-axis points (all points when
    // there are none), then the direct fit on every sample.
    std::vector<RtDSample> off_axis;
    for (const auto& s : prob.data) {
        if (s.at.z().imag() != 0.0) {
            off_axis.push_back(s);
        }
    }
    const InverseProblem warmup(geometry, ext, off_axis.empty() ? prob.data : off_axis);
    const bool staged = warmup.residual_size() >= static_cast<Eigen::Index>(nv);
    for (std::size_t i = 0; i < starts.size(); ++i) {
        Eigen::VectorXd x0 = starts[i].cwiseMax(-opts.box).cwiseMin(opts.box);
        int pre = 0;
        double cost = staged ? fit_cost(warmup, x0) : 0.0;
        for (int round = 0; staged && round < 4; ++round) {
            const StartResult first = levenberg_marquardt(warmup, coordinate_sweeps(warmup, x0, opts.box), opts);
            pre += first.iterations;
            const double c = fit_cost(warmup, first.result);
            if (!(c < cost)) {
                break;
            }
            const bool settled = c > cost * (1.0 - 1e-6);
            x0 = first.result;
            cost = c;
            if (settled) {
                break;
            }
        }
        report.starts.push_back(levenberg_marquardt(prob, x0, opts));
        report.starts[i].start = starts[i];
        report.starts[i].iterations += pre;
        if (report.starts[i].residual < report.starts[best].residual) {
            best = i;
        }
    }
    const StartResult& win = report.starts[best];
    report.couplings = win.result;
    report.residual_norm = win.residual;
    report.converged = win.converged;
    report.iterations = win.iterations;
    report.stop_reason = win.stop_reason;
    for (const auto& s : report.starts) {
        if (s.converged) {
            report.multistart_spread =
                std::max(report.multistart_spread, (s.result - win.result).lpNorm<Eigen::Infinity>());
        } else {
            report.multistart_spread = std::numeric_limits<double>::infinity();
        }
    }

    // Consistency: contracted-path asymptotics on the recovered model.
    try {
        const std::string& root = geometry.vertices()[ext.front()].id;
        const PathSet paths = spanning_tree_paths(geometry, root);
        const double lmin = geometry.min_length();
        const double tau = std::isfinite(lmin) ? 30.0 / lmin : 30.0;
        const CVector ac = report.couplings.cast<Complex>();
        for (std::size_t l = 0; l < paths.paths.size(); ++l) {
            PathSumCheck check;
            check.target = paths.paths[l].target;
            check.vertices = paths.paths[l].vertices;
            for (const auto& id : check.vertices) {
                check.coupling_sum += report.couplings(static_cast<Eigen::Index>(geometry.require_vertex(id)));
            }
            check.tau = tau;
            check.formula_value = path_sum_formula(geometry, ac, paths, l, tau);
            report.path_sums.push_back(std::move(check));
        }
    } catch (const Error& e) {
        report.extraction_notes.push_back(std::string("path sums: ") + e.what());
    }
    return report;
}

} // namespace qgscat
