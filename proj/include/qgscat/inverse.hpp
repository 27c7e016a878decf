#pragma once

// Recovery of vertex couplings from external scattering data.
//
// Pipeline: scattering samples -> Robin-to-Dirichlet blocks (exact algebra,
// no knowledge of the couplings) -> asymptotic estimates for external
// vertices at z = -tau^2 -> Levenberg-Marquardt refinement of all couplings
// against the recovered blocks. The contraction machinery (limit probe and
// path sums) works on the forward model and backs the consistency report.

#include "qgscat/graph.hpp"
#include "qgscat/linalg.hpp"
#include "qgscat/scattering.hpp"
#include "qgscat/weyl.hpp"

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace qgscat {

struct RtDSample {
    SpectralPoint at;
    CMatrix block;  // P_e (M_compact - kappa)^{-1} P_e on the external indices
};

/// Robin-to-Dirichlet block on the external vertices from a sample of the
/// external scattering matrix. Uses only the geometry of `geometry`; its
/// couplings are ignored. Throws SingularFactor when z falls on the
/// exceptional set of the formula.
RtDSample recover_rtd(const CMatrix& sigma_e, const MetricGraph& geometry, const SpectralPoint& z);

using RtDAtTau = std::function<RtDSample(double tau)>;

struct RootExtraction {
    double coupling = 0.0;
    std::vector<double> taus;
    std::vector<double> estimates;  // -tau deg(root) - 1/f(i tau) per grid point
    bool accelerated = false;       // tail still moving; Aitken extrapolation applied
};

/// Coupling at an external `root` from the diagonal of the RtD block along
/// z = -tau^2. The grid must be increasing with max(tau) * l_min >= min_reach.
/// Throws NonConvergence when successive estimates stop contracting.
RootExtraction extract_root_coupling(const RtDAtTau& rtd_at_tau, const MetricGraph& geometry,
                                     std::string_view root, std::span<const double> tau_grid,
                                     double min_reach = 20.0);

struct ContractionProbe {
    std::vector<double> eps;       // lengths actually evaluated
    std::vector<Complex> values;   // RtD (root, root) at each length
    Complex limit;                 // polynomial extrapolation to zero length
    Complex contracted;            // same entry on the contracted graph
    double relative_error = 0.0;   // |limit - contracted| / |contracted|
    double observed_order = 0.0;   // slope of log|value - contracted| vs log eps
};

/// Shrinks `edge` (non-loop, incident to `root`) through `eps_sequence` and
/// compares the extrapolated (root, root) RtD entry with the contracted graph.
ContractionProbe contraction_limit_probe(const MetricGraph& g, const CVector& couplings, std::string_view root,
                                         std::string_view edge, std::span<const double> eps_sequence,
                                         const SpectralPoint& z);

/// Contracts every edge of path `l` of `paths` (root outward), evaluates the
/// merged root's RtD entry f at z = -tau^2 and returns
/// -tau (sum of original degrees along the path - 2 (N_l - 1)) - 1/f,
/// which tends to the sum of the couplings on the path.
double path_sum_formula(const MetricGraph& g, const CVector& couplings, const PathSet& paths, std::size_t l,
                        double tau);

/// d/da_k of the RtD block on `subset`, one matrix per vertex k.
std::vector<CMatrix> lm_jacobian(const MetricGraph& g, const Eigen::VectorXd& a, const SpectralPoint& z,
                                 std::span<const std::size_t> subset);

struct RecoveryOptions {
    double damping_init = 1e-3;
    int max_iterations = 200;
    double ftol = 1e-12;
    double gtol = 1e-12;
    double xtol = 1e-14;
    double box = 100.0;
    bool multistart = true;
};

enum class RecoveryMethod { Asymptotic, LeastSquares };

std::string_view to_string(RecoveryMethod m);

struct TauSweepRow {
    double tau = 0.0;
    std::vector<double> estimates;  // one per external vertex
};

struct PathSumCheck {
    std::string target;
    std::vector<std::string> vertices;
    double coupling_sum = 0.0;   // sum of recovered couplings along the path
    double formula_value = 0.0;  // path_sum_formula on the recovered model
    double tau = 0.0;
};

struct StartResult {
    Eigen::VectorXd start;
    Eigen::VectorXd result;
    double residual = 0.0;
    int iterations = 0;
    bool converged = false;
    std::string stop_reason;
};

struct RecoveryReport {
    Eigen::VectorXd couplings;
    Eigen::VectorXd initial;
    std::vector<std::string> vertex_ids;
    std::vector<RecoveryMethod> method;
    double residual_norm = 0.0;
    bool converged = false;
    int iterations = 0;
    std::string stop_reason;
    std::vector<std::string> external_ids;
    std::vector<TauSweepRow> tau_sweep;
    std::vector<std::string> extraction_notes;
    std::vector<PathSumCheck> path_sums;
    std::vector<StartResult> starts;
    double multistart_spread = 0.0;
    std::size_t samples_used = 0;
    std::size_t samples_skipped = 0;
};

/// Spectral points used when no explicit grid is given: eight points on
/// z = -tau^2 with tau * l_min up to 6, twelve real energies and twenty
/// points on the line Im z = 3.
std::vector<Complex> recovery_sample_plan(const MetricGraph& geometry);

/// Minimum number of samples accepted for a graph with `vertex_count` vertices.
std::size_t required_samples(std::size_t vertex_count);

/// Throws InsufficientData (too few samples or no z = -tau^2 samples),
/// InvalidArgument (dataset hash does not match the geometry) or
/// Disconnected. Non-convergence is reported through the `converged` flag
/// with the best iterate kept.
RecoveryReport recover_couplings(const ScatteringDataset& data, const MetricGraph& geometry,
                                 const RecoveryOptions& opts = {});

} // namespace qgscat
