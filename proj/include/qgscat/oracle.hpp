#pragma once

// Independent ground truth: stationary plane-wave scattering and the compact
// eigenvalue problem, both assembled straight from the vertex matching
// conditions without going through the Weyl matrix.

#include "qgscat/graph.hpp"
#include "qgscat/linalg.hpp"
#include "qgscat/scattering.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace qgscat {

struct PlaneWaveResult {
    CMatrix matrix;
    double energy = 0.0;  // energy actually used (after any retry)
    int retries = 0;
};

/// Matrix of outgoing lead amplitudes for unit incoming waves e^{-ikx} on
/// each lead (x = 0 at the vertex, increasing outward). On a singular
/// system the energy is nudged by a factor (1 + 1e-7), at most 3 times,
/// before SingularSystem is thrown.
PlaneWaveResult planewave_scattering(const MetricGraph& g, const CVector& couplings, double s);

/// planewave_scattering for `couplings` times the adjoint of the one for
/// zero couplings: the scattering matrix relative to the Kirchhoff graph,
/// which is what sigma_external describes.
PlaneWaveResult planewave_relative_scattering(const MetricGraph& g, const CVector& couplings, double s);

/// Determinant of the row-normalized real matching system of the compact
/// graph at real z; its zeros are the eigenvalues.
double secular_function(const MetricGraph& g, const Eigen::VectorXd& couplings, double z);

/// Smallest singular value of the same row-normalized system.
double secular_min_singular(const MetricGraph& g, const Eigen::VectorXd& couplings, double z);

struct EigenvalueSearch {
    std::size_t grid_points = 4001;
    double tolerance = 1e-12;        // bracket width, relative to max(1, |z|)
    double degenerate_floor = 1e-7;  // sigma_min acceptance for touching zeros
};

/// Eigenvalues of the δ-coupled Laplacian on the compact part inside [lo, hi],
/// ascending. Leads are ignored.
std::vector<double> compact_eigenvalues(const MetricGraph& g, const Eigen::VectorXd& couplings, double lo,
                                        double hi, const EigenvalueSearch& opts = {});

/// Forward-generated dataset. With noise_level > 0, every entry receives
/// complex Gaussian noise of standard deviation noise_level * max|entry|,
/// drawn from a generator seeded with `seed`. Spectral errors propagate
/// unless `rejected` is given, in which case the offending points are
/// appended there and left out of the dataset.
ScatteringDataset synth_dataset(const MetricGraph& g, const CVector& couplings, std::span<const Complex> z_samples,
                                double noise_level = 0.0, std::uint64_t seed = 0,
                                std::vector<Complex>* rejected = nullptr);

} // namespace qgscat
