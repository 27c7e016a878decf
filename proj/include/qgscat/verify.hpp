#pragma once

// Invariant suites over a seeded random fleet, shared by the `verify`
// command and the acceptance runner.

#include "qgscat/fleet.hpp"
#include "qgscat/scattering.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace qgscat {

struct SuiteResult {
    std::string name;
    std::size_t cases = 0;
    std::size_t skipped = 0;  // samples rejected by a conditioning check
    double max_error = 0.0;
    double tolerance = 0.0;
    bool passed = false;
};

struct VerifyOptions {
    std::uint64_t seed = 1;
    std::size_t graphs = 10;
    std::size_t energies = 20;      // per graph, uniform in (0, max_energy]
    double max_energy = 100.0;
    double coupling_range = 5.0;
    double tol_identity = 1e-12;
    double tol_unitarity = 1e-10;
    double tol_oracle = 1e-10;
    double tol_weight = 1e-12;
    double tol_chi = 1e-10;
    double tol_reflection = 1e-12;
    double tol_factorization = 1e-10;
    double tol_rtd = 1e-8;
    double tol_herglotz = 1e-12;
    FleetOptions fleet;
};

std::vector<SuiteResult> run_invariant_suites(const VerifyOptions& opts);

/// Unitarity of the real-energy samples of a dataset.
SuiteResult dataset_unitarity(const ScatteringDataset& data, double tolerance);

bool all_passed(const std::vector<SuiteResult>& suites);

} // namespace qgscat
