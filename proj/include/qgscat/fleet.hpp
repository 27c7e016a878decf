#pragma once

// Seeded random graphs for property sweeps and the verify command.

#include "qgscat/graph.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace qgscat {

struct FleetOptions {
    std::size_t max_vertices = 6;
    std::size_t max_edges = 8;
    std::size_t max_leads = 3;
    double min_length = 0.5;
    double max_length = 2.5;
    bool allow_loops = true;
    bool allow_parallel = true;
};

/// Random graph with a connected compact part, at least one lead, and
/// lengths that pass the rational-independence advisory (qmax = 1000).
/// Couplings are left at zero.
MetricGraph random_graph(std::mt19937_64& rng, const FleetOptions& opts = {});

std::vector<MetricGraph> random_fleet(std::uint64_t seed, std::size_t count, const FleetOptions& opts = {});

Eigen::VectorXd random_couplings(std::mt19937_64& rng, std::size_t n, double range = 5.0);

} // namespace qgscat
