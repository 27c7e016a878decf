#include "qgscat/fleet.hpp"

#include <algorithm>
#include <numeric>

namespace qgscat {

MetricGraph random_graph(std::mt19937_64& rng, const FleetOptions& opts) {
    using Pick = std::uniform_int_distribution<std::size_t>;
    const std::size_t n = Pick(1, std::max<std::size_t>(1, opts.max_vertices))(rng);

    std::vector<Vertex> vs(n);
    for (std::size_t i = 0; i < n; ++i) {
        vs[i].id = "v" + std::to_string(i + 1);
    }

    std::vector<std::pair<std::size_t, std::size_t>> ends;
    for (std::size_t i = 1; i < n; ++i) {
        ends.emplace_back(Pick(0, i - 1)(rng), i);
    }
    const std::size_t budget = opts.max_edges > ends.size() ? opts.max_edges - ends.size() : 0;
    const std::size_t extra = Pick(0, budget)(rng);
    for (std::size_t t = 0; t < extra; ++t) {
        const std::size_t u = Pick(0, n - 1)(rng);
        const std::size_t v = Pick(0, n - 1)(rng);
        if (u == v && !opts.allow_loops) {
            continue;
        }
        const bool parallel = std::any_of(ends.begin(), ends.end(), [&](auto p) {
            return (p.first == u && p.second == v) || (p.first == v && p.second == u);
        });
        if (parallel && !opts.allow_parallel) {
            continue;
        }
        ends.emplace_back(u, v);
    }

    const std::size_t max_leads = std::min(n, std::max<std::size_t>(1, opts.max_leads));
    const std::size_t leads = Pick(1, max_leads)(rng);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i = 0; i < leads; ++i) {
        vs[order[i]].leads = 1;
    }

    std::uniform_real_distribution<double> length(opts.min_length, opts.max_length);
    for (int attempt = 0;; ++attempt) {
        std::vector<Edge> es;
        for (std::size_t e = 0; e < ends.size(); ++e) {
            es.push_back({"e" + std::to_string(e + 1), vs[ends[e].first].id, vs[ends[e].second].id, length(rng)});
        }
        MetricGraph g(vs, std::move(es));
        if (rational_independence_check(g, 1000).independent() || attempt > 100) {
            return g;
        }
    }
}

std::vector<MetricGraph> random_fleet(std::uint64_t seed, std::size_t count, const FleetOptions& opts) {
    std::mt19937_64 rng(seed);
    std::vector<MetricGraph> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        out.push_back(random_graph(rng, opts));
    }
    return out;
}

Eigen::VectorXd random_couplings(std::mt19937_64& rng, std::size_t n, double range) {
    std::uniform_real_distribution<double> u(-range, range);
    Eigen::VectorXd a(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        a(i) = u(rng);
    }
    return a;
}

} // namespace qgscat
