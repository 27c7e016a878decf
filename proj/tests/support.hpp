#pragma once

#include "qgscat/graph.hpp"
#include "qgscat/io.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace qgscat::testing {

inline std::filesystem::path fixture(const std::string& name) { return std::filesystem::path(QGSCAT_FIXTURES) / name; }

inline MetricGraph load_fixture(const std::string& name) { return read_graph_file(fixture(name)); }

inline Vertex vertex(std::string id, double a = 0.0, bool lead = false) {
    return Vertex{std::move(id), Complex(a, 0.0), lead ? 1 : 0};
}

inline Edge edge(std::string id, std::string u, std::string v, double length) {
    return Edge{std::move(id), std::move(u), std::move(v), length};
}

// One vertex carrying a lead and no compact edges.
inline MetricGraph lead_only(double a) { return MetricGraph({vertex("v1", a, true)}, {}); }

// Interval of the given length with a lead at v1.
inline MetricGraph interval_with_lead(double length, double a1, double a2) {
    return MetricGraph({vertex("v1", a1, true), vertex("v2", a2)}, {edge("e1", "v1", "v2", length)});
}

inline double max_abs(const CMatrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

} // namespace qgscat::testing
