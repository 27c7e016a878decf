#pragma once

// Metric-graph data model: vertices carrying δ-type couplings and optional
// semi-infinite leads, compact edges with positive lengths. Multigraphs are
// first-class (parallel edges and loops), since contraction produces both.

#include "qgscat/linalg.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace qgscat {

struct Vertex {
    std::string id;
    Complex coupling{0.0, 0.0};
    // Number of semi-infinite leads attached. Admissible graphs have 0 or 1;
    // the count is kept so that contraction preserves it and validation can
    // report vertices that end up with more.
    int leads = 0;

    bool has_lead() const { return leads > 0; }
};

struct Edge {
    std::string id;
    std::string u;
    std::string v;
    double length = 0.0;

    bool is_loop() const { return u == v; }
};

/// Immutable after construction. Construction never throws; use
/// validate_graph() (or require_admissible()) before numerical work.
class MetricGraph {
public:
    MetricGraph() = default;
    MetricGraph(std::vector<Vertex> vertices, std::vector<Edge> edges);

    const std::vector<Vertex>& vertices() const { return vertices_; }
    const std::vector<Edge>& edges() const { return edges_; }
    std::size_t vertex_count() const { return vertices_.size(); }
    std::size_t edge_count() const { return edges_.size(); }

    std::optional<std::size_t> vertex_index(std::string_view id) const;
    std::optional<std::size_t> edge_index(std::string_view id) const;
    /// Throws InvalidArgument on unknown id.
    std::size_t require_vertex(std::string_view id) const;
    std::size_t require_edge(std::string_view id) const;

    /// Endpoint indices of edge `e`; only meaningful on a validated graph.
    std::size_t tail(std::size_t e) const { return tail_[e]; }
    std::size_t head(std::size_t e) const { return head_[e]; }

    CVector couplings() const;
    std::vector<std::size_t> external_indices() const;
    std::vector<std::size_t> internal_indices() const;
    std::size_t lead_count() const;
    double total_length() const;
    /// Smallest compact edge length; +inf when there are no edges.
    double min_length() const;

    MetricGraph with_couplings(const CVector& a) const;
    MetricGraph with_edge_length(std::string_view edge_id, double length) const;
    /// Same vertices and edges with every lead removed.
    MetricGraph compact_part() const;

private:
    std::vector<Vertex> vertices_;
    std::vector<Edge> edges_;
    std::unordered_map<std::string, std::size_t> vertex_lookup_;
    std::unordered_map<std::string, std::size_t> edge_lookup_;
    std::vector<std::size_t> tail_;
    std::vector<std::size_t> head_;
};

enum class ViolationKind {
    EmptyGraph,
    DuplicateVertexId,
    DuplicateEdgeId,
    UnknownEndpoint,
    NonpositiveLength,
    NonfiniteLength,
    MultipleLeads,
    NonfiniteCoupling,
};

std::string_view to_string(ViolationKind kind);

struct Violation {
    ViolationKind kind;
    std::string subject;
    std::string message;
};

struct ValidationReport {
    std::vector<Violation> violations;

    bool ok() const { return violations.empty(); }
    bool has(ViolationKind kind) const;
    std::string summary() const;
};

ValidationReport validate_graph(const MetricGraph& g);

/// Throws InvalidGraph carrying the report summary unless `g` is admissible.
void require_admissible(const MetricGraph& g);

/// Compact degree per vertex: non-loop edge ends plus two per loop.
struct DegreeTable {
    std::vector<int> degree;

    int total() const;
};

DegreeTable degree_table(const MetricGraph& g);

/// Id given to the vertex produced by gluing `v` and `w`.
std::string merged_vertex_id(std::string_view v, std::string_view w);

/// Removes a non-loop edge and glues its endpoints. The merged vertex takes
/// the position of the lower-indexed endpoint, the sum of both couplings and
/// both leads; any other edges between the endpoints become loops.
MetricGraph contract_edge(const MetricGraph& g, std::string_view edge_id);

/// True when every vertex is reachable from the first one along compact edges.
bool compact_connected(const MetricGraph& g);

struct TreePath {
    std::string target;
    std::vector<std::string> vertices;  // root first
    std::vector<std::string> edges;     // in order from the root
    std::vector<double> lengths;

    std::size_t vertex_count() const { return vertices.size(); }
};

struct PathSet {
    std::string root;
    std::vector<TreePath> paths;  // non-decreasing edge count, root path first
};

/// Breadth-first spanning tree of the compact part rooted at `root`.
/// Throws Disconnected when some vertex is unreachable.
PathSet spanning_tree_paths(const MetricGraph& g, std::string_view root);

struct CommensurateLengths {
    std::string edge_a;
    std::string edge_b;
    long long p = 0;
    long long q = 1;
    double deviation = 0.0;  // |l_a / l_b - p / q|
};

struct RationalReport {
    long long qmax = 0;
    std::vector<CommensurateLengths> flagged;

    bool independent() const { return flagged.empty(); }
};

inline constexpr double kRationalTolerance = 1e-9;

/// Advisory check: flags every pair of compact lengths whose ratio lies
/// within kRationalTolerance of a fraction with denominator at most `qmax`.
RationalReport rational_independence_check(const MetricGraph& g, long long qmax = 1000);

/// Best rational approximation p/q of x with 1 <= q <= qmax.
std::pair<long long, long long> best_rational_approximation(double x, long long qmax);

} // namespace qgscat
