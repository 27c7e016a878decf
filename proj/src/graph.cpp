#include "qgscat/graph.hpp"

#include "qgscat/errors.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <sstream>

namespace qgscat {

namespace {

constexpr std::size_t kMissing = std::numeric_limits<std::size_t>::max();

} // namespace

MetricGraph::MetricGraph(std::vector<Vertex> vertices, std::vector<Edge> edges)
    : vertices_(std::move(vertices)), edges_(std::move(edges)) {
    for (std::size_t i = 0; i < vertices_.size(); ++i) {
        vertex_lookup_.try_emplace(vertices_[i].id, i);
    }
    tail_.reserve(edges_.size());
    head_.reserve(edges_.size());
    for (std::size_t e = 0; e < edges_.size(); ++e) {
        edge_lookup_.try_emplace(edges_[e].id, e);
        auto u = vertex_lookup_.find(edges_[e].u);
        auto v = vertex_lookup_.find(edges_[e].v);
        tail_.push_back(u == vertex_lookup_.end() ? kMissing : u->second);
        head_.push_back(v == vertex_lookup_.end() ? kMissing : v->second);
    }
}

std::optional<std::size_t> MetricGraph::vertex_index(std::string_view id) const {
    auto it = vertex_lookup_.find(std::string(id));
    if (it == vertex_lookup_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::optional<std::size_t> MetricGraph::edge_index(std::string_view id) const {
    auto it = edge_lookup_.find(std::string(id));
    if (it == edge_lookup_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::size_t MetricGraph::require_vertex(std::string_view id) const {
    auto i = vertex_index(id);
    if (!i) {
        throw InvalidArgument("unknown vertex '" + std::string(id) + "'");
    }
    return *i;
}

std::size_t MetricGraph::require_edge(std::string_view id) const {
    auto i = edge_index(id);
    if (!i) {
        throw InvalidArgument("unknown edge '" + std::string(id) + "'");
    }
    return *i;
}

CVector MetricGraph::couplings() const {
    CVector a(static_cast<Eigen::Index>(vertices_.size()));
    for (std::size_t i = 0; i < vertices_.size(); ++i) {
        a(static_cast<Eigen::Index>(i)) = vertices_[i].coupling;
    }
    return a;
}

std::vector<std::size_t> MetricGraph::external_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < vertices_.size(); ++i) {
        if (vertices_[i].has_lead()) {
            out.push_back(i);
        }
    }
    return out;
}

std::vector<std::size_t> MetricGraph::internal_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < vertices_.size(); ++i) {
        if (!vertices_[i].has_lead()) {
            out.push_back(i);
        }
    }
    return out;
}

std::size_t MetricGraph::lead_count() const {
    std::size_t n = 0;
    for (const auto& v : vertices_) {
        n += static_cast<std::size_t>(std::max(v.leads, 0));
    }
    return n;
}

double MetricGraph::total_length() const {
    double sum = 0.0;
    for (const auto& e : edges_) {
        sum += e.length;
    }
    return sum;
}

double MetricGraph::min_length() const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& e : edges_) {
        m = std::min(m, e.length);
    }
    return m;
}

MetricGraph MetricGraph::with_couplings(const CVector& a) const {
    if (static_cast<std::size_t>(a.size()) != vertices_.size()) {
        throw InvalidArgument("coupling vector size does not match vertex count");
    }
    auto vs = vertices_;
    for (std::size_t i = 0; i < vs.size(); ++i) {
        vs[i].coupling = a(static_cast<Eigen::Index>(i));
    }
    return MetricGraph(std::move(vs), edges_);
}

MetricGraph MetricGraph::with_edge_length(std::string_view edge_id, double length) const {
    auto es = edges_;
    es[require_edge(edge_id)].length = length;
    return MetricGraph(vertices_, std::move(es));
}

MetricGraph MetricGraph::compact_part() const {
    auto vs = vertices_;
    for (auto& v : vs) {
        v.leads = 0;
    }
    return MetricGraph(std::move(vs), edges_);
}

std::string_view to_string(ViolationKind kind) {
    switch (kind) {
    case ViolationKind::EmptyGraph: return "empty graph";
    case ViolationKind::DuplicateVertexId: return "duplicate vertex id";
    case ViolationKind::DuplicateEdgeId: return "duplicate edge id";
    case ViolationKind::UnknownEndpoint: return "unknown endpoint";
    case ViolationKind::NonpositiveLength: return "nonpositive length";
    case ViolationKind::NonfiniteLength: return "nonfinite length";
    case ViolationKind::MultipleLeads: return "multiple leads";
    case ViolationKind::NonfiniteCoupling: return "nonfinite coupling";
    }
    return "unknown";
}

bool ValidationReport::has(ViolationKind kind) const {
    return std::any_of(violations.begin(), violations.end(),
                       [kind](const Violation& v) { return v.kind == kind; });
}

std::string ValidationReport::summary() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < violations.size(); ++i) {
        if (i) {
            os << "; ";
        }
        os << to_string(violations[i].kind) << " (" << violations[i].subject << "): "
           << violations[i].message;
    }
    return os.str();
}

ValidationReport validate_graph(const MetricGraph& g) {
    ValidationReport report;
    auto add = [&](ViolationKind k, std::string subject, std::string msg) {
        report.violations.push_back({k, std::move(subject), std::move(msg)});
    };

    if (g.vertex_count() == 0) {
        add(ViolationKind::EmptyGraph, "", "graph has no vertices");
    }

    std::unordered_map<std::string, int> seen;
    for (const auto& v : g.vertices()) {
        if (++seen[v.id] == 2) {
            add(ViolationKind::DuplicateVertexId, v.id, "vertex id used more than once");
        }
        if (v.leads > 1) {
            add(ViolationKind::MultipleLeads, v.id,
                std::to_string(v.leads) + " leads attached; at most one allowed");
        }
        if (v.leads < 0) {
            add(ViolationKind::MultipleLeads, v.id, "negative lead count");
        }
        if (!std::isfinite(v.coupling.real()) || !std::isfinite(v.coupling.imag())) {
            add(ViolationKind::NonfiniteCoupling, v.id, "coupling is not finite");
        }
    }

    seen.clear();
    for (const auto& e : g.edges()) {
        if (++seen[e.id] == 2) {
            add(ViolationKind::DuplicateEdgeId, e.id, "edge id used more than once");
        }
        for (const auto* end : {&e.u, &e.v}) {
            if (!g.vertex_index(*end)) {
                add(ViolationKind::UnknownEndpoint, e.id, "endpoint '" + *end + "' does not exist");
            }
        }
        if (!std::isfinite(e.length)) {
            add(ViolationKind::NonfiniteLength, e.id, "length is not finite");
        } else if (e.length <= 0.0) {
            add(ViolationKind::NonpositiveLength, e.id, "length must be strictly positive");
        }
    }
    return report;
}

void require_admissible(const MetricGraph& g) {
    auto report = validate_graph(g);
    if (!report.ok()) {
        throw InvalidGraph("inadmissible graph: " + report.summary());
    }
}

int DegreeTable::total() const {
    int s = 0;
    for (int d : degree) {
        s += d;
    }
    return s;
}

DegreeTable degree_table(const MetricGraph& g) {
    DegreeTable t;
    t.degree.assign(g.vertex_count(), 0);
    for (std::size_t e = 0; e < g.edge_count(); ++e) {
        if (g.tail(e) == kMissing || g.head(e) == kMissing) {
            continue;
        }
        t.degree[g.tail(e)] += 1;
        t.degree[g.head(e)] += 1;
    }
    return t;
}

std::string merged_vertex_id(std::string_view v, std::string_view w) {
    std::string id = "(";
    id += v;
    id += ',';
    id += w;
    id += ')';
    return id;
}

MetricGraph contract_edge(const MetricGraph& g, std::string_view edge_id) {
    const std::size_t e = g.require_edge(edge_id);
    const Edge& target = g.edges()[e];
    if (target.is_loop()) {
        throw ContractLoop("edge '" + target.id + "' is a loop and cannot be contracted");
    }
    const std::size_t iu = g.require_vertex(target.u);
    const std::size_t iv = g.require_vertex(target.v);
    const std::size_t keep = std::min(iu, iv);
    const std::size_t drop = std::max(iu, iv);

    const Vertex& a = g.vertices()[iu];
    const Vertex& b = g.vertices()[iv];
    Vertex merged{merged_vertex_id(a.id, b.id), a.coupling + b.coupling, a.leads + b.leads};

    std::vector<Vertex> vs;
    vs.reserve(g.vertex_count() - 1);
    for (std::size_t i = 0; i < g.vertex_count(); ++i) {
        if (i == keep) {
            vs.push_back(merged);
        } else if (i != drop) {
            vs.push_back(g.vertices()[i]);
        }
    }

    std::vector<Edge> es;
    es.reserve(g.edge_count() - 1);
    for (std::size_t j = 0; j < g.edge_count(); ++j) {
        if (j == e) {
            continue;
        }
        Edge copy = g.edges()[j];
        if (copy.u == a.id || copy.u == b.id) {
            copy.u = merged.id;
        }
        if (copy.v == a.id || copy.v == b.id) {
            copy.v = merged.id;
        }
        es.push_back(std::move(copy));
    }
    return MetricGraph(std::move(vs), std::move(es));
}

namespace {

// Adjacency over non-loop compact edges: (neighbour, edge index), in edge order.
std::vector<std::vector<std::pair<std::size_t, std::size_t>>> adjacency(const MetricGraph& g) {
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> adj(g.vertex_count());
    for (std::size_t e = 0; e < g.edge_count(); ++e) {
        const auto u = g.tail(e);
        const auto v = g.head(e);
        if (u == v || u == kMissing || v == kMissing) {
            continue;
        }
        adj[u].emplace_back(v, e);
        adj[v].emplace_back(u, e);
    }
    return adj;
}

} // namespace

bool compact_connected(const MetricGraph& g) {
    if (g.vertex_count() == 0) {
        return true;
    }
    auto adj = adjacency(g);
    std::vector<bool> seen(g.vertex_count(), false);
    std::deque<std::size_t> queue{0};
    seen[0] = true;
    std::size_t reached = 1;
    while (!queue.empty()) {
        auto u = queue.front();
        queue.pop_front();
        for (auto [v, e] : adj[u]) {
            if (!seen[v]) {
                seen[v] = true;
                ++reached;
                queue.push_back(v);
            }
        }
    }
    return reached == g.vertex_count();
}

PathSet spanning_tree_paths(const MetricGraph& g, std::string_view root) {
    require_admissible(g);
    const std::size_t r = g.require_vertex(root);
    auto adj = adjacency(g);

    std::vector<std::size_t> parent(g.vertex_count(), kMissing);
    std::vector<std::size_t> via(g.vertex_count(), kMissing);
    std::vector<bool> seen(g.vertex_count(), false);
    std::vector<std::size_t> order;
    std::deque<std::size_t> queue{r};
    seen[r] = true;
    while (!queue.empty()) {
        auto u = queue.front();
        queue.pop_front();
        order.push_back(u);
        for (auto [v, e] : adj[u]) {
            if (!seen[v]) {
                seen[v] = true;
                parent[v] = u;
                via[v] = e;
                queue.push_back(v);
            }
        }
    }
    if (order.size() != g.vertex_count()) {
        throw Disconnected("compact part is not connected (" + std::to_string(order.size()) + " of " +
                           std::to_string(g.vertex_count()) + " vertices reachable from '" +
                           std::string(root) + "')");
    }

    // BFS visiting order already has non-decreasing depth.
    PathSet set;
    set.root = std::string(root);
    for (auto target : order) {
        TreePath path;
        path.target = g.vertices()[target].id;
        std::vector<std::size_t> chain;
        for (auto at = target; at != r; at = parent[at]) {
            chain.push_back(at);
        }
        std::reverse(chain.begin(), chain.end());
        path.vertices.push_back(g.vertices()[r].id);
        for (auto v : chain) {
            const auto& edge = g.edges()[via[v]];
            path.vertices.push_back(g.vertices()[v].id);
            path.edges.push_back(edge.id);
            path.lengths.push_back(edge.length);
        }
        set.paths.push_back(std::move(path));
    }
    return set;
}

std::pair<long long, long long> best_rational_approximation(double x, long long qmax) {
    if (qmax < 1) {
        throw InvalidArgument("qmax must be positive");
    }
    const bool negative = x < 0.0;
    double y = std::fabs(x);

    // Convergents h/k of the continued fraction of y.
    long long h_prev = 1, h_prev2 = 0;
    long long k_prev = 0, k_prev2 = 1;
    long long best_p = static_cast<long long>(std::llround(y));
    long long best_q = 1;
    const double target = y;

    for (int iter = 0; iter < 64; ++iter) {
        const double a_real = std::floor(y);
        if (a_real > 1e15) {
            break;
        }
        const auto a = static_cast<long long>(a_real);
        const long long h = a * h_prev + h_prev2;
        const long long k = a * k_prev + k_prev2;
        if (k > qmax) {
            // Largest admissible semiconvergent competes with the last convergent.
            const long long t = (qmax - k_prev2) / k_prev;
            const long long sp = t * h_prev + h_prev2;
            const long long sq = t * k_prev + k_prev2;
            best_p = h_prev;
            best_q = k_prev;
            if (t >= 1 && std::fabs(target - static_cast<double>(sp) / static_cast<double>(sq)) <
                              std::fabs(target - static_cast<double>(h_prev) / static_cast<double>(k_prev))) {
                best_p = sp;
                best_q = sq;
            }
            break;
        }
        h_prev2 = h_prev;
        h_prev = h;
        k_prev2 = k_prev;
        k_prev = k;
        best_p = h;
        best_q = k;
        const double frac = y - a_real;
        if (frac < 1e-15) {
            break;
        }
        y = 1.0 / frac;
    }
    return {negative ? -best_p : best_p, best_q};
}

RationalReport rational_independence_check(const MetricGraph& g, long long qmax) {
    if (qmax < 2) {
        throw InvalidArgument("qmax must be at least 2");
    }
    RationalReport report;
    report.qmax = qmax;
    const auto& es = g.edges();
    for (std::size_t i = 0; i < es.size(); ++i) {
        for (std::size_t j = i + 1; j < es.size(); ++j) {
            const double ratio = es[i].length / es[j].length;
            auto [p, q] = best_rational_approximation(ratio, qmax);
            const double dev = std::fabs(ratio - static_cast<double>(p) / static_cast<double>(q));
            if (dev < kRationalTolerance) {
                report.flagged.push_back({es[i].id, es[j].id, p, q, dev});
            }
        }
    }
    return report;
}

} // namespace qgscat
