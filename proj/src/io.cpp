#include "qgscat/io.hpp"

#include "qgscat/errors.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

namespace qgscat {

namespace {

std::string number_text(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

template <class T>
T field(const Json& j, const char* key, const char* where) {
    if (!j.is_object() || !j.contains(key)) {
        throw InvalidArgument(std::string(where) + ": missing field '" + key + "'");
    }
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string(where) + ": bad field '" + key + "': " + e.what());
    }
}

} // namespace

Json complex_to_json(Complex c) { return Json::array({c.real(), c.imag()}); }

Complex complex_from_json(const Json& j) {
    if (j.is_number()) {
        return {j.get<double>(), 0.0};
    }
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
        throw InvalidArgument("complex value must be [re, im]");
    }
    return {j[0].get<double>(), j[1].get<double>()};
}

Json matrix_to_json(const CMatrix& m) {
    Json rows = Json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        Json row = Json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            row.push_back(complex_to_json(m(r, c)));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

CMatrix matrix_from_json(const Json& j) {
    if (!j.is_array()) {
        throw InvalidArgument("matrix must be an array of rows");
    }
    const auto n = static_cast<Eigen::Index>(j.size());
    const Eigen::Index cols = n == 0 ? 0 : static_cast<Eigen::Index>(j[0].size());
    CMatrix m(n, cols);
    for (Eigen::Index r = 0; r < n; ++r) {
        const auto& row = j[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
            throw InvalidArgument("matrix rows must have equal length");
        }
        for (Eigen::Index c = 0; c < cols; ++c) {
            m(r, c) = complex_from_json(row[static_cast<std::size_t>(c)]);
        }
    }
    return m;
}

Json graph_to_json(const MetricGraph& g) {
    Json vs = Json::array();
    for (const auto& v : g.vertices()) {
        Json lead = v.leads <= 1 ? Json(v.leads == 1) : Json(v.leads);
        vs.push_back({{"id", v.id}, {"coupling", complex_to_json(v.coupling)}, {"lead", lead}});
    }
    Json es = Json::array();
    for (const auto& e : g.edges()) {
        es.push_back({{"id", e.id}, {"u", e.u}, {"v", e.v}, {"length", e.length}});
    }
    return {{"vertices", vs}, {"edges", es}};
}

MetricGraph graph_from_json(const Json& j) {
    if (!j.is_object()) {
        throw InvalidArgument("graph must be a JSON object");
    }
    std::vector<Vertex> vs;
    for (const auto& jv : field<Json>(j, "vertices", "graph")) {
        Vertex v;
        v.id = field<std::string>(jv, "id", "vertex");
        if (jv.contains("coupling")) {
            v.coupling = complex_from_json(jv.at("coupling"));
        }
        if (jv.contains("lead")) {
            const auto& lead = jv.at("lead");
            if (lead.is_boolean()) {
                v.leads = lead.get<bool>() ? 1 : 0;
            } else if (lead.is_number_integer()) {
                v.leads = lead.get<int>();
            } else {
                throw InvalidArgument("vertex '" + v.id + "': lead must be a boolean or a count");
            }
        }
        vs.push_back(std::move(v));
    }
    std::vector<Edge> es;
    if (j.contains("edges")) {
        for (const auto& je : j.at("edges")) {
            Edge e;
            e.id = field<std::string>(je, "id", "edge");
            e.u = field<std::string>(je, "u", "edge");
            e.v = field<std::string>(je, "v", "edge");
            e.length = field<double>(je, "length", "edge");
            es.push_back(std::move(e));
        }
    }
    return MetricGraph(std::move(vs), std::move(es));
}

Json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw InvalidArgument("cannot open '" + path.string() + "'");
    }
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument("'" + path.string() + "' is not valid JSON: " + e.what());
    }
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
    std::ofstream out(path);
    if (!out) {
        throw InvalidArgument("cannot write '" + path.string() + "'");
    }
    out << j.dump(2) << '\n';
}

MetricGraph read_graph_file(const std::filesystem::path& path) { return graph_from_json(read_json_file(path)); }

void write_graph_file(const std::filesystem::path& path, const MetricGraph& g) {
    write_json_file(path, graph_to_json(g));
}

std::string geometry_hash(const MetricGraph& g) {
    std::ostringstream canon;
    for (const auto& v : g.vertices()) {
        canon << "v:" << v.id << ':' << v.leads << ';';
    }
    for (const auto& e : g.edges()) {
        canon << "e:" << e.id << ':' << e.u << ':' << e.v << ':' << number_text(e.length) << ';';
    }
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : canon.str()) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    std::ostringstream out;
    out << "fnv1a64:" << std::hex << std::setw(16) << std::setfill('0') << h;
    return out.str();
}

Json dataset_to_json(const ScatteringDataset& d) {
    Json samples = Json::array();
    for (const auto& s : d.samples) {
        samples.push_back({{"z", complex_to_json(s.z)}, {"sigma", matrix_to_json(s.sigma)}});
    }
    return {{"graph", d.graph_hash}, {"seed", d.seed}, {"noise", d.noise}, {"samples", samples}};
}

ScatteringDataset dataset_from_json(const Json& j) {
    ScatteringDataset d;
    if (!j.is_object()) {
        throw InvalidArgument("dataset must be a JSON object");
    }
    if (j.contains("graph")) {
        if (j["graph"].is_string()) {
            d.graph_hash = j["graph"].get<std::string>();
        } else if (j["graph"].is_object()) {
            d.graph_hash = geometry_hash(graph_from_json(j["graph"]));
        }
    }
    if (j.contains("seed")) {
        d.seed = j["seed"].get<std::uint64_t>();
    }
    if (j.contains("noise")) {
        d.noise = j["noise"].get<double>();
    }
    for (const auto& js : field<Json>(j, "samples", "dataset")) {
        d.samples.push_back({complex_from_json(field<Json>(js, "z", "sample")),
                             matrix_from_json(field<Json>(js, "sigma", "sample"))});
    }
    return d;
}

ScatteringDataset read_dataset_file(const std::filesystem::path& path) {
    return dataset_from_json(read_json_file(path));
}

void write_dataset_file(const std::filesystem::path& path, const ScatteringDataset& d) {
    write_json_file(path, dataset_to_json(d));
}

void write_dataset_csv(std::ostream& os, const ScatteringDataset& d) {
    const Eigen::Index n = d.samples.empty() ? 0 : d.samples.front().sigma.rows();
    const bool off_axis =
        std::any_of(d.samples.begin(), d.samples.end(), [](const auto& s) { return s.z.imag() != 0.0; });
    os << 's';
    if (off_axis) {
        os << ",z_im";
    }
    for (Eigen::Index r = 0; r < n; ++r) {
        for (Eigen::Index c = 0; c < n; ++c) {
            os << ",re_" << r + 1 << '_' << c + 1 << ",im_" << r + 1 << '_' << c + 1;
        }
    }
    os << '\n';
    for (const auto& s : d.samples) {
        os << number_text(s.z.real());
        if (off_axis) {
            os << ',' << number_text(s.z.imag());
        }
        for (Eigen::Index r = 0; r < s.sigma.rows(); ++r) {
            for (Eigen::Index c = 0; c < s.sigma.cols(); ++c) {
                os << ',' << number_text(s.sigma(r, c).real()) << ',' << number_text(s.sigma(r, c).imag());
            }
        }
        os << '\n';
    }
}

Json report_to_json(const RecoveryReport& r) {
    auto finite_or_null = [](double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); };
    Json couplings = Json::array();
    for (Eigen::Index i = 0; i < r.couplings.size(); ++i) {
        const auto k = static_cast<std::size_t>(i);
        couplings.push_back({{"vertex", r.vertex_ids[k]},
                             {"value", r.couplings(i)},
                             {"initial", r.initial(i)},
                             {"method", std::string(to_string(r.method[k]))}});
    }
    Json sweep = Json::array();
    for (const auto& row : r.tau_sweep) {
        Json est = Json::object();
        for (std::size_t j = 0; j < row.estimates.size(); ++j) {
            est[r.external_ids[j]] = finite_or_null(row.estimates[j]);
        }
        sweep.push_back({{"tau", row.tau}, {"estimates", est}});
    }
    Json paths = Json::array();
    for (const auto& p : r.path_sums) {
        paths.push_back({{"target", p.target},
                         {"vertices", p.vertices},
                         {"coupling_sum", p.coupling_sum},
                         {"formula_value", finite_or_null(p.formula_value)},
                         {"tau", p.tau}});
    }
    Json starts = Json::array();
    for (const auto& s : r.starts) {
        starts.push_back({{"start", std::vector<double>(s.start.data(), s.start.data() + s.start.size())},
                          {"result", std::vector<double>(s.result.data(), s.result.data() + s.result.size())},
                          {"residual", finite_or_null(s.residual)},
                          {"iterations", s.iterations},
                          {"converged", s.converged},
                          {"stop_reason", s.stop_reason}});
    }
    return {{"converged", r.converged},
            {"couplings", couplings},
            {"residual", finite_or_null(r.residual_norm)},
            {"iterations", r.iterations},
            {"stop_reason", r.stop_reason},
            {"samples_used", r.samples_used},
            {"samples_skipped", r.samples_skipped},
            {"multistart_spread", finite_or_null(r.multistart_spread)},
            {"starts", starts},
            {"tau_sweep", sweep},
            {"path_sums", paths},
            {"notes", r.extraction_notes}};
}

} // namespace qgscat
