#pragma once

// JSON and CSV boundary formats.
//
// Graph:   {"vertices":[{"id":str,"coupling":[re,im],"lead":bool}],
//           "edges":[{"id":str,"u":str,"v":str,"length":num}]}
// Dataset: {"graph":"<geometry hash>","seed":n,"noise":x,
//           "samples":[{"z":[re,im],"sigma":[[[re,im],...],...]}]}
// Matrices are row-major arrays of [re, im] pairs.

#include "qgscat/graph.hpp"
#include "qgscat/inverse.hpp"
#include "qgscat/scattering.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <string>

namespace qgscat {

using Json = nlohmann::json;

Json graph_to_json(const MetricGraph& g);
/// Throws InvalidArgument on schema errors; does not validate the graph.
MetricGraph graph_from_json(const Json& j);

MetricGraph read_graph_file(const std::filesystem::path& path);
void write_graph_file(const std::filesystem::path& path, const MetricGraph& g);

/// FNV-1a digest of ids, lead flags, endpoints and lengths. Couplings are
/// excluded, so the digest identifies the geometry an inversion is run on.
std::string geometry_hash(const MetricGraph& g);

Json complex_to_json(Complex c);
Complex complex_from_json(const Json& j);
Json matrix_to_json(const CMatrix& m);
CMatrix matrix_from_json(const Json& j);

Json dataset_to_json(const ScatteringDataset& d);
ScatteringDataset dataset_from_json(const Json& j);
ScatteringDataset read_dataset_file(const std::filesystem::path& path);
void write_dataset_file(const std::filesystem::path& path, const ScatteringDataset& d);

/// Header "s,re_1_1,im_1_1,re_1_2,..." then one row per sample; s is Re z.
/// A "z_im" column follows s when any sample lies off the real axis.
void write_dataset_csv(std::ostream& os, const ScatteringDataset& d);

Json report_to_json(const RecoveryReport& r);

Json read_json_file(const std::filesystem::path& path);
/// Pretty-printed with a trailing newline.
void write_json_file(const std::filesystem::path& path, const Json& j);

} // namespace qgscat
