#include "support.hpp"

#include "qgscat/cli.hpp"
#include "qgscat/errors.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

using namespace qgscat;
using namespace qgscat::testing;

namespace {

namespace fs = std::filesystem;

fs::path workdir() {
    const auto dir = fs::temp_directory_path() / "qgscat_test_cli";
    fs::create_directories(dir);
    return dir;
}

std::string tmp(const std::string& name) { return (workdir() / name).string(); }

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    std::ostringstream out;
    std::ostringstream err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

// Vertices and edges sorted by id, so two graph files can be compared
// regardless of ordering.
Json canonical(const Json& g) {
    Json c = g;
    auto by_id = [](const Json& a, const Json& b) { return a.at("id") < b.at("id"); };
    std::sort(c["vertices"].begin(), c["vertices"].end(), by_id);
    std::sort(c["edges"].begin(), c["edges"].end(), by_id);
    return c;
}

} // namespace

TEST_CASE("grid specs") {
    const auto lin = parse_grid("1:100:5", GridAxis::Real);
    REQUIRE(lin.size() == 5);
    CHECK(lin.front() == Complex(1.0, 0.0));
    CHECK(lin.back() == Complex(100.0, 0.0));
    CHECK(std::abs(lin[1] - Complex(25.75, 0.0)) < 1e-12);

    const auto lg = parse_grid("1:100:3:log", GridAxis::Real);
    CHECK(std::abs(lg[1] - Complex(10.0, 0.0)) < 1e-12);

    const auto tau = parse_grid("1:3:3", GridAxis::Tau);
    CHECK(tau[2] == Complex(-9.0, 0.0));

    const auto off = parse_grid("0:10:2:3", GridAxis::Offset);
    CHECK(off[1] == Complex(10.0, 3.0));

    CHECK_THROWS_AS(parse_grid("1:2", GridAxis::Real), InvalidArgument);
    CHECK_THROWS_AS(parse_grid("1:2:0", GridAxis::Real), InvalidArgument);
    CHECK_THROWS_AS(parse_grid("-1:1:3", GridAxis::Real), InvalidArgument);
    CHECK_THROWS_AS(parse_grid("a:b:c", GridAxis::Real), InvalidArgument);
}

TEST_CASE("forward writes the scalar closed form") {
    const std::string out = tmp("fw_single.json");
    const Run r = run({"forward", "--graph", fixture("single_lead.json").string(), "--grid", "1:100:5", "--out", out});
    REQUIRE(r.code == kExitOk);
    const ScatteringDataset d = read_dataset_file(out);
    REQUIRE(d.samples.size() == 5);
    for (const auto& s : d.samples) {
        const Complex ik(0.0, std::sqrt(s.z.real()));
        CHECK(std::abs(s.sigma(0, 0) - (ik + 2.0) / (ik - 2.0)) < 1e-12);
    }
    CHECK(fs::exists(fs::path(out).replace_extension(".csv")));
}

TEST_CASE("forward at zero coupling gives identity samples") {
    const MetricGraph g = load_fixture("roundtrip.json").with_couplings(CVector::Zero(4));
    const std::string graph = tmp("zero.json");
    write_graph_file(graph, g);
    const std::string out = tmp("fw_zero.json");
    REQUIRE(run({"forward", "--graph", graph, "--grid", "0.5:40:9", "--out", out}).code == kExitOk);
    for (const auto& s : read_dataset_file(out).samples) {
        CHECK(max_abs(s.sigma - CMatrix::Identity(2, 2)) < 1e-12);
    }
}

TEST_CASE("forward refuses an edge-Dirichlet energy") {
    const std::string graph = tmp("pi.json");
    write_graph_file(graph, interval_with_lead(std::numbers::pi, 1.0, 0.0));
    const Run r = run({"forward", "--graph", graph, "--grid", "4:4:1", "--out", tmp("fw_pi.json")});
    CHECK(r.code == kExitSingular);
    CHECK(r.err.find("z = (4, 0)") != std::string::npos);

    const Run skip = run({"forward", "--graph", graph, "--grid", "3:5:3", "--skip-singular", "--out", tmp("fw_pi.json")});
    CHECK(skip.code == kExitOk);
    CHECK(read_dataset_file(tmp("fw_pi.json")).samples.size() == 2);
}

TEST_CASE("forward is byte-for-byte deterministic") {
    const std::string graph = fixture("roundtrip.json").string();
    const std::vector<std::string> base{"forward", "--graph", graph, "--grid", "1:50:7", "--tau-grid", "0.5:4:4",
                                        "--noise", "1e-6", "--seed", "5"};
    auto a = base;
    a.insert(a.end(), {"--out", tmp("det_a.json")});
    auto b = base;
    b.insert(b.end(), {"--out", tmp("det_b.json")});
    REQUIRE(run(a).code == kExitOk);
    REQUIRE(run(b).code == kExitOk);
    CHECK(slurp(tmp("det_a.json")) == slurp(tmp("det_b.json")));
    CHECK(slurp(tmp("det_a.csv")) == slurp(tmp("det_b.csv")));
}

TEST_CASE("invalid input exits 1") {
    CHECK(run({}).code == kExitInvalid);
    CHECK(run({"forward", "--graph", tmp("missing.json"), "--grid", "1:2:2", "--out", tmp("x.json")}).code ==
          kExitInvalid);
    CHECK(run({"frobnicate"}).code == kExitInvalid);
    CHECK(run({"forward", "--graph", fixture("single_lead.json").string(), "--grid", "0:2:3", "--out",
               tmp("x.json")})
              .code == kExitInvalid);

    const std::string bad = tmp("two_leads.json");
    write_graph_file(bad, MetricGraph({Vertex{"v1", {}, 2}}, {}));
    CHECK(run({"forward", "--graph", bad, "--grid", "1:2:2", "--out", tmp("x.json")}).code == kExitInvalid);
}

TEST_CASE("invert recovers the round-trip fixture") {
    const std::string graph = fixture("roundtrip.json").string();
    const std::string data = tmp("inv_data.json");
    REQUIRE(run({"forward", "--graph", graph, "--tau-grid", "0.5:5:8", "--grid", "6.47:73.57:12", "--offset-grid",
                 "-2:55:20:3", "--out", data})
                .code == kExitOk);
    const Run r = run({"invert", "--graph", graph, "--data", data});
    REQUIRE(r.code == kExitOk);
    const Json j = Json::parse(r.out);
    const CVector truth = load_fixture("roundtrip.json").couplings();
    REQUIRE(j.at("couplings").size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(std::fabs(j.at("couplings")[i].at("value").get<double>() - truth(Eigen::Index(i)).real()) < 1e-6);
    }
}

TEST_CASE("invert exit codes") {
    const std::string graph = fixture("roundtrip.json").string();
    SECTION("truncated dataset") {
        const std::string data = tmp("one.json");
        REQUIRE(run({"forward", "--graph", graph, "--tau-grid", "1:1:1", "--out", data}).code == kExitOk);
        const Run r = run({"invert", "--graph", graph, "--data", data});
        CHECK(r.code == kExitInvalid);
        CHECK(r.err.find("samples") != std::string::npos);
    }
    SECTION("geometry mismatch") {
        const std::string data = tmp("single.json");
        REQUIRE(run({"forward", "--graph", fixture("single_lead.json").string(), "--tau-grid", "1:4:4", "--grid",
                     "1:16:4", "--out", data})
                    .code == kExitOk);
        CHECK(run({"invert", "--graph", graph, "--data", data}).code == kExitInvalid);
    }
    SECTION("iteration budget exhausted") {
        const std::string data = tmp("budget.json");
        REQUIRE(run({"forward", "--graph", graph, "--tau-grid", "0.5:5:8", "--grid", "1:60:10", "--noise", "1e-3",
                     "--seed", "2", "--out", data})
                    .code == kExitOk);
        const std::string report = tmp("budget_report.json");
        const Run r = run({"invert", "--graph", graph, "--data", data, "--max-iter", "1", "--single-start", "--out",
                           report});
        CHECK(r.code == kExitNonConvergence);
        // The best iterate is still written.
        CHECK(Json::parse(slurp(report)).contains("couplings"));
    }
    SECTION("noisy data") {
        const std::string data = tmp("noisy.json");
        REQUIRE(run({"forward", "--graph", graph, "--tau-grid", "0.5:5:8", "--grid", "6.47:73.57:12",
                     "--offset-grid", "-2:55:20:3", "--noise", "1e-8", "--seed", "4", "--out", data})
                    .code == kExitOk);
        const Run r = run({"invert", "--graph", graph, "--data", data});
        CHECK(r.code == kExitOk);
        const double residual = Json::parse(r.out).at("residual").get<double>();
        CHECK(residual > 0.0);
        CHECK(residual < 1e-5);
    }
}

TEST_CASE("verify passes on the default fleet and is stable across seeds") {
    std::vector<std::string> passed_suites;
    for (const char* seed : {"1", "2", "3"}) {
        const Run r = run({"verify", "--seed", seed, "--graphs", "4", "--energies", "8"});
        CHECK(r.code == kExitOk);
        const Json j = Json::parse(r.out);
        CHECK(j.at("passed").get<bool>());
        std::vector<std::string> names;
        for (const auto& s : j.at("suites")) {
            if (s.at("passed").get<bool>()) {
                names.push_back(s.at("suite").get<std::string>());
            }
        }
        if (passed_suites.empty()) {
            passed_suites = names;
        }
        CHECK(names == passed_suites);
    }
    CHECK(passed_suites.size() >= 10);
}

TEST_CASE("verify flags a corrupted dataset") {
    const std::string data = tmp("clean.json");
    REQUIRE(run({"forward", "--graph", fixture("roundtrip.json").string(), "--grid", "1:40:6", "--out", data}).code ==
            kExitOk);
    CHECK(run({"verify", "--graphs", "2", "--energies", "4", "--data", data}).code == kExitOk);

    ScatteringDataset d = read_dataset_file(data);
    d.samples[3].sigma(0, 1) += Complex(0.05, 0.0);
    const std::string corrupted = tmp("corrupted.json");
    write_dataset_file(corrupted, d);
    const Run r = run({"verify", "--graphs", "2", "--energies", "4", "--data", corrupted});
    CHECK(r.code == kExitVerification);
    bool unitarity_failed = false;
    const Json report = Json::parse(r.out);
    for (const auto& s : report.at("suites")) {
        if (s.at("suite").get<std::string>().find("unitarity") != std::string::npos && !s.at("passed").get<bool>()) {
            unitarity_failed = true;
        }
    }
    CHECK(unitarity_failed);
}

TEST_CASE("contract matches the fixture pair") {
    const std::string out = tmp("contracted.json");
    const Run r = run({"contract", "--graph", fixture("contract_before.json").string(), "--edge", "e1", "--out", out});
    REQUIRE(r.code == kExitOk);
    const Json got = read_json_file(out);
    const Json want = read_json_file(fixture("contract_after.json"));
    CHECK(canonical(got) == canonical(want));

    const MetricGraph before = load_fixture("contract_before.json");
    const MetricGraph after = read_graph_file(out);
    CHECK(std::abs(before.couplings().sum() - after.couplings().sum()) < 1e-15);
    bool loop = false;
    for (const auto& e : after.edges()) {
        loop = loop || (e.id == "e2" && e.is_loop());
    }
    CHECK(loop);
}

TEST_CASE("contract refuses a loop") {
    const std::string out = tmp("contracted_loop.json");
    CHECK(run({"contract", "--graph", fixture("contract_loop_star.json").string(), "--edge", "loop", "--out", out})
              .code == kExitInvalid);
}

TEST_CASE("oracle command agrees with the formula") {
    const Run r = run({"oracle", "--graph", fixture("roundtrip.json").string(), "--grid", "0.5:80:25"});
    CHECK(r.code == kExitOk);
    CHECK(Json::parse(r.out).at("max_difference").get<double>() < 1e-10);
}

TEST_CASE("roundtrip command") {
    const Run r = run({"roundtrip", "--graph", fixture("roundtrip.json").string()});
    REQUIRE(r.code == kExitOk);
    CHECK(Json::parse(r.out).at("max_error").get<double>() < 1e-6);
}

TEST_CASE("process exit codes from the installed binary") {
    const std::string bin = QGSCAT_BINARY;
    auto status = [&](const std::string& args) {
        const int raw = std::system((bin + " " + args + " > /dev/null 2>&1").c_str());
        return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    };
    CHECK(status("--help") == 0);
    CHECK(status("forward --graph " + fixture("single_lead.json").string() + " --grid 1:4:2 --out " +
                 tmp("bin.json")) == 0);
    CHECK(status("contract --graph " + fixture("contract_loop_star.json").string() + " --edge loop") == 1);
    const std::string graph = tmp("pi.json");
    write_graph_file(graph, interval_with_lead(std::numbers::pi, 1.0, 0.0));
    CHECK(status("forward --graph " + graph + " --grid 4:4:1 --out " + tmp("bin_pi.json")) == 2);
}
