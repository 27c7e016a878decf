#include "qgscat/cli.hpp"

#include "qgscat/errors.hpp"
#include "qgscat/inverse.hpp"
#include "qgscat/io.hpp"
#include "qgscat/oracle.hpp"
#include "qgscat/verify.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>

namespace qgscat {

namespace {

double parse_number(std::string_view text, std::string_view spec) {
    double x = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), x);
    if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(x)) {
        throw InvalidArgument("grid '" + std::string(spec) + "': bad number '" + std::string(text) + "'");
    }
    return x;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == sep) {
            parts.push_back(s.substr(start, i - start));
            start = i + 1;
        }
    }
    return parts;
}

std::string z_text(Complex z) {
    std::ostringstream os;
    os.precision(17);
    os << '(' << z.real() << ", " << z.imag() << ')';
    return os.str();
}

Json suite_json(const SuiteResult& r) {
    return {{"suite", r.name},
            {"passed", r.passed},
            {"cases", r.cases},
            {"skipped", r.skipped},
            {"max_error", std::isfinite(r.max_error) ? Json(r.max_error) : Json(nullptr)},
            {"tolerance", r.tolerance}};
}

void emit(const Json& j, const std::string& path, std::ostream& out) {
    if (path.empty()) {
        out << j.dump(2) << '\n';
    } else {
        write_json_file(path, j);
    }
}

MetricGraph load_graph(const std::string& path, std::ostream& err) {
    MetricGraph g = read_graph_file(path);
    const ValidationReport report = validate_graph(g);
    if (!report.ok()) {
        throw InvalidGraph(report.summary());
    }
    const RationalReport rational = rational_independence_check(g);
    if (!rational.independent()) {
        err << "warning: " << rational.flagged.size()
            << " edge-length pair(s) are close to a rational ratio; recovery may be ill-posed\n";
    }
    return g;
}

struct GridOptions {
    std::vector<std::string> real;
    std::vector<std::string> tau;
    std::vector<std::string> offset;

    void attach(CLI::App* cmd) {
        cmd->add_option("--grid", real, "real energies s: start:stop:count[:log]");
        cmd->add_option("--tau-grid", tau, "points z = -tau^2: start:stop:count[:log]");
        cmd->add_option("--offset-grid", offset, "points z = s + i*im: start:stop:count:im");
    }

    bool empty() const { return real.empty() && tau.empty() && offset.empty(); }

    std::vector<Complex> points() const {
        std::vector<Complex> zs;
        for (const auto& s : real) {
            const auto p = parse_grid(s, GridAxis::Real);
            zs.insert(zs.end(), p.begin(), p.end());
        }
        for (const auto& s : tau) {
            const auto p = parse_grid(s, GridAxis::Tau);
            zs.insert(zs.end(), p.begin(), p.end());
        }
        for (const auto& s : offset) {
            const auto p = parse_grid(s, GridAxis::Offset);
            zs.insert(zs.end(), p.begin(), p.end());
        }
        return zs;
    }
};

// Forward data on `zs`; singular points either abort (exit 2 via the error)
// or are dropped with a note.
ScatteringDataset forward_data(const MetricGraph& g, const std::vector<Complex>& zs, double noise,
                               std::uint64_t seed, bool skip_singular, std::ostream& err) {
    std::vector<Complex> rejected;
    ScatteringDataset data = synth_dataset(g, g.couplings(), zs, noise, seed, &rejected);
    if (!rejected.empty()) {
        std::string list;
        for (const Complex z : rejected) {
            list += "\n  z = " + z_text(z);
        }
        if (!skip_singular) {
            throw SpectralSingularity("forward model singular at " + std::to_string(rejected.size()) +
                                      " point(s):" + list);
        }
        err << "skipped " << rejected.size() << " singular point(s):" << list << '\n';
    }
    return data;
}

int invert_exit(const RecoveryReport& report) { return report.converged ? kExitOk : kExitNonConvergence; }

} // namespace

std::vector<Complex> parse_grid(std::string_view spec, GridAxis axis) {
    const auto parts = split(spec, ':');
    const bool offset = axis == GridAxis::Offset;
    if (parts.size() < 3 || parts.size() > 4) {
        throw InvalidArgument("grid '" + std::string(spec) + "': expected start:stop:count" +
                              (offset ? ":im" : "[:log]"));
    }
    const double start = parse_number(parts[0], spec);
    const double stop = parse_number(parts[1], spec);
    const double count_value = parse_number(parts[2], spec);
    if (count_value < 1.0 || count_value != std::floor(count_value)) {
        throw InvalidArgument("grid '" + std::string(spec) + "': count must be a positive integer");
    }
    const auto count = static_cast<std::size_t>(count_value);
    bool log = false;
    double im = 0.0;
    if (parts.size() == 4) {
        if (offset) {
            im = parse_number(parts[3], spec);
            if (im == 0.0) {
                throw InvalidArgument("grid '" + std::string(spec) + "': offset must be non-zero");
            }
        } else if (parts[3] == "log") {
            log = true;
        } else if (parts[3] != "lin") {
            throw InvalidArgument("grid '" + std::string(spec) + "': unknown spacing '" + std::string(parts[3]) + "'");
        }
    } else if (offset) {
        throw InvalidArgument("grid '" + std::string(spec) + "': missing imaginary offset");
    }
    if (log && !(start > 0.0 && stop > 0.0)) {
        throw InvalidArgument("grid '" + std::string(spec) + "': log spacing needs positive bounds");
    }

    std::vector<Complex> zs;
    for (std::size_t i = 0; i < count; ++i) {
        const double t = count == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(count - 1);
        const double x = log ? start * std::pow(stop / start, t) : start + (stop - start) * t;
        switch (axis) {
        case GridAxis::Real:
            if (x == 0.0) {
                throw InvalidArgument("grid '" + std::string(spec) + "' contains z = 0");
            }
            zs.emplace_back(x, 0.0);
            break;
        case GridAxis::Tau:
            if (!(x > 0.0)) {
                throw InvalidArgument("grid '" + std::string(spec) + "': tau must be positive");
            }
            zs.emplace_back(-x * x, 0.0);
            break;
        case GridAxis::Offset:
            zs.emplace_back(x, im);
            break;
        }
    }
    return zs;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Forward and inverse scattering on delta-coupled quantum graphs", "qgscat"};
    app.require_subcommand(1);
    std::function<int()> action;

    // forward
    auto* forward = app.add_subcommand("forward", "scattering samples on a spectral grid");
    std::string fw_graph, fw_out, fw_csv;
    GridOptions fw_grid;
    double fw_noise = 0.0;
    std::uint64_t fw_seed = 0;
    bool fw_skip = false;
    forward->add_option("--graph", fw_graph, "graph JSON with couplings")->required();
    forward->add_option("--out", fw_out, "dataset JSON")->required();
    forward->add_option("--csv", fw_csv, "CSV export (default: dataset path with .csv)");
    fw_grid.attach(forward);
    forward->add_option("--noise", fw_noise, "relative Gaussian noise level");
    forward->add_option("--seed", fw_seed, "noise seed");
    forward->add_flag("--skip-singular", fw_skip, "drop singular points instead of failing");
    forward->callback([&] {
        action = [&] {
            const MetricGraph g = load_graph(fw_graph, err);
            if (fw_grid.empty()) {
                throw InvalidArgument("forward needs at least one of --grid, --tau-grid, --offset-grid");
            }
            const ScatteringDataset data = forward_data(g, fw_grid.points(), fw_noise, fw_seed, fw_skip, err);
            write_dataset_file(fw_out, data);
            std::filesystem::path csv = fw_csv.empty() ? std::filesystem::path(fw_out).replace_extension(".csv")
                                                       : std::filesystem::path(fw_csv);
            std::ofstream os(csv);
            if (!os) {
                throw InvalidArgument("cannot write '" + csv.string() + "'");
            }
            write_dataset_csv(os, data);
            return int(kExitOk);
        };
    });

    // invert
    auto* invert = app.add_subcommand("invert", "recover couplings from a dataset");
    std::string inv_graph, inv_data, inv_out;
    RecoveryOptions inv_opts;
    bool inv_single = false;
    invert->add_option("--graph", inv_graph, "geometry JSON (couplings ignored)")->required();
    invert->add_option("--data", inv_data, "dataset JSON")->required();
    invert->add_option("--out", inv_out, "report JSON (default: stdout)");
    invert->add_option("--box", inv_opts.box, "prior bound on |a|");
    invert->add_option("--max-iter", inv_opts.max_iterations, "iterations per start");
    invert->add_option("--tol-f", inv_opts.ftol, "relative cost reduction stop");
    invert->add_option("--tol-g", inv_opts.gtol, "gradient cosine stop");
    invert->add_flag("--single-start", inv_single, "skip the box-corner starts");
    invert->callback([&] {
        action = [&] {
            const MetricGraph g = load_graph(inv_graph, err);
            inv_opts.multistart = !inv_single;
            const RecoveryReport report = recover_couplings(read_dataset_file(inv_data), g, inv_opts);
            emit(report_to_json(report), inv_out, out);
            return invert_exit(report);
        };
    });

    // verify
    auto* verify = app.add_subcommand("verify", "identity and invariant suites on a random fleet");
    VerifyOptions vf;
    std::string vf_data, vf_out;
    verify->add_option("--seed", vf.seed, "fleet seed");
    verify->add_option("--graphs", vf.graphs, "fleet size");
    verify->add_option("--energies", vf.energies, "energies per graph");
    verify->add_option("--data", vf_data, "also check unitarity of this dataset");
    verify->add_option("--out", vf_out, "report JSON (default: stdout)");
    verify->add_option("--tol-identity", vf.tol_identity);
    verify->add_option("--tol-unitarity", vf.tol_unitarity);
    verify->add_option("--tol-oracle", vf.tol_oracle);
    verify->add_option("--tol-weight", vf.tol_weight);
    verify->add_option("--tol-chi", vf.tol_chi);
    verify->add_option("--tol-reflection", vf.tol_reflection);
    verify->add_option("--tol-factorization", vf.tol_factorization);
    verify->add_option("--tol-rtd", vf.tol_rtd);
    verify->callback([&] {
        action = [&] {
            std::vector<SuiteResult> suites = run_invariant_suites(vf);
            if (!vf_data.empty()) {
                suites.push_back(dataset_unitarity(read_dataset_file(vf_data), vf.tol_unitarity));
            }
            Json list = Json::array();
            for (const auto& s : suites) {
                list.push_back(suite_json(s));
            }
            const bool ok = all_passed(suites);
            emit({{"seed", vf.seed}, {"passed", ok}, {"suites", list}}, vf_out, out);
            return ok ? int(kExitOk) : int(kExitVerification);
        };
    });

    // contract
    auto* contract = app.add_subcommand("contract", "merge the endpoints of an edge");
    std::string ct_graph, ct_edge, ct_out;
    contract->add_option("--graph", ct_graph, "graph JSON")->required();
    contract->add_option("--edge", ct_edge, "edge id")->required();
    contract->add_option("--out", ct_out, "graph JSON (default: stdout)");
    contract->callback([&] {
        action = [&] {
            const MetricGraph g = load_graph(ct_graph, err);
            emit(graph_to_json(contract_edge(g, ct_edge)), ct_out, out);
            return int(kExitOk);
        };
    });

    // oracle
    auto* oracle = app.add_subcommand("oracle", "compare the M-matrix formula with plane-wave matching");
    std::string or_graph, or_out;
    std::vector<std::string> or_grid;
    double or_tol = 1e-10;
    oracle->add_option("--graph", or_graph, "graph JSON with couplings")->required();
    oracle->add_option("--grid", or_grid, "real energies: start:stop:count[:log]")->required();
    oracle->add_option("--tol", or_tol, "maximum operator-norm difference");
    oracle->add_option("--out", or_out, "report JSON (default: stdout)");
    oracle->callback([&] {
        action = [&] {
            const MetricGraph g = load_graph(or_graph, err);
            Json rows = Json::array();
            double worst = 0.0;
            for (const auto& spec : or_grid) {
                for (const Complex z : parse_grid(spec, GridAxis::Real)) {
                    if (!(z.real() > 0.0)) {
                        throw InvalidArgument("oracle energies must be positive");
                    }
                    try {
                        const CMatrix formula = sigma_external(g, g.couplings(), SpectralPoint(z)).values;
                        const PlaneWaveResult pw = planewave_relative_scattering(g, g.couplings(), z.real());
                        const double e = op_norm(formula - pw.matrix);
                        worst = std::max(worst, e);
                        rows.push_back({{"s", z.real()}, {"difference", e}, {"retries", pw.retries}});
                    } catch (const SpectralError& e) {
                        rows.push_back({{"s", z.real()}, {"skipped", e.what()}});
                    }
                }
            }
            const bool ok = worst < or_tol;
            emit({{"passed", ok}, {"max_difference", worst}, {"tolerance", or_tol}, {"samples", rows}}, or_out, out);
            return ok ? int(kExitOk) : int(kExitVerification);
        };
    });

    // roundtrip
    auto* roundtrip = app.add_subcommand("roundtrip", "forward data from a graph, then invert it");
    std::string rt_graph, rt_out;
    GridOptions rt_grid;
    double rt_noise = 0.0;
    std::uint64_t rt_seed = 0;
    roundtrip->add_option("--graph", rt_graph, "graph JSON with the true couplings")->required();
    rt_grid.attach(roundtrip);
    roundtrip->add_option("--noise", rt_noise, "relative Gaussian noise level");
    roundtrip->add_option("--seed", rt_seed, "noise seed");
    roundtrip->add_option("--out", rt_out, "report JSON (default: stdout)");
    roundtrip->callback([&] {
        action = [&] {
            const MetricGraph g = load_graph(rt_graph, err);
            const std::vector<Complex> zs = rt_grid.empty() ? recovery_sample_plan(g) : rt_grid.points();
            const ScatteringDataset data = forward_data(g, zs, rt_noise, rt_seed, true, err);
            const RecoveryReport report = recover_couplings(data, g);
            Json j = report_to_json(report);
            const Eigen::VectorXd truth = g.couplings().real();
            j["truth"] = std::vector<double>(truth.data(), truth.data() + truth.size());
            j["max_error"] = (report.couplings - truth).lpNorm<Eigen::Infinity>();
            emit(j, rt_out, out);
            return invert_exit(report);
        };
    });

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitInvalid;
    }

    try {
        return action();
    } catch (const NonConvergence& e) {
        err << "non-convergence: " << e.what() << '\n';
        return kExitNonConvergence;
    } catch (const SpectralError& e) {
        err << "singular: " << e.what() << '\n';
        return kExitSingular;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitInvalid;
    }
}

} // namespace qgscat
