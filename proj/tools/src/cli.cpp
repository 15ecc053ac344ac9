#include "freqctl/cli.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "freqctl/dispatch.hpp"
#include "freqctl/report_io.hpp"
#include "freqctl/repro.hpp"
#include "freqctl/scenario_io.hpp"
#include "freqctl/simulator.hpp"
#include "freqctl/stability.hpp"

namespace freqctl::cli {

namespace {

struct Overrides {
    std::optional<double> dt;
    std::optional<double> horizon;
    std::string scheme;
    std::string interval;  // "continuous" or a number of seconds
};

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

Scenario load(const std::string& path) {
    if (path == "toy") {
        return toy_grid();
    }
    return load_scenario(path);
}

void apply(Scenario& sc, const Overrides& o) {
    if (o.dt) {
        sc.dt = *o.dt;
    }
    if (o.horizon) {
        sc.horizon = *o.horizon;
    }
    if (!o.scheme.empty()) {
        std::string name = o.scheme;
        std::transform(name.begin(), name.end(), name.begin(),
                       [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
        const auto s = parse_scheme(name);
        if (!s) {
            throw UsageError("unknown scheme '" + o.scheme + "'");
        }
        sc.scheme = *s;
    }
    if (!o.interval.empty()) {
        std::optional<double> t;
        if (o.interval != "continuous") {
            std::size_t used = 0;
            try {
                t = std::stod(o.interval, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used != o.interval.size()) {
                throw UsageError("--T expects 'continuous' or a number, got '" + o.interval + "'");
            }
        }
        sc.comm = CommGraph(sc.comm.links(), sc.comm.failures(), t);
    }
}

bool check(const Scenario& sc, std::ostream& err) {
    const auto problems = validate(sc);
    for (const auto& p : problems) {
        err << "error: " << p << '\n';
    }
    return problems.empty();
}

void write_to(const std::string& path, std::ostream& out, const std::string& text) {
    if (path.empty() || path == "-") {
        out << text;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) {
        throw UsageError("cannot open '" + path + "' for writing");
    }
    f << text;
}

void add_overrides(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--dt", o.dt, "integration step (s)");
    cmd->add_option("--horizon", o.horizon, "simulated time (s)");
    cmd->add_option("--scheme", o.scheme, "control scheme, e.g. CONSENSUS or HYBRID_SINGLE");
    cmd->add_option("--T", o.interval, "message interval in seconds, or 'continuous'");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Distributed frequency control toolkit"};
    app.require_subcommand(1);

    std::string scenario_path;
    std::string output_path;
    std::string summary_path;
    std::string emit_path;
    Overrides overrides;
    std::uint64_t seed = 7;
    std::string experiment;
    double repro_horizon = 0.0;

    auto* sim = app.add_subcommand("simulate", "integrate a scenario");
    sim->add_option("scenario", scenario_path, "scenario JSON file, or 'toy'")->required();
    sim->add_option("-o,--output", output_path, "trajectory CSV path ('-' for stdout)");
    sim->add_option("--summary", summary_path, "summary JSON path (default stdout)");
    sim->add_option("--emit-scenario", emit_path, "write the effective scenario as JSON");
    add_overrides(sim, overrides);

    auto* opt = app.add_subcommand("optimal", "optimal dispatch for the post-disturbance injections");
    opt->add_option("scenario", scenario_path, "scenario JSON file, or 'toy'")->required();
    opt->add_option("-o,--output", output_path, "JSON output path (default stdout)");

    auto* stab = app.add_subcommand("stability", "spectrum and sufficient conditions");
    stab->add_option("scenario", scenario_path, "scenario JSON file, or 'toy'")->required();
    stab->add_option("-o,--output", output_path, "JSON output path (default stdout)");
    stab->add_option("--seed", seed, "seed for the factorization sample points");
    add_overrides(stab, overrides);

    auto* rep = app.add_subcommand("repro", "rerun an experiment on the bundled grid");
    rep->add_option("experiment", experiment, "failure_costs, convergence_vs_T, multi_failure, sequential")
        ->required()
        ->check(CLI::IsMember({"failure_costs", "convergence_vs_T", "multi_failure", "sequential"}));
    rep->add_option("-o,--output", output_path, "CSV output path (default stdout)");
    rep->add_option("--horizon", repro_horizon, "override the simulated time (s)");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitError;
    }

    try {
        if (*rep) {
            std::ostringstream csv;
            repro::write_csv(csv, repro::run(experiment, repro_horizon));
            write_to(output_path, out, csv.str());
            return kExitOk;
        }

        Scenario sc = load(scenario_path);
        apply(sc, overrides);
        if (!check(sc, err)) {
            return kExitError;
        }

        if (*sim) {
            if (!emit_path.empty()) {
                save_scenario(sc, emit_path);
            }
            const auto result = run_scenario(sc);
            if (!output_path.empty()) {
                std::ostringstream csv;
                write_trajectory_csv(csv, result.trajectory);
                write_to(output_path, out, csv.str());
            }
            write_to(summary_path, out, summary_json(result.summary, sc));
            for (const auto& e : result.trajectory.events) {
                if (e.kind == "warning" || e.kind == "fallback") {
                    err << e.kind << " at t=" << e.time << ": " << e.detail << '\n';
                }
            }
            if (!result.summary.convergence_time) {
                err << "NOT_CONVERGED: cost " << result.summary.steady_cost_paper
                    << " vs optimal " << result.summary.optimal_cost << '\n';
                return kExitNotConverged;
            }
            return kExitOk;
        }
        if (*opt) {
            write_to(output_path, out, dispatch_json(optimal_dispatch(sc.grid, sc.steady_injection())));
            return kExitOk;
        }
        write_to(output_path, out, stability_json(analyze(sc, seed)));
        return kExitOk;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
    }
    return kExitError;
}

}  // namespace freqctl::cli
