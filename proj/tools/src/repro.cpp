#include "freqctl/repro.hpp"

#include <cstdio>
#include <future>
#include <ostream>
#include <stdexcept>

#include "freqctl/simulator.hpp"

namespace freqctl::repro {

namespace {

std::string link_name(const NodePair& p) {
    return std::to_string(p.first + 1) + "-" + std::to_string(p.second + 1);
}

std::string failure_name(const std::vector<NodePair>& failed) {
    std::string s = "fail";
    for (const auto& p : failed) {
        s += "_" + link_name(p);
    }
    return s;
}

Scenario sampled(Scenario base, Scheme scheme, double interval) {
    base.scheme = scheme;
    base.comm = CommGraph(base.comm.links(), base.comm.failures(), interval);
    return base;
}

std::string number(std::optional<double> v, const char* fmt = "%.6g") {
    if (!v) {
        return "";
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, fmt, *v);
    return buf;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"") == std::string::npos) {
        return s;
    }
    std::string q = "\"";
    for (const char c : s) {
        q += c == '"' ? std::string("\"\"") : std::string(1, c);
    }
    return q + "\"";
}

std::vector<Case> failure_costs(const Scenario& toy) {
    const NodePair link27{1, 6};
    std::vector<Case> out;
    out.push_back({"full_comm", toy, 23.27, "published"});
    out.back().scenario.scheme = Scheme::Consensus;
    out.push_back({"fail_2-7", with_failures(toy, Scheme::Consensus, {link27}), 35.69,
                   kReconstructed});
    out.push_back({"fail_2-7", with_failures(toy, Scheme::HybridSingle, {link27}), std::nullopt,
                   "flow law on the failed pair"});
    out.push_back({"no_comm", with_failures(toy, Scheme::Consensus, toy.comm.links()), 39.11,
                   kReconstructed});
    return out;
}

// The published pair first, then every pair of power lines sharing an endpoint.
std::vector<std::vector<NodePair>> multi_failure_sets(const Scenario& toy) {
    std::vector<std::vector<NodePair>> sets{{{0, 1}, {1, 4}}};
    const auto& lines = toy.grid.lines();
    for (std::size_t a = 0; a < lines.size(); ++a) {
        for (std::size_t b = a + 1; b < lines.size(); ++b) {
            const auto& la = lines[a];
            const auto& lb = lines[b];
            const bool adjacent = la.from == lb.from || la.from == lb.to || la.to == lb.from ||
                                  la.to == lb.to;
            std::vector<NodePair> set{{la.from, la.to}, {lb.from, lb.to}};
            if (adjacent && set != sets.front()) {
                sets.push_back(std::move(set));
            }
        }
    }
    return sets;
}

std::vector<Case> multi_failure(const Scenario& toy) {
    std::vector<Case> out;
    bool first = true;
    for (const auto& set : multi_failure_sets(toy)) {
        const auto name = failure_name(set);
        out.push_back({name, with_failures(toy, Scheme::Consensus, set),
                       first ? std::optional<double>(36.87) : std::nullopt,
                       first ? kReconstructed : ""});
        out.push_back({name, with_failures(toy, Scheme::MultiFailure, set),
                       first ? std::optional<double>(25.45) : std::nullopt,
                       first ? kReconstructed : ""});
        first = false;
    }
    return out;
}

std::vector<Case> convergence_vs_T(const Scenario& toy) {
    std::vector<Case> out;
    for (const double t : {1e-3, 1e-2, 1e-1, 1.0}) {
        out.push_back({"T=" + number(t, "%g"), sampled(toy, Scheme::ConsensusSampled, t),
                       std::nullopt, "t* nondecreasing in T"});
    }
    return out;
}

std::vector<Case> sequential(const Scenario& toy) {
    return {
        {"T=1", sampled(toy, Scheme::Sequential, 1.0), std::nullopt, ""},
        {"T=1", sampled(toy, Scheme::ConsensusSampled, 1.0), std::nullopt, ""},
        {"T=0.001", sampled(toy, Scheme::ConsensusSampled, 1e-3), std::nullopt, "baseline"},
    };
}

}  // namespace

Scenario with_failures(Scenario base, Scheme scheme, const std::vector<NodePair>& failed) {
    std::vector<LinkFailure> failures;
    for (const auto& p : failed) {
        failures.push_back({make_pair_sorted(p.first, p.second), kFailureTime});
    }
    base.scheme = scheme;
    base.comm = CommGraph(base.comm.links(), std::move(failures), base.comm.message_interval());
    return base;
}

std::vector<std::string_view> experiments() {
    return {"failure_costs", "convergence_vs_T", "multi_failure", "sequential"};
}

std::vector<Case> cases(std::string_view experiment, double horizon) {
    const Scenario toy = toy_grid();
    std::vector<Case> out;
    double default_horizon = 1000.0;
    if (experiment == "failure_costs") {
        out = failure_costs(toy);
    } else if (experiment == "multi_failure") {
        out = multi_failure(toy);
    } else if (experiment == "convergence_vs_T") {
        out = convergence_vs_T(toy);
        default_horizon = 2000.0;
    } else if (experiment == "sequential") {
        out = sequential(toy);
        default_horizon = 2000.0;
    } else {
        throw std::invalid_argument("unknown experiment '" + std::string(experiment) + "'");
    }
    for (auto& c : out) {
        c.scenario.horizon = horizon > 0.0 ? horizon : default_horizon;
    }
    return out;
}

std::vector<Row> run(std::string_view experiment, double horizon) {
    auto list = cases(experiment, horizon);
    std::vector<std::future<RunSummary>> jobs;
    jobs.reserve(list.size());
    for (const auto& c : list) {
        jobs.push_back(std::async(std::launch::async,
                                  [&sc = c.scenario] { return run_scenario(sc).summary; }));
    }
    std::vector<Row> rows;
    for (std::size_t i = 0; i < list.size(); ++i) {
        const auto s = jobs[i].get();
        rows.push_back({std::string(experiment), std::move(list[i]), s.steady_cost_paper,
                        s.optimal_cost, s.convergence_time, s.first_crossing});
    }
    return rows;
}

void write_csv(std::ostream& os, const std::vector<Row>& rows) {
    os << "experiment,case,scheme,T,horizon,steady_cost,optimal_cost,t_star,first_crossing,"
          "paper_value,note\n";
    for (const auto& r : rows) {
        const auto& sc = r.spec.scenario;
        os << r.experiment << ',' << r.spec.name << ',' << to_string(sc.scheme) << ','
           << (sc.comm.continuous() ? std::string("continuous")
                                    : number(sc.comm.message_interval(), "%g"))
           << ',' << number(sc.horizon, "%g") << ',' << number(r.steady_cost) << ','
           << number(r.optimal_cost) << ','
           << (r.t_star ? number(r.t_star) : std::string("NOT_CONVERGED")) << ','
           << number(r.first_crossing) << ',' << number(r.spec.paper_value) << ','
           << csv_field(r.spec.note) << '\n';
    }
}

}  // namespace freqctl::repro
