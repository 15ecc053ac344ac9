#include "freqctl/report_io.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include <nlohmann/json.hpp>

namespace freqctl {

namespace {

using nlohmann::json;

void put(std::ostream& os, double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    os << buf;
}

json to_array(const Vector& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        a.push_back(v[i]);
    }
    return a;
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

// Infinite or NaN values have no JSON representation; they become null.
json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
    if (traj.states.empty()) {
        return;
    }
    const auto& first = traj.states.front();
    const auto n = first.omega.size();
    const auto e = first.flow.size();
    os << 't';
    for (const char* name : {"omega", "u", "q"}) {
        for (Eigen::Index i = 0; i < n; ++i) {
            os << ',' << name << '_' << i + 1;
        }
    }
    for (Eigen::Index k = 0; k < e; ++k) {
        os << ",f_" << k + 1;
    }
    os << ",cost_paper\n";
    for (std::size_t r = 0; r < traj.states.size(); ++r) {
        const auto& s = traj.states[r];
        put(os, traj.times[r]);
        for (const Vector* v : {&s.omega, &s.u, &s.q, &s.flow}) {
            for (Eigen::Index i = 0; i < v->size(); ++i) {
                os << ',';
                put(os, (*v)[i]);
            }
        }
        os << ',';
        put(os, traj.cost_series[r]);
        os << '\n';
    }
}

std::string summary_json(const RunSummary& s, const Scenario& sc) {
    json j;
    j["scheme"] = std::string(to_string(sc.scheme));
    j["converged"] = s.convergence_time.has_value();
    j["status"] = s.convergence_time ? "CONVERGED" : "NOT_CONVERGED";
    j["steady_cost_paper"] = s.steady_cost_paper;
    j["optimal_cost"] = s.optimal_cost;
    j["convergence_time"] = optional_number(s.convergence_time);
    j["first_crossing"] = optional_number(s.first_crossing);
    j["max_freq_excursion"] = s.max_freq_excursion;
    j["steady_u"] = to_array(s.steady_u);
    return j.dump(2) + "\n";
}

std::string stability_json(const StabilityReport& r) {
    json j;
    j["state_dimension"] = r.state_dimension;
    json ev = json::array();
    for (const auto& z : r.spectrum.eigenvalues) {
        ev.push_back({z.real(), z.imag()});
    }
    j["eigenvalues"] = std::move(ev);
    j["structural_zero_count"] = r.spectrum.structural_zero_count;
    j["spectral_abscissa_excl_zeros"] = finite_or_null(r.spectrum.spectral_abscissa_excl_zeros);
    json verdicts = json::object();
    json margins = json::object();
    for (const auto& v : r.sufficient) {
        verdicts[v.name] = v.holds;
        margins[v.name] = {{"lhs", v.lhs}, {"rhs", v.rhs}};
    }
    j["sufficient_ok"] = std::move(verdicts);
    j["sufficient_margins"] = std::move(margins);
    if (r.identity) {
        j["identity"] = {{"form", r.identity->form},
                         {"identity_residual", r.identity->max_relative_residual},
                         {"sign", r.identity->sign},
                         {"consistent", r.identity->consistent}};
    } else {
        j["identity"] = nullptr;
    }
    return j.dump(2) + "\n";
}

std::string dispatch_json(const DispatchResult& r) {
    json j;
    j["u_star"] = to_array(r.u_star);
    j["lambda"] = r.lambda;
    j["cost_paper"] = r.cost_paper;
    j["cost_quadratic"] = r.cost_quadratic;
    return j.dump(2) + "\n";
}

}  // namespace freqctl
