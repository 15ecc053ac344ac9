#include "freqctl/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "freqctl/dispatch.hpp"

namespace freqctl {

namespace {

std::size_t step_index(double time, double dt) {
    const double k = std::ceil(time / dt - 1e-9);
    return k <= 0.0 ? 0 : static_cast<std::size_t>(k);
}

std::string pair_name(const NodePair& p) {
    return "(" + std::to_string(p.first + 1) + "," + std::to_string(p.second + 1) + ")";
}

void resize_like(StateDerivative& d, const SystemState& s) {
    d.domega.resize(s.omega.size());
    d.dflow.resize(s.flow.size());
    d.du.resize(s.u.size());
    d.dq.resize(s.q.size());
}

// out = base + h * slope on the dynamic fields; t and last_rx are left untouched.
void advance(SystemState& out, const SystemState& base, const StateDerivative& slope, double h) {
    out.omega = base.omega + h * slope.domega;
    out.flow = base.flow + h * slope.dflow;
    out.u = base.u + h * slope.du;
    out.q = base.q + h * slope.dq;
}

void refresh_received(SystemState& s, const PowerGrid& grid, const CommGraph& comm,
                      const ControlContext& ctx) {
    for (std::size_t k = 0; k < comm.link_count(); ++k) {
        if (!ctx.link_live(k)) {
            continue;
        }
        const auto [a, b] = comm.links()[k];
        s.last_rx[2 * k] = grid.nodes()[b].cost * s.u[static_cast<Eigen::Index>(b)];
        s.last_rx[2 * k + 1] = grid.nodes()[a].cost * s.u[static_cast<Eigen::Index>(a)];
    }
}

}  // namespace

void derivative_into(const SystemState& s, const PowerGrid& grid, const CommGraph& comm,
                     const ControlContext& ctx, const Vector& injection, StateDerivative& out) {
    const auto& nodes = grid.nodes();
    const auto& lines = grid.lines();
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        out.domega[ii] = -nodes[i].droop * s.omega[ii] + injection[ii] + s.u[ii];
    }
    for (std::size_t e = 0; e < lines.size(); ++e) {
        const auto ie = static_cast<Eigen::Index>(e);
        const auto a = static_cast<Eigen::Index>(lines[e].from);
        const auto b = static_cast<Eigen::Index>(lines[e].to);
        out.domega[a] -= s.flow[ie];
        out.domega[b] += s.flow[ie];
        out.dflow[ie] = lines[e].susceptance * (s.omega[a] - s.omega[b]);
    }
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        out.domega[static_cast<Eigen::Index>(i)] /= nodes[i].inertia;
    }
    control_rate_into(s, grid, comm, ctx, out.du, out.dq);
}

StateDerivative derivative(const SystemState& state, const PowerGrid& grid, const CommGraph& comm,
                           const ControlContext& ctx, const Vector& injection) {
    StateDerivative d;
    resize_like(d, state);
    derivative_into(state, grid, comm, ctx, injection, d);
    return d;
}

std::optional<double> Trajectory::last_disturbance() const {
    std::optional<double> last;
    for (const auto& e : events) {
        if (e.kind == "disturbance") {
            last = last ? std::max(*last, e.time) : e.time;
        }
    }
    return last;
}

SystemState initial_state(const Scenario& sc) {
    SystemState s = SystemState::zeros(sc.grid, sc.comm);
    if (sc.grid.line_count() == 0) {
        return s;
    }
    // θ = L⁺ p₀ gives the DC power flow; it is the flow of least reactance-weighted norm.
    const Matrix lap = sc.grid.weighted_laplacian();
    const Vector theta = lap.completeOrthogonalDecomposition().solve(sc.grid.fixed_power());
    for (std::size_t e = 0; e < sc.grid.line_count(); ++e) {
        const auto& l = sc.grid.lines()[e];
        s.flow[static_cast<Eigen::Index>(e)] =
            l.susceptance * (theta[static_cast<Eigen::Index>(l.from)] -
                             theta[static_cast<Eigen::Index>(l.to)]);
    }
    return s;
}

Trajectory integrate(const Scenario& sc) {
    if (const auto problems = validate(sc); !problems.empty()) {
        throw std::invalid_argument("integrate: invalid scenario: " + problems.front());
    }
    const auto& grid = sc.grid;
    const auto& comm = sc.comm;
    const double dt = sc.dt;
    const auto steps = static_cast<std::size_t>(std::llround(sc.horizon / dt));
    const std::size_t sample_stride =
        comm.continuous() ? 0 : static_cast<std::size_t>(std::llround(*comm.message_interval() / dt));

    std::vector<bool> failed(comm.link_count(), false);
    std::vector<NodePair> shared;
    std::size_t sampling_index = 0;
    std::optional<NodePair> active;

    ControlContext ctx = build_context(grid, comm, sc.scheme, failed);
    Vector injection = grid.fixed_power();
    SystemState x = initial_state(sc);

    Trajectory traj;
    auto log = [&](double t, std::string kind, std::string detail) {
        traj.events.push_back({t, std::move(kind), std::move(detail)});
    };
    auto engage = [&](double t, const ControlContext& next) {
        const bool changed = next.pair_lines != ctx.pair_lines;
        if (next.scheme != ctx.scheme && next.scheme == Scheme::Consensus) {
            log(t, "fallback", "failed link is not a power line; consensus on surviving links");
        }
        ctx = next;
        if (!changed) {
            return;
        }
        auto init = init_artificial(x, grid, comm, ctx);
        x.q = init.q;
        for (auto& w : init.warnings) {
            log(t, "warning", std::move(w));
        }
    };

    // A flow law engaged from the outset (two-node run with no listed failure) is
    // initialized at step 0, after the first message refresh.
    bool engaged_at_start = !ctx.pair_lines.empty();

    SystemState stage = x;
    StateDerivative k1, k2, k3, k4;
    for (auto* k : {&k1, &k2, &k3, &k4}) {
        resize_like(*k, x);
    }

    for (std::size_t step = 0;; ++step) {
        const double t = static_cast<double>(step) * dt;
        x.t = t;

        if (comm.continuous() && step > 0) {
            refresh_received(x, grid, comm, ctx);
        }
        for (const auto& d : sc.disturbances) {
            if (step_index(d.time, dt) == step) {
                injection[static_cast<Eigen::Index>(d.node)] += d.delta_p;
                std::ostringstream msg;
                msg << "node " << d.node + 1 << " delta_p " << d.delta_p;
                log(t, "disturbance", msg.str());
            }
        }
        bool failure_now = false;
        for (const auto& f : comm.failures()) {
            if (step_index(f.time, dt) == step) {
                failed[*comm.find_link(f.link.first, f.link.second)] = true;
                log(t, "comm_failure", "link " + pair_name(f.link));
                failure_now = true;
            }
        }
        if (failure_now) {
            if (sc.scheme == Scheme::Sequential && active) {
                const auto k = comm.find_link(active->first, active->second);
                if (k && failed[*k]) {
                    active.reset();
                }
            }
            auto next = build_context(grid, comm, sc.scheme, failed, active);
            const bool was_flow = !ctx.pair_lines.empty();
            engage(t, next);
            if (!ctx.pair_lines.empty() && (!was_flow || sc.scheme != Scheme::Sequential)) {
                std::string pairs;
                for (const auto e : ctx.pair_lines) {
                    pairs += pair_name({grid.lines()[e].from, grid.lines()[e].to});
                }
                log(t, "flow_law", "flow-coupled lines " + pairs);
            }
        }
        const bool sampling_instant =
            comm.continuous() ? step == 0 : step % sample_stride == 0;
        if (sampling_instant) {
            refresh_received(x, grid, comm, ctx);
        }
        if (engaged_at_start) {
            engaged_at_start = false;
            auto init = init_artificial(x, grid, comm, ctx);
            x.q = init.q;
            for (auto& w : init.warnings) {
                log(t, "warning", std::move(w));
            }
            log(t, "flow_law", "flow-based control active from the start");
        }
        if (sc.scheme == Scheme::Sequential && !comm.continuous() && step % sample_stride == 0) {
            shared = shared_links(grid, comm, failed);
            if (!shared.empty()) {
                active = sequential_active_link(sampling_index, shared);
                ctx = build_context(grid, comm, sc.scheme, failed, active);
                auto init = init_artificial(x, grid, comm, ctx);
                x.q = init.q;
                for (auto& w : init.warnings) {
                    log(t, "warning", std::move(w));
                }
            }
            ++sampling_index;
        }

        traj.max_freq_excursion = std::max(traj.max_freq_excursion, x.omega.cwiseAbs().maxCoeff());
        if (step % sc.record_stride == 0 || step == steps) {
            traj.times.push_back(t);
            traj.states.push_back(x);
            traj.cost_series.push_back(paper_cost(grid.cost(), x.u));
        }
        if (step == steps) {
            break;
        }

        stage.last_rx = x.last_rx;
        derivative_into(x, grid, comm, ctx, injection, k1);
        advance(stage, x, k1, 0.5 * dt);
        derivative_into(stage, grid, comm, ctx, injection, k2);
        advance(stage, x, k2, 0.5 * dt);
        derivative_into(stage, grid, comm, ctx, injection, k3);
        advance(stage, x, k3, dt);
        derivative_into(stage, grid, comm, ctx, injection, k4);

        advance(stage, x, k1, dt / 6.0);
        stage.omega += dt / 6.0 * (2.0 * k2.domega + 2.0 * k3.domega + k4.domega);
        stage.flow += dt / 6.0 * (2.0 * k2.dflow + 2.0 * k3.dflow + k4.dflow);
        stage.u += dt / 6.0 * (2.0 * k2.du + 2.0 * k3.du + k4.du);
        stage.q += dt / 6.0 * (2.0 * k2.dq + 2.0 * k3.dq + k4.dq);
        if (!stage.all_finite()) {
            throw SimulationError("integrate: state became non-finite at step " +
                                      std::to_string(step + 1),
                                  step + 1, x);
        }
        x.omega.swap(stage.omega);
        x.flow.swap(stage.flow);
        x.u.swap(stage.u);
        x.q.swap(stage.q);
    }
    return traj;
}

std::optional<double> first_crossing(const Trajectory& traj, double cost_star, double band) {
    const auto from = traj.last_disturbance();
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        if (from && traj.times[i] < *from) {
            continue;
        }
        if (std::abs(traj.cost_series[i] - cost_star) < band) {
            return traj.times[i];
        }
    }
    return std::nullopt;
}

std::optional<double> convergence_time(const Trajectory& traj, double cost_star, double band) {
    const auto from = traj.last_disturbance();
    std::optional<double> candidate;
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        if (from && traj.times[i] < *from) {
            continue;
        }
        const bool inside = std::abs(traj.cost_series[i] - cost_star) < band;
        if (!inside) {
            candidate.reset();
        } else if (!candidate) {
            candidate = traj.times[i];
        }
    }
    return candidate;
}

RunResult run_scenario(const Scenario& sc) {
    RunResult r;
    r.trajectory = integrate(sc);
    const auto& last = r.trajectory.states.back();
    r.summary.steady_u = last.u;
    r.summary.steady_cost_paper = cost_of(sc.grid, last.u).paper;
    r.summary.optimal_cost = optimal_dispatch(sc.grid, sc.steady_injection()).cost_paper;
    r.summary.convergence_time = convergence_time(r.trajectory, r.summary.optimal_cost);
    r.summary.first_crossing = first_crossing(r.trajectory, r.summary.optimal_cost);
    r.summary.max_freq_excursion = r.trajectory.max_freq_excursion;
    return r;
}

}  // namespace freqctl
