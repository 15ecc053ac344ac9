#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "freqctl/controllers.hpp"
#include "freqctl/grid_model.hpp"

namespace freqctl {

/// Time derivative of the dynamic part of a SystemState.
struct StateDerivative {
    Vector domega;
    Vector dflow;
    Vector du;
    Vector dq;
};

/// Swing dynamics at every node, line-flow dynamics on every line, and the control law
/// selected by `ctx`. `injection` is the current unadjustable power p(t); pass zeros to
/// evaluate the homogeneous (equilibrium-coordinate) part.
StateDerivative derivative(const SystemState& state, const PowerGrid& grid, const CommGraph& comm,
                           const ControlContext& ctx, const Vector& injection);

/// In-place variant; every vector in `out` must already have its final size.
void derivative_into(const SystemState& state, const PowerGrid& grid, const CommGraph& comm,
                     const ControlContext& ctx, const Vector& injection, StateDerivative& out);

struct EventRecord {
    double time = 0.0;
    std::string kind;  ///< "disturbance", "comm_failure", "flow_law", "fallback", "warning"
    std::string detail;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<SystemState> states;
    std::vector<double> cost_series;  ///< Σ C_j u_j² per recorded state
    std::vector<EventRecord> events;
    double max_freq_excursion = 0.0;  ///< max over every step and node of |ω|

    /// Time of the last applied disturbance, if any.
    std::optional<double> last_disturbance() const;
};

struct RunSummary {
    Vector steady_u;
    double steady_cost_paper = 0.0;
    double optimal_cost = 0.0;
    std::optional<double> convergence_time;  ///< empty means not converged
    std::optional<double> first_crossing;
    double max_freq_excursion = 0.0;
};

struct RunResult {
    Trajectory trajectory;
    RunSummary summary;
};

/// Raised when the state stops being finite. Carries the failing step and the last good state.
class SimulationError : public std::runtime_error {
public:
    SimulationError(const std::string& what, std::size_t step, SystemState last_finite)
        : std::runtime_error(what), step_(step), last_finite_(std::move(last_finite)) {}

    std::size_t step() const { return step_; }
    const SystemState& last_finite() const { return last_finite_; }

private:
    std::size_t step_;
    SystemState last_finite_;
};

/// ω = 0, u = 0, q = 0 and DC power-flow line flows for the initial injections.
SystemState initial_state(const Scenario& scenario);

/// Fixed-step classical RK4 over [0, horizon].
///
/// At each step instant, events are applied in this order: disturbances, comm failures
/// (with artificial-variable initialization for pairs that switch to the flow law),
/// message refresh of `last_rx`, sequential link rotation. An event at time τ fires at the
/// first step instant k·dt ≥ τ. Throws std::invalid_argument if the scenario does not
/// validate and SimulationError if the state diverges.
Trajectory integrate(const Scenario& scenario);

/// First recorded time, at or after the last disturbance, from which |cost − cost_star| stays
/// below `band` for the rest of the trajectory.
std::optional<double> convergence_time(const Trajectory& traj, double cost_star,
                                       double band = 0.01);

/// First recorded time at or after the last disturbance with |cost − cost_star| < band.
std::optional<double> first_crossing(const Trajectory& traj, double cost_star, double band = 0.01);

/// integrate() plus summary against the optimal dispatch for the post-disturbance injections.
RunResult run_scenario(const Scenario& scenario);

}  // namespace freqctl
