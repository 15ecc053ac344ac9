#pragma once

#include <iosfwd>
#include <string>

#include "freqctl/dispatch.hpp"
#include "freqctl/simulator.hpp"
#include "freqctl/stability.hpp"

namespace freqctl {

/// Header `t,omega_1..N,u_1..N,q_1..N,f_1..E,cost_paper`, one row per recorded sample,
/// 9 significant digits, LF line endings.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);

std::string summary_json(const RunSummary& summary, const Scenario& scenario);
std::string stability_json(const StabilityReport& report);
std::string dispatch_json(const DispatchResult& result);

}  // namespace freqctl
