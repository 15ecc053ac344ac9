#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "freqctl/grid_model.hpp"

namespace freqctl::repro {

struct Case {
    std::string name;
    Scenario scenario;
    std::optional<double> paper_value;
    std::string note;
};

struct Row {
    std::string experiment;
    Case spec;
    double steady_cost = 0.0;
    double optimal_cost = 0.0;
    std::optional<double> t_star;
    std::optional<double> first_crossing;
};

inline constexpr double kFailureTime = 0.5;
inline const std::string kReconstructed = "reference (reconstructed topology)";

std::vector<std::string_view> experiments();

/// Scenario set for an experiment on the bundled grid. `horizon` overrides the
/// per-experiment default when positive. Throws std::invalid_argument for an unknown name.
std::vector<Case> cases(std::string_view experiment, double horizon = 0.0);

/// Runs every case concurrently; rows come back in case order.
std::vector<Row> run(std::string_view experiment, double horizon = 0.0);

void write_csv(std::ostream& os, const std::vector<Row>& rows);

/// Toy scenario with the given comm links failed at kFailureTime.
Scenario with_failures(Scenario base, Scheme scheme, const std::vector<NodePair>& failed);

}  // namespace freqctl::repro
