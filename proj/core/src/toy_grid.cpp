#include <array>
#include <cmath>

#include "freqctl/grid_model.hpp"

namespace freqctl {
namespace {

// Ten-node example system. Node data are published; the line list is a
// reconstruction (only which pairs must be adjacent is known), numbered in
// lexicographic order so that reactance k belongs to line k.
constexpr std::array<double, 10> kInertia{0.01, 0.02, 0.01, 0.1, 0.05, 0.8, 0.05, 1.0, 0.1, 0.01};
constexpr std::array<double, 10> kInitialPower{1, 5, -2, 6, -5, -10, -4, 8, 5, -4};
constexpr std::array<double, 10> kCost{10, 10, 100, 100, 5, 10, 7, 9, 5, 10};
constexpr double kDroopPerPower = 1.0 / 3.0;

struct LineRecord {
    std::size_t from;  // 1-based
    std::size_t to;
    double reactance;
};

constexpr std::array<LineRecord, 10> kLines{{
    {1, 2, 1.0},
    {2, 3, 2.0},
    {2, 5, 3.0},
    {2, 7, 1.0},
    {3, 4, 5.0},
    {3, 5, 4.0},
    {5, 6, 6.0},
    {6, 8, 1.0},
    {7, 9, 9.0},
    {9, 10, 1.0},
}};

constexpr std::size_t kDisturbedNode = 3;  // 1-based
constexpr double kDisturbance = -5.0;
constexpr double kDisturbanceTime = 1.0;

}  // namespace

Scenario toy_grid() {
    std::vector<NodeParams> nodes;
    nodes.reserve(kInertia.size());
    for (std::size_t i = 0; i < kInertia.size(); ++i) {
        nodes.push_back({kInertia[i], std::abs(kInitialPower[i]) * kDroopPerPower, kCost[i],
                         kInitialPower[i]});
    }
    std::vector<Line> lines;
    std::vector<NodePair> links;
    for (const auto& rec : kLines) {
        lines.push_back({rec.from - 1, rec.to - 1, 1.0 / rec.reactance});
        links.emplace_back(rec.from - 1, rec.to - 1);
    }

    Scenario sc;
    sc.grid = PowerGrid(std::move(nodes), std::move(lines));
    sc.comm = CommGraph(std::move(links), {}, std::nullopt);
    sc.disturbances = {{kDisturbanceTime, kDisturbedNode - 1, kDisturbance}};
    sc.scheme = Scheme::Consensus;
    sc.horizon = 1000.0;
    sc.dt = 1e-3;
    sc.record_stride = 100;
    return sc;
}

}  // namespace freqctl
