#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace freqctl {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Unordered node pair, stored with first < second. Indices are 0-based.
using NodePair = std::pair<std::size_t, std::size_t>;

inline NodePair make_pair_sorted(std::size_t a, std::size_t b) {
    return a < b ? NodePair{a, b} : NodePair{b, a};
}

/// Per-node physical and economic parameters (per-unit).
struct NodeParams {
    double inertia = 0.0;      ///< M_j, p.u.·s²
    double droop = 0.0;        ///< D_j, p.u./Hz
    double cost = 0.0;         ///< C_j, marginal-cost coefficient
    double fixed_power = 0.0;  ///< unadjustable injection; generation positive, load negative

    bool operator==(const NodeParams&) const = default;
};

/// A power line oriented from -> to. Flow on the line is signed relative to that orientation.
struct Line {
    std::size_t from = 0;
    std::size_t to = 0;
    double susceptance = 0.0;

    bool operator==(const Line&) const = default;
};

/// Physical grid: nodes plus susceptance-weighted lines.
///
/// Construction never throws on bad data; use validate() on the owning Scenario to
/// obtain the list of violations. Accessors assume a validated grid.
class PowerGrid {
public:
    PowerGrid() = default;
    PowerGrid(std::vector<NodeParams> nodes, std::vector<Line> lines);

    const std::vector<NodeParams>& nodes() const { return nodes_; }
    const std::vector<Line>& lines() const { return lines_; }
    std::size_t node_count() const { return nodes_.size(); }
    std::size_t line_count() const { return lines_.size(); }

    /// Index of the line joining a and b (either orientation), if any.
    std::optional<std::size_t> find_line(std::size_t a, std::size_t b) const;

    Vector inertia() const;
    Vector droop() const;
    Vector cost() const;
    Vector fixed_power() const;

    /// Node-line incidence A_p (N x E): +1 at `from`, -1 at `to`.
    Matrix incidence() const;
    /// Susceptance-weighted Laplacian A_p B A_pᵀ.
    Matrix weighted_laplacian() const;
    bool connected() const;

    bool operator==(const PowerGrid&) const = default;

private:
    std::vector<NodeParams> nodes_;
    std::vector<Line> lines_;
};

struct LinkFailure {
    NodePair link;
    double time = 0.0;

    bool operator==(const LinkFailure&) const = default;
};

/// Communication overlay. A missing message interval means continuous exchange.
class CommGraph {
public:
    CommGraph() = default;
    CommGraph(std::vector<NodePair> links, std::vector<LinkFailure> failures,
              std::optional<double> message_interval);

    const std::vector<NodePair>& links() const { return links_; }
    const std::vector<LinkFailure>& failures() const { return failures_; }
    const std::optional<double>& message_interval() const { return message_interval_; }
    bool continuous() const { return !message_interval_.has_value(); }
    std::size_t link_count() const { return links_.size(); }

    std::optional<std::size_t> find_link(std::size_t a, std::size_t b) const;

    /// Unweighted Laplacian over the links flagged live (all links when `live` is empty).
    Matrix laplacian(std::size_t node_count, const std::vector<bool>& live = {}) const;

    bool operator==(const CommGraph&) const = default;

private:
    std::vector<NodePair> links_;
    std::vector<LinkFailure> failures_;
    std::optional<double> message_interval_;
};

struct DisturbanceEvent {
    double time = 0.0;
    std::size_t node = 0;
    double delta_p = 0.0;

    bool operator==(const DisturbanceEvent&) const = default;
};

enum class Scheme {
    Consensus,
    ConsensusSampled,
    PairFlow,
    HybridSingle,
    MultiFailure,
    Sequential,
};

std::string_view to_string(Scheme scheme);
std::optional<Scheme> parse_scheme(std::string_view name);

/// Everything needed for one closed-loop run.
struct Scenario {
    PowerGrid grid;
    CommGraph comm;
    std::vector<DisturbanceEvent> disturbances;
    Scheme scheme = Scheme::Consensus;
    double horizon = 200.0;
    double dt = 1e-3;
    std::size_t record_stride = 100;

    /// Fixed injections once every disturbance has been applied (the steady p*).
    Vector steady_injection() const;

    bool operator==(const Scenario&) const = default;
};

/// Closed-loop state. `q` is carried for every node and is zero where no flow-based law acts.
///
/// `last_rx` holds, per directed communication link, the most recently received C_l·u_l:
/// entry 2k is what `links()[k].first` heard from `.second`, entry 2k+1 the reverse.
/// NaN marks a value that has never been received.
struct SystemState {
    double t = 0.0;
    Vector omega;
    Vector flow;
    Vector u;
    Vector q;
    std::vector<double> last_rx;

    static SystemState zeros(const PowerGrid& grid, const CommGraph& comm);
    bool all_finite() const;
};

/// Every invariant violation as a readable message; empty iff the scenario is valid.
std::vector<std::string> validate(const Scenario& scenario);

/// The bundled ten-node example grid with a load step at node 3.
Scenario toy_grid();

}  // namespace freqctl
