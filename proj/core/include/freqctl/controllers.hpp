#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "freqctl/grid_model.hpp"

namespace freqctl {

/// Frozen control configuration between two events of a run.
///
/// `flow_nodes` is the set F of nodes that replace lost messages with line-flow
/// observations; `pair_lines` are the power lines whose flow feeds their artificial
/// variables. Empty `live_links` means every comm link is up.
struct ControlContext {
    Scheme scheme = Scheme::Consensus;
    std::vector<bool> live_links;
    std::vector<bool> flow_nodes;
    std::vector<std::size_t> pair_lines;
    std::optional<NodePair> active_link;
    bool held_neighbors = false;  ///< neighbor terms read the zero-order-held last_rx values

    bool link_live(std::size_t k) const { return live_links.empty() || live_links[k]; }
    bool is_flow_node(std::size_t i) const { return !flow_nodes.empty() && flow_nodes[i]; }
    bool has_flow_nodes() const;
};

/// Per-node control derivatives. `dq` is zero outside F.
struct ControlRates {
    Vector du;
    Vector dq;
};

struct ArtificialInit {
    Vector q;
    std::vector<std::string> warnings;
};

/// Context for `scheme` given which comm links are down (`failed[k]` for comm link k) and,
/// for the sequential scheme, the currently active shared link.
///
/// A single-failure request whose failed link is not a power line falls back to plain
/// consensus on the surviving links; the returned context then carries Scheme::Consensus.
ControlContext build_context(const PowerGrid& grid, const CommGraph& comm, Scheme scheme,
                             const std::vector<bool>& failed,
                             std::optional<NodePair> active_link = std::nullopt);

/// Context after every listed failure has occurred (the long-run configuration).
ControlContext final_context(const Scenario& scenario);

/// Consensus on instantaneous neighbor values over the live links, for every node.
Vector consensus_rate(const SystemState& state, const PowerGrid& grid, const CommGraph& comm,
                      const ControlContext& ctx);

/// As consensus_rate, but neighbor values come from `state.last_rx`.
/// Throws std::invalid_argument if a live link has never delivered a value.
Vector consensus_sampled_rate(const SystemState& state, const PowerGrid& grid,
                              const CommGraph& comm, const ControlContext& ctx);

/// Flow-based law for the nodes in F only; entries outside F are zero.
/// Throws std::invalid_argument if F is empty or a node of F touches no pair line.
ControlRates pair_flow_rate(const SystemState& state, const PowerGrid& grid,
                            const ControlContext& ctx);

/// One failed, power-adjacent pair runs the flow law; every other node stays on
/// consensus over the surviving links, still listening to the pair.
/// Throws std::invalid_argument unless F is exactly the endpoints of one pair line.
ControlRates hybrid_single_failure_rate(const SystemState& state, const PowerGrid& grid,
                                        const CommGraph& comm, const ControlContext& ctx);

/// Generalization to any set F. With F empty this is exactly consensus_rate.
ControlRates multi_failure_rate(const SystemState& state, const PowerGrid& grid,
                                const CommGraph& comm, const ControlContext& ctx);

/// Rates for whichever law `ctx` describes (held or instantaneous neighbors, any F).
ControlRates control_rate(const SystemState& state, const PowerGrid& grid, const CommGraph& comm,
                          const ControlContext& ctx);

/// In-place variant of control_rate; `du` and `dq` must already be sized to the node count.
void control_rate_into(const SystemState& state, const PowerGrid& grid, const CommGraph& comm,
                       const ControlContext& ctx, Vector& du, Vector& dq);

/// Artificial variables at the instant the flow law takes over:
/// q_i = Σ over pair lines (i,j) of C_i u_i(t0) − C_j u_j(t0), where node i uses the last
/// value it received from j. A node missing any such value starts at q_i = 0 and a
/// warning is recorded.
ArtificialInit init_artificial(const SystemState& state, const PowerGrid& grid,
                               const CommGraph& comm, const ControlContext& ctx);

/// Links shared by the power grid and the live comm graph, in ascending pair order.
std::vector<NodePair> shared_links(const PowerGrid& grid, const CommGraph& comm,
                                   const std::vector<bool>& failed = {});

/// Round-robin selection: entry K mod |shared|. Throws std::invalid_argument if empty.
NodePair sequential_active_link(std::size_t sampling_index, std::span<const NodePair> shared);

}  // namespace freqctl
