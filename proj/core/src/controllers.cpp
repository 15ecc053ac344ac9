#include "freqctl/controllers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace freqctl {

bool ControlContext::has_flow_nodes() const {
    return std::find(flow_nodes.begin(), flow_nodes.end(), true) != flow_nodes.end();
}

namespace {

void add_pair(ControlContext& ctx, std::size_t line, const Line& l) {
    ctx.flow_nodes[l.from] = true;
    ctx.flow_nodes[l.to] = true;
    ctx.pair_lines.push_back(line);
}

// Shared kernel of every law. Nodes outside F follow consensus over live links (held or
// instantaneous neighbor values); nodes in F follow the flow-based law.
void rates_impl(const SystemState& s, const PowerGrid& grid, const CommGraph& comm,
                const ControlContext& ctx, bool held, bool use_flow, Vector& du, Vector& dq) {
    const auto& nodes = grid.nodes();
    const auto n = nodes.size();
    du.setZero();
    dq.setZero();
    auto flow_node = [&](std::size_t i) { return use_flow && ctx.is_flow_node(i); };

    for (std::size_t i = 0; i < n; ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        du[ii] = flow_node(i) ? (-s.omega[ii] - s.q[ii]) / nodes[i].cost
                              : -s.omega[ii] / nodes[i].cost;
    }
    const auto& links = comm.links();
    for (std::size_t k = 0; k < links.size(); ++k) {
        if (!ctx.link_live(k)) {
            continue;
        }
        const auto [a, b] = links[k];
        const auto ia = static_cast<Eigen::Index>(a);
        const auto ib = static_cast<Eigen::Index>(b);
        const double ya = nodes[a].cost * s.u[ia];
        const double yb = nodes[b].cost * s.u[ib];
        double heard_by_a = yb;
        double heard_by_b = ya;
        if (held) {
            heard_by_a = s.last_rx[2 * k];
            heard_by_b = s.last_rx[2 * k + 1];
            if (std::isnan(heard_by_a) || std::isnan(heard_by_b)) {
                throw std::invalid_argument("held consensus: live link has no received value");
            }
        }
        if (!flow_node(a)) {
            du[ia] -= ya - heard_by_a;
        }
        if (!flow_node(b)) {
            du[ib] -= yb - heard_by_b;
        }
    }
    if (!use_flow) {
        return;
    }
    for (const auto e : ctx.pair_lines) {
        const auto& l = grid.lines()[e];
        const auto ia = static_cast<Eigen::Index>(l.from);
        const auto ib = static_cast<Eigen::Index>(l.to);
        // ḟ/B = ω_a − ω_b is observable at both ends of the line.
        const double slip = s.omega[ia] - s.omega[ib];
        dq[ia] -= slip;
        dq[ib] += slip;
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (flow_node(i)) {
            const auto ii = static_cast<Eigen::Index>(i);
            dq[ii] -= 2.0 * s.q[ii];
        }
    }
}

ControlRates make_rates(std::size_t n) {
    return {Vector::Zero(static_cast<Eigen::Index>(n)), Vector::Zero(static_cast<Eigen::Index>(n))};
}

void require_pair_coverage(const PowerGrid& grid, const ControlContext& ctx, const char* who) {
    if (!ctx.has_flow_nodes()) {
        throw std::invalid_argument(std::string(who) + ": no flow-controlled nodes");
    }
    for (std::size_t i = 0; i < grid.node_count(); ++i) {
        if (!ctx.is_flow_node(i)) {
            continue;
        }
        const bool covered = std::any_of(ctx.pair_lines.begin(), ctx.pair_lines.end(),
                                         [&](std::size_t e) {
                                             const auto& l = grid.lines()[e];
                                             return l.from == i || l.to == i;
                                         });
        if (!covered) {
            throw std::invalid_argument(std::string(who) + ": node " + std::to_string(i + 1) +
                                        " is not an endpoint of any flow-coupled line");
        }
    }
}

}  // namespace

ControlContext build_context(const PowerGrid& grid, const CommGraph& comm, Scheme scheme,
                             const std::vector<bool>& failed, std::optional<NodePair> active_link) {
    ControlContext ctx;
    ctx.scheme = scheme;
    ctx.live_links.assign(comm.link_count(), true);
    for (std::size_t k = 0; k < failed.size() && k < comm.link_count(); ++k) {
        ctx.live_links[k] = !failed[k];
    }
    ctx.flow_nodes.assign(grid.node_count(), false);

    std::vector<std::size_t> down;
    for (std::size_t k = 0; k < comm.link_count(); ++k) {
        if (!ctx.live_links[k]) {
            down.push_back(k);
        }
    }

    switch (scheme) {
        case Scheme::Consensus:
            break;
        case Scheme::ConsensusSampled:
            ctx.held_neighbors = true;
            break;
        case Scheme::PairFlow: {
            if (grid.line_count() == 0) {
                throw std::invalid_argument("PAIR_FLOW: grid has no line");
            }
            const auto& l = grid.lines()[0];
            const auto link = comm.find_link(l.from, l.to);
            // Without a listed failure (or without a link at all) the flow law runs from the start.
            const bool engaged = comm.failures().empty() || !link || !ctx.live_links[*link];
            if (engaged) {
                add_pair(ctx, 0, l);
            }
            break;
        }
        case Scheme::HybridSingle: {
            if (down.size() > 1) {
                throw std::invalid_argument("HYBRID_SINGLE: more than one failed link");
            }
            if (down.size() == 1) {
                const auto [a, b] = comm.links()[down.front()];
                if (const auto line = grid.find_line(a, b)) {
                    add_pair(ctx, *line, grid.lines()[*line]);
                } else {
                    ctx.scheme = Scheme::Consensus;
                }
            }
            break;
        }
        case Scheme::MultiFailure:
            for (const auto k : down) {
                const auto [a, b] = comm.links()[k];
                if (grid.find_line(a, b)) {
                    ctx.flow_nodes[a] = true;
                    ctx.flow_nodes[b] = true;
                }
            }
            // Nodes in F drop comm entirely, so every power line inside F is flow-coupled.
            for (std::size_t e = 0; e < grid.line_count(); ++e) {
                const auto& l = grid.lines()[e];
                if (ctx.flow_nodes[l.from] && ctx.flow_nodes[l.to]) {
                    ctx.pair_lines.push_back(e);
                }
            }
            break;
        case Scheme::Sequential:
            ctx.held_neighbors = true;
            if (active_link) {
                const auto line = grid.find_line(active_link->first, active_link->second);
                if (!line) {
                    throw std::invalid_argument("SEQUENTIAL: active link is not a power line");
                }
                ctx.active_link = make_pair_sorted(active_link->first, active_link->second);
                add_pair(ctx, *line, grid.lines()[*line]);
            }
            break;
    }
    return ctx;
}

ControlContext final_context(const Scenario& sc) {
    std::vector<bool> failed(sc.comm.link_count(), false);
    for (const auto& f : sc.comm.failures()) {
        if (const auto k = sc.comm.find_link(f.link.first, f.link.second)) {
            failed[*k] = true;
        }
    }
    std::optional<NodePair> active;
    if (sc.scheme == Scheme::Sequential) {
        const auto shared = shared_links(sc.grid, sc.comm, failed);
        if (!shared.empty()) {
            active = shared.front();
        }
    }
    return build_context(sc.grid, sc.comm, sc.scheme, failed, active);
}

Vector consensus_rate(const SystemState& state, const PowerGrid& grid, const CommGraph& comm,
                      const ControlContext& ctx) {
    auto r = make_rates(grid.node_count());
    rates_impl(state, grid, comm, ctx, false, false, r.du, r.dq);
    return r.du;
}

Vector consensus_sampled_rate(const SystemState& state, const PowerGrid& grid,
                              const CommGraph& comm, const ControlContext& ctx) {
    auto r = make_rates(grid.node_count());
    rates_impl(state, grid, comm, ctx, true, false, r.du, r.dq);
    return r.du;
}

ControlRates pair_flow_rate(const SystemState& state, const PowerGrid& grid,
                            const ControlContext& ctx) {
    require_pair_coverage(grid, ctx, "pair_flow_rate");
    auto r = make_rates(grid.node_count());
    for (std::size_t i = 0; i < grid.node_count(); ++i) {
        if (!ctx.is_flow_node(i)) {
            continue;
        }
        const auto ii = static_cast<Eigen::Index>(i);
        r.du[ii] = (-state.omega[ii] - state.q[ii]) / grid.nodes()[i].cost;
        r.dq[ii] = -2.0 * state.q[ii];
    }
    for (const auto e : ctx.pair_lines) {
        const auto& l = grid.lines()[e];
        const auto ia = static_cast<Eigen::Index>(l.from);
        const auto ib = static_cast<Eigen::Index>(l.to);
        const double slip = state.omega[ia] - state.omega[ib];
        r.dq[ia] -= slip;
        r.dq[ib] += slip;
    }
    return r;
}

ControlRates hybrid_single_failure_rate(const SystemState& state, const PowerGrid& grid,
                                        const CommGraph& comm, const ControlContext& ctx) {
    require_pair_coverage(grid, ctx, "hybrid_single_failure_rate");
    const auto members = std::count(ctx.flow_nodes.begin(), ctx.flow_nodes.end(), true);
    if (ctx.pair_lines.size() != 1 || members != 2) {
        throw std::invalid_argument(
            "hybrid_single_failure_rate: expected exactly one power-adjacent failed pair");
    }
    auto r = make_rates(grid.node_count());
    rates_impl(state, grid, comm, ctx, false, true, r.du, r.dq);
    return r;
}

ControlRates multi_failure_rate(const SystemState& state, const PowerGrid& grid,
                                const CommGraph& comm, const ControlContext& ctx) {
    auto r = make_rates(grid.node_count());
    rates_impl(state, grid, comm, ctx, false, true, r.du, r.dq);
    return r;
}

ControlRates control_rate(const SystemState& state, const PowerGrid& grid, const CommGraph& comm,
                          const ControlContext& ctx) {
    auto r = make_rates(grid.node_count());
    control_rate_into(state, grid, comm, ctx, r.du, r.dq);
    return r;
}

void control_rate_into(const SystemState& state, const PowerGrid& grid, const CommGraph& comm,
                       const ControlContext& ctx, Vector& du, Vector& dq) {
    rates_impl(state, grid, comm, ctx, ctx.held_neighbors, true, du, dq);
}

ArtificialInit init_artificial(const SystemState& state, const PowerGrid& grid,
                               const CommGraph& comm, const ControlContext& ctx) {
    const auto n = grid.node_count();
    ArtificialInit out{Vector::Zero(static_cast<Eigen::Index>(n)), {}};
    std::vector<bool> missing(n, false);

    // Value node `at` last heard from node `from`, if any.
    auto heard = [&](std::size_t at, std::size_t from) -> std::optional<double> {
        const auto k = comm.find_link(at, from);
        if (!k || state.last_rx.size() < 2 * comm.link_count()) {
            return std::nullopt;
        }
        const double v = comm.links()[*k].first == at ? state.last_rx[2 * *k]
                                                      : state.last_rx[2 * *k + 1];
        if (std::isnan(v)) {
            return std::nullopt;
        }
        return v;
    };

    for (const auto e : ctx.pair_lines) {
        const auto& l = grid.lines()[e];
        for (const auto& [self, other] : {NodePair{l.from, l.to}, NodePair{l.to, l.from}}) {
            const auto value = heard(self, other);
            if (!value) {
                missing[self] = true;
                continue;
            }
            const auto is = static_cast<Eigen::Index>(self);
            out.q[is] += grid.nodes()[self].cost * state.u[is] - *value;
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (missing[i]) {
            out.q[static_cast<Eigen::Index>(i)] = 0.0;
            out.warnings.push_back("node " + std::to_string(i + 1) +
                                   ": no value received before the switch; q starts at 0");
        }
    }
    return out;
}

std::vector<NodePair> shared_links(const PowerGrid& grid, const CommGraph& comm,
                                   const std::vector<bool>& failed) {
    std::vector<NodePair> out;
    for (std::size_t k = 0; k < comm.link_count(); ++k) {
        if (k < failed.size() && failed[k]) {
            continue;
        }
        const auto [a, b] = comm.links()[k];
        if (grid.find_line(a, b)) {
            out.push_back(make_pair_sorted(a, b));
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

NodePair sequential_active_link(std::size_t sampling_index, std::span<const NodePair> shared) {
    if (shared.empty()) {
        throw std::invalid_argument("sequential_active_link: no shared links");
    }
    return shared[sampling_index % shared.size()];
}

}  // namespace freqctl
