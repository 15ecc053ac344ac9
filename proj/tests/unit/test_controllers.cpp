#include <algorithm>
#include <cstring>
#include <random>

#include <gtest/gtest.h>

#include "freqctl/controllers.hpp"
#include "oracles/laplacian_rates.hpp"
#include "support/seed.hpp"

using namespace freqctl;

namespace {

PowerGrid chain(const std::vector<double>& cost) {
    std::vector<NodeParams> nodes;
    for (const double c : cost) {
        nodes.push_back({1.0, 1.0, c, 0.0});
    }
    std::vector<Line> lines;
    for (std::size_t i = 1; i < cost.size(); ++i) {
        lines.push_back({i - 1, i, 1.0});
    }
    return PowerGrid(nodes, lines);
}

CommGraph chain_comm(std::size_t n, std::vector<LinkFailure> failures = {}) {
    std::vector<NodePair> links;
    for (std::size_t i = 1; i < n; ++i) {
        links.emplace_back(i - 1, i);
    }
    return CommGraph(links, std::move(failures), std::nullopt);
}

// Every node has just heard each neighbor's current C·u.
void fill_received(SystemState& s, const PowerGrid& grid, const CommGraph& comm) {
    for (std::size_t k = 0; k < comm.link_count(); ++k) {
        const auto [a, b] = comm.links()[k];
        s.last_rx[2 * k] = grid.nodes()[b].cost * s.u[static_cast<Eigen::Index>(b)];
        s.last_rx[2 * k + 1] = grid.nodes()[a].cost * s.u[static_cast<Eigen::Index>(a)];
    }
}

std::vector<bool> failed_mask(const CommGraph& comm, std::initializer_list<NodePair> down) {
    std::vector<bool> mask(comm.link_count(), false);
    for (const auto& [a, b] : down) {
        mask[*comm.find_link(a, b)] = true;
    }
    return mask;
}

Scenario toy_failed(Scheme scheme, std::vector<NodePair> down) {
    auto sc = toy_grid();
    std::vector<LinkFailure> f;
    for (const auto& p : down) {
        f.push_back({p, 0.5});
    }
    sc.comm = CommGraph(sc.comm.links(), f, std::nullopt);
    sc.scheme = scheme;
    return sc;
}

}  // namespace

TEST(Consensus, TwoNodeSubstitution) {
    const auto grid = chain({1.0, 2.0});
    const auto comm = chain_comm(2);
    auto s = SystemState::zeros(grid, comm);
    s.omega << 0.1, -0.1;
    const auto ctx = build_context(grid, comm, Scheme::Consensus, {});
    const Vector du = consensus_rate(s, grid, comm, ctx);
    EXPECT_DOUBLE_EQ(du[0], -0.1);
    EXPECT_DOUBLE_EQ(du[1], 0.05);
}

TEST(Consensus, ManifoldIsEquilibrium) {
    const auto sc = toy_grid();
    auto s = SystemState::zeros(sc.grid, sc.comm);
    s.u = 2.5 * sc.grid.cost().cwiseInverse();
    const auto ctx = build_context(sc.grid, sc.comm, Scheme::Consensus, {});
    EXPECT_LT(consensus_rate(s, sc.grid, sc.comm, ctx).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Consensus, PathLaplacianAction) {
    const auto grid = chain({1.0, 1.0, 1.0});
    const auto comm = chain_comm(3);
    auto s = SystemState::zeros(grid, comm);
    s.u << 1.0, 0.0, 0.0;
    const auto ctx = build_context(grid, comm, Scheme::Consensus, {});
    const Vector du = consensus_rate(s, grid, comm, ctx);
    EXPECT_EQ(du, (Vector(3) << -1.0, 1.0, 0.0).finished());
}

TEST(Consensus, MatchesMatrixFormWithFailedLinksDropped) {
    std::mt19937_64 rng(test::seed());
    std::normal_distribution<double> g;
    const auto sc = toy_grid();
    const auto failed = failed_mask(sc.comm, {{1, 6}, {4, 5}});
    const auto ctx = build_context(sc.grid, sc.comm, Scheme::Consensus, failed);
    std::vector<std::pair<int, int>> live;
    for (std::size_t k = 0; k < sc.comm.link_count(); ++k) {
        if (!failed[k]) {
            live.emplace_back(static_cast<int>(sc.comm.links()[k].first),
                              static_cast<int>(sc.comm.links()[k].second));
        }
    }
    for (int trial = 0; trial < 20; ++trial) {
        auto s = SystemState::zeros(sc.grid, sc.comm);
        for (Eigen::Index i = 0; i < 10; ++i) {
            s.omega[i] = g(rng);
            s.u[i] = g(rng);
        }
        const Vector expected = oracle::consensus_rates(sc.grid.cost(), s.omega, s.u, live);
        EXPECT_LT((consensus_rate(s, sc.grid, sc.comm, ctx) - expected).cwiseAbs().maxCoeff(),
                  1e-12);
    }
}

TEST(ConsensusSampled, FreshSamplesEqualContinuous) {
    const auto sc = toy_grid();
    auto s = SystemState::zeros(sc.grid, sc.comm);
    for (Eigen::Index i = 0; i < 10; ++i) {
        s.u[i] = 0.1 * static_cast<double>(i) - 0.3;
        s.omega[i] = 0.01 * static_cast<double>(i % 3);
    }
    fill_received(s, sc.grid, sc.comm);
    const auto ctx = build_context(sc.grid, sc.comm, Scheme::Consensus, {});
    auto held = ctx;
    held.held_neighbors = true;
    EXPECT_LT((consensus_sampled_rate(s, sc.grid, sc.comm, held) -
               consensus_rate(s, sc.grid, sc.comm, ctx))
                  .cwiseAbs()
                  .maxCoeff(),
              1e-15);
}

TEST(ConsensusSampled, OwnValueLiveNeighborHeld) {
    const auto grid = chain({1.0, 1.0});
    const CommGraph comm({{0, 1}}, {}, 0.5);
    auto s = SystemState::zeros(grid, comm);
    s.u << 0.5, 0.0;
    s.omega << 0.05, 0.0;
    s.last_rx = {0.2, 0.5};
    const auto ctx = build_context(grid, comm, Scheme::ConsensusSampled, {});
    const Vector du = consensus_sampled_rate(s, grid, comm, ctx);
    EXPECT_DOUBLE_EQ(du[0], -0.05 - (0.5 - 0.2));
}

TEST(ConsensusSampled, MissingValueThrows) {
    const auto grid = chain({1.0, 1.0});
    const CommGraph comm({{0, 1}}, {}, 0.5);
    const auto s = SystemState::zeros(grid, comm);
    const auto ctx = build_context(grid, comm, Scheme::ConsensusSampled, {});
    EXPECT_THROW(consensus_sampled_rate(s, grid, comm, ctx), std::invalid_argument);
}

TEST(PairFlow, Substitution) {
    const auto grid = chain({1.0, 1.0});
    const auto comm = chain_comm(2);
    const auto ctx = build_context(grid, comm, Scheme::PairFlow, {});
    auto s = SystemState::zeros(grid, comm);
    s.q << 0.5, -0.5;
    const auto r = pair_flow_rate(s, grid, ctx);
    EXPECT_DOUBLE_EQ(r.du[0], -0.5);
    EXPECT_DOUBLE_EQ(r.dq[0], -1.0);
    EXPECT_DOUBLE_EQ(r.du[1], 0.5);
    EXPECT_DOUBLE_EQ(r.dq[1], 1.0);
}

TEST(PairFlow, EqualFrequenciesZeroQIsRest) {
    const auto grid = chain({1.0, 3.0});
    const auto comm = chain_comm(2);
    const auto ctx = build_context(grid, comm, Scheme::PairFlow, {});
    auto s = SystemState::zeros(grid, comm);
    s.omega << 0.3, 0.3;
    EXPECT_EQ(pair_flow_rate(s, grid, ctx).dq.cwiseAbs().maxCoeff(), 0.0);
}

TEST(PairFlow, RequiresFlowNodes) {
    const auto grid = chain({1.0, 1.0});
    const auto comm = chain_comm(2);
    const auto ctx = build_context(grid, comm, Scheme::Consensus, {});
    EXPECT_THROW(pair_flow_rate(SystemState::zeros(grid, comm), grid, ctx), std::invalid_argument);
}

TEST(PairFlow, ListedFailureDefersEngagement) {
    const auto grid = chain({1.0, 1.0});
    const auto comm = chain_comm(2, {{{0, 1}, 2.0}});
    EXPECT_FALSE(build_context(grid, comm, Scheme::PairFlow, {}).has_flow_nodes());
    EXPECT_TRUE(build_context(grid, comm, Scheme::PairFlow, {true}).has_flow_nodes());
}

TEST(HybridSingle, PairIgnoresCommOthersStillListen) {
    const auto sc = toy_grid();
    const auto ctx = build_context(sc.grid, sc.comm, Scheme::HybridSingle,
                                   failed_mask(sc.comm, {{1, 6}}));
    ASSERT_TRUE(ctx.is_flow_node(1));
    ASSERT_TRUE(ctx.is_flow_node(6));
    auto s = SystemState::zeros(sc.grid, sc.comm);
    s.omega[1] = 0.2;
    s.q[1] = 0.3;
    const auto base = hybrid_single_failure_rate(s, sc.grid, sc.comm, ctx);
    EXPECT_DOUBLE_EQ(base.du[1], (-0.2 - 0.3) / 10.0);

    // Node 2's rate is unaffected by every other coordinate.
    auto t = s;
    t.u.setConstant(0.7);
    t.omega[0] = 1.0;
    t.omega[2] = -1.0;
    t.q[6] = 4.0;
    EXPECT_DOUBLE_EQ(hybrid_single_failure_rate(t, sc.grid, sc.comm, ctx).du[1], base.du[1]);

    // Node 1 still hears node 2 over their surviving link.
    auto v = SystemState::zeros(sc.grid, sc.comm);
    v.u[0] = 0.1;
    v.u[1] = 0.4;
    const auto r = hybrid_single_failure_rate(v, sc.grid, sc.comm, ctx);
    EXPECT_DOUBLE_EQ(r.du[0], -(10.0 * 0.1 - 10.0 * 0.4));
}

TEST(HybridSingle, EquilibriumIsRest) {
    const auto sc = toy_grid();
    const auto ctx = build_context(sc.grid, sc.comm, Scheme::HybridSingle,
                                   failed_mask(sc.comm, {{1, 6}}));
    auto s = SystemState::zeros(sc.grid, sc.comm);
    s.u = 1.7 * sc.grid.cost().cwiseInverse();
    const auto r = hybrid_single_failure_rate(s, sc.grid, sc.comm, ctx);
    EXPECT_LT(r.du.cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_EQ(r.dq.cwiseAbs().maxCoeff(), 0.0);
}

TEST(HybridSingle, NonPowerLinkFallsBackToConsensus) {
    auto sc = toy_grid();
    auto links = sc.comm.links();
    links.emplace_back(0, 4);
    sc.comm = CommGraph(links, {}, std::nullopt);
    const auto ctx = build_context(sc.grid, sc.comm, Scheme::HybridSingle,
                                   failed_mask(sc.comm, {{0, 4}}));
    EXPECT_EQ(ctx.scheme, Scheme::Consensus);
    EXPECT_FALSE(ctx.has_flow_nodes());
    EXPECT_THROW(hybrid_single_failure_rate(SystemState::zeros(sc.grid, sc.comm), sc.grid,
                                            sc.comm, ctx),
                 std::invalid_argument);
}

TEST(HybridSingle, TwoFailuresRejected) {
    const auto sc = toy_grid();
    EXPECT_THROW(build_context(sc.grid, sc.comm, Scheme::HybridSingle,
                               failed_mask(sc.comm, {{1, 6}, {0, 1}})),
                 std::invalid_argument);
}

TEST(MultiFailure, PairSubstitution) {
    const auto grid = chain({1.0, 1.0, 1.0});
    const auto comm = chain_comm(3);
    const auto ctx = build_context(grid, comm, Scheme::MultiFailure, {true, false});
    auto s = SystemState::zeros(grid, comm);
    s.omega << 0.4, 0.1, 0.0;
    s.q << 0.25, 0.0, 0.0;
    const auto r = multi_failure_rate(s, grid, comm, ctx);
    EXPECT_DOUBLE_EQ(r.dq[0], -(0.4 - 0.1) - 2.0 * 0.25);
    EXPECT_EQ(r.dq[2], 0.0);
}

TEST(MultiFailure, EmptySetIsBitIdenticalToConsensus) {
    std::mt19937_64 rng(test::seed());
    std::normal_distribution<double> g;
    const auto sc = toy_grid();
    const auto multi = build_context(sc.grid, sc.comm, Scheme::MultiFailure, {});
    const auto plain = build_context(sc.grid, sc.comm, Scheme::Consensus, {});
    ASSERT_FALSE(multi.has_flow_nodes());
    for (int trial = 0; trial < 10; ++trial) {
        auto s = SystemState::zeros(sc.grid, sc.comm);
        for (Eigen::Index i = 0; i < 10; ++i) {
            s.omega[i] = g(rng);
            s.u[i] = g(rng);
            s.q[i] = g(rng);
        }
        const Vector a = multi_failure_rate(s, sc.grid, sc.comm, multi).du;
        const Vector b = consensus_rate(s, sc.grid, sc.comm, plain);
        EXPECT_EQ(std::memcmp(a.data(), b.data(), sizeof(double) * 10), 0);
    }
}

TEST(MultiFailure, FlowSetCoversEveryLineInsideF) {
    const auto sc = toy_grid();
    const auto ctx = build_context(sc.grid, sc.comm, Scheme::MultiFailure,
                                   failed_mask(sc.comm, {{1, 2}, {2, 4}}));
    // F = {2, 3, 5}; lines (2,3), (2,5) and (3,5) all lie inside F.
    EXPECT_EQ(ctx.pair_lines, (std::vector<std::size_t>{1, 2, 5}));
}

TEST(InitArtificial, PairValuesFromLastExchange) {
    const auto grid = chain({1.0, 1.0});
    const auto comm = chain_comm(2);
    auto s = SystemState::zeros(grid, comm);
    s.u << 3.0, 1.0;
    fill_received(s, grid, comm);
    const auto ctx = build_context(grid, comm, Scheme::PairFlow, {});
    const auto init = init_artificial(s, grid, comm, ctx);
    EXPECT_EQ(init.q[0], 2.0);
    EXPECT_EQ(init.q[1], -2.0);
    EXPECT_TRUE(init.warnings.empty());
}

TEST(InitArtificial, ConsensusManifoldGivesZero) {
    const auto sc = toy_grid();
    auto s = SystemState::zeros(sc.grid, sc.comm);
    s.u = 0.8 * sc.grid.cost().cwiseInverse();
    fill_received(s, sc.grid, sc.comm);
    const auto ctx = build_context(sc.grid, sc.comm, Scheme::MultiFailure,
                                   failed_mask(sc.comm, {{0, 1}, {1, 4}}));
    EXPECT_LT(init_artificial(s, sc.grid, sc.comm, ctx).q.cwiseAbs().maxCoeff(), 1e-15);
}

TEST(InitArtificial, SumsOverFlowCoupledNeighbours) {
    const auto sc = toy_grid();
    auto s = SystemState::zeros(sc.grid, sc.comm);
    for (Eigen::Index i = 0; i < 10; ++i) {
        s.u[i] = 0.05 * static_cast<double>(i + 1);
    }
    fill_received(s, sc.grid, sc.comm);
    const auto ctx = build_context(sc.grid, sc.comm, Scheme::MultiFailure,
                                   failed_mask(sc.comm, {{0, 1}, {1, 4}}));
    const auto init = init_artificial(s, sc.grid, sc.comm, ctx);
    const auto c = sc.grid.cost();
    const double y1 = c[0] * s.u[0], y2 = c[1] * s.u[1], y5 = c[4] * s.u[4];
    EXPECT_NEAR(init.q[1], (y2 - y1) + (y2 - y5), 1e-14);
    EXPECT_NEAR(init.q[0], y1 - y2, 1e-14);
    EXPECT_NEAR(init.q[4], y5 - y2, 1e-14);
    EXPECT_EQ(init.q[2], 0.0);
}

TEST(InitArtificial, MissingValueWarnsAndZeroes) {
    const auto grid = chain({1.0, 1.0});
    const auto comm = chain_comm(2);
    auto s = SystemState::zeros(grid, comm);
    s.u << 3.0, 1.0;
    const auto ctx = build_context(grid, comm, Scheme::PairFlow, {});
    const auto init = init_artificial(s, grid, comm, ctx);
    EXPECT_EQ(init.q.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(init.warnings.size(), 2u);
}

TEST(Sequential, RoundRobin) {
    const std::vector<NodePair> es{{1, 2}, {2, 3}, {2, 4}, {4, 5}};
    EXPECT_EQ(sequential_active_link(0, es), (NodePair{1, 2}));
    EXPECT_EQ(sequential_active_link(5, es), (NodePair{2, 3}));
    const std::vector<NodePair> one{{0, 1}};
    for (std::size_t k = 0; k < 4; ++k) {
        EXPECT_EQ(sequential_active_link(k, one), (NodePair{0, 1}));
    }
    EXPECT_THROW(sequential_active_link(0, std::vector<NodePair>{}), std::invalid_argument);
}

TEST(Sequential, SharedLinksSortedAndSkipFailed) {
    auto sc = toy_grid();
    auto links = sc.comm.links();
    std::reverse(links.begin(), links.end());
    links.emplace_back(0, 4);  // comm-only link
    sc.comm = CommGraph(links, {}, 1.0);
    auto shared = shared_links(sc.grid, sc.comm);
    EXPECT_EQ(shared.size(), 10u);
    EXPECT_TRUE(std::is_sorted(shared.begin(), shared.end()));
    shared = shared_links(sc.grid, sc.comm, failed_mask(sc.comm, {{0, 1}}));
    EXPECT_EQ(shared.front(), (NodePair{1, 2}));
}

TEST(Sequential, ContextUsesHeldNeighboursAndActivePair) {
    auto sc = toy_grid();
    sc.comm = CommGraph(sc.comm.links(), {}, 1.0);
    const auto ctx = build_context(sc.grid, sc.comm, Scheme::Sequential, {}, NodePair{2, 1});
    EXPECT_TRUE(ctx.held_neighbors);
    EXPECT_EQ(ctx.active_link, (NodePair{1, 2}));
    EXPECT_TRUE(ctx.is_flow_node(1));
    EXPECT_TRUE(ctx.is_flow_node(2));
    EXPECT_EQ(ctx.pair_lines.size(), 1u);
}

TEST(Context, FinalContextAppliesEveryFailure) {
    const auto ctx = final_context(toy_failed(Scheme::MultiFailure, {{0, 1}, {1, 6}}));
    EXPECT_FALSE(ctx.link_live(0));
    EXPECT_FALSE(ctx.link_live(3));
    EXPECT_TRUE(ctx.link_live(1));
    EXPECT_TRUE(ctx.is_flow_node(0));
    EXPECT_TRUE(ctx.is_flow_node(6));
}
