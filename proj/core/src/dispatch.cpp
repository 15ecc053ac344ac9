#include "freqctl/dispatch.hpp"

#include <stdexcept>

namespace freqctl {

DispatchResult optimal_dispatch(const PowerGrid& grid, const Vector& p_star) {
    if (grid.node_count() == 0) {
        throw std::invalid_argument("optimal_dispatch: grid has no nodes");
    }
    if (static_cast<std::size_t>(p_star.size()) != grid.node_count()) {
        throw std::invalid_argument("optimal_dispatch: p_star length does not match node count");
    }
    const Vector c = grid.cost();
    if ((c.array() <= 0.0).any()) {
        throw std::invalid_argument("optimal_dispatch: costs must be positive");
    }
    DispatchResult r;
    r.lambda = -p_star.sum() / c.cwiseInverse().sum();
    r.u_star = r.lambda * c.cwiseInverse();
    const auto costs = cost_of(grid, r.u_star);
    r.cost_paper = costs.paper;
    r.cost_quadratic = costs.quadratic;
    return r;
}

CostPair cost_of(const PowerGrid& grid, const Vector& u) {
    if (static_cast<std::size_t>(u.size()) != grid.node_count()) {
        throw std::invalid_argument("cost_of: u length does not match node count");
    }
    const double paper = paper_cost(grid.cost(), u);
    return {paper, 0.5 * paper};
}

double paper_cost(const Vector& cost, const Vector& u) {
    return (cost.array() * u.array().square()).sum();
}

}  // namespace freqctl
