#pragma once

#include "freqctl/grid_model.hpp"

namespace freqctl {

/// Steady-state optimal allocation of adjustable power.
///
/// Two cost figures are kept: `cost_paper` is Σ C_j u_j² (the figure quoted for the
/// example grid), `cost_quadratic` is the ½-weighted objective Σ ½ C_j u_j².
struct DispatchResult {
    Vector u_star;
    double lambda = 0.0;  ///< common marginal value C_j u_j*
    double cost_paper = 0.0;
    double cost_quadratic = 0.0;
};

struct CostPair {
    double paper = 0.0;
    double quadratic = 0.0;
};

/// Closed-form minimizer of Σ ½ C_j u_j² subject to Σ u_j = -Σ p*_j.
/// Throws std::invalid_argument on an empty grid, a length mismatch, or a nonpositive cost.
DispatchResult optimal_dispatch(const PowerGrid& grid, const Vector& p_star);

/// Throws std::invalid_argument when u does not have one entry per node.
CostPair cost_of(const PowerGrid& grid, const Vector& u);

/// Σ C_j u_j², without length checks. Used on hot paths.
double paper_cost(const Vector& cost, const Vector& u);

}  // namespace freqctl
