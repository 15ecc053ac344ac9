#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "freqctl/controllers.hpp"
#include "freqctl/grid_model.hpp"

namespace freqctl {

using Complex = std::complex<double>;

/// Closed-loop state matrix over the ordering [ω (N), f (E), u (N), q (|F|)], where the q
/// block lists the flow-controlled nodes in ascending order.
struct StateMatrix {
    Matrix a;
    std::vector<std::string> labels;
    std::vector<std::size_t> q_nodes;
    std::size_t node_count = 0;
    std::size_t line_count = 0;

    /// Pack a SystemState into the ordering above (q entries outside F are dropped).
    Vector pack(const SystemState& state) const;
};

struct Spectrum {
    std::vector<Complex> eigenvalues;
    std::size_t structural_zero_count = 0;
    /// Max real part over eigenvalues that are not structural zeros; -inf if none remain.
    double spectral_abscissa_excl_zeros = 0.0;
};

/// Outcome of one sufficient condition: `holds` iff lhs > rhs (with the documented margins).
struct ConditionVerdict {
    std::string name;
    bool holds = false;
    double lhs = 0.0;
    double rhs = 0.0;
};

struct IdentityCheck {
    std::string form;  ///< "two_node" or "multi_node"
    double max_relative_residual = 0.0;
    double sign = 1.0;      ///< global sign calibrated at the first sample
    bool consistent = false;  ///< residual within kIdentityTolerance
};

/// The two sides of the characteristic-polynomial factorization at one point:
/// det(A − λI) and the factored form before sign calibration.
struct CharacteristicSides {
    Complex direct;
    Complex factored;
};

struct StabilityReport {
    Spectrum spectrum;
    std::vector<ConditionVerdict> sufficient;
    std::optional<IdentityCheck> identity;
    std::size_t state_dimension = 0;
};

inline constexpr double kStructuralZeroTolerance = 1e-8;
inline constexpr double kDefinitenessMargin = 1e-9;
inline constexpr double kIdentityTolerance = 1e-8;

/// Exact state matrix of the linear closed loop, built column by column from derivative()
/// at unit basis states with zero injection. Sampled and sequential schemes are not
/// time-invariant and are rejected with std::invalid_argument.
StateMatrix assemble_state_matrix(const PowerGrid& grid, const CommGraph& comm,
                                  const ControlContext& ctx);

/// Full eigendecomposition; |λ| ≤ 1e-8 counts as a structural zero.
/// Throws std::runtime_error if the eigensolver does not converge.
Spectrum spectrum(const Matrix& a);

/// Two-node sufficient conditions, in order: inertia positive definite, damping block
/// positive definite, stiffness block positive definite, coupling margin
/// λmin(stiffness)·λmin(damping) > 4·B·max(M).
/// `inertia`, `droop`, `cost` are the diagonals; `lc` is the 2×2 Laplacian coupling the pair.
std::vector<ConditionVerdict> check_sufficient_two_node(const Vector& inertia,
                                                        const Vector& droop, const Vector& cost,
                                                        double susceptance, const Matrix& lc);

/// Multi-node counterpart with the modified Laplacian L* (see build_lc_star). Non-symmetric
/// products are judged through their symmetric parts; a fifth verdict repeats the coupling
/// margin using real parts of the raw matrices' eigenvalues.
std::vector<ConditionVerdict> check_sufficient_multi_node(const Vector& inertia,
                                                          const Vector& droop, const Vector& cost,
                                                          const Matrix& lc_star,
                                                          const Matrix& weighted_laplacian);

/// Modified comm Laplacian for one failed, power-adjacent pair, in original node order:
/// rows of nodes outside the pair are the rows of the post-failure `lc` (all columns); the
/// pair rows are [[1,−1],[−1,1]]·diag(1/C_i, 1/C_j) on the pair columns and zero elsewhere.
/// Throws std::invalid_argument if the pair is not joined by a power line.
Matrix build_lc_star(const Matrix& lc, const Vector& cost, NodePair failed_pair,
                     const PowerGrid& grid);

/// Evaluate both sides of the factorization at λ without exclusions. The two-node form
/// applies to a PAIR_FLOW context on a two-node grid, the multi-node form to a
/// HYBRID_SINGLE context with its pair engaged. Throws std::invalid_argument otherwise.
CharacteristicSides characteristic_sides(const PowerGrid& grid, const CommGraph& comm,
                                         const ControlContext& ctx, Complex lambda);

/// Max relative residual of the factorization over `samples` after calibrating one global
/// sign at the first sample. Throws std::invalid_argument for a sample within 1e-6 of 0,
/// −2, or an eigenvalue of −L*C (−L_c for the two-node form).
IdentityCheck characteristic_identity_check(const PowerGrid& grid, const CommGraph& comm,
                                            const ControlContext& ctx,
                                            std::span<const Complex> samples);

/// Quadratic-form coefficients a0..a3 of xᵀH(λ)x for the two-node system, symmetric parts.
std::array<double, 4> two_node_cubic_coefficients(const Vector& x, const Vector& inertia,
                                                  const Vector& droop, const Vector& cost,
                                                  double susceptance, const Matrix& lc);

/// Routh–Hurwitz test for a0 + a1 λ + a2 λ² + a3 λ³: all a_i > 0 and a0·a3 < a1·a2.
bool cubic_is_hurwitz(const std::array<double, 4>& a);

/// Spectrum, sufficient conditions and (where a form applies) the factorization check for
/// the long-run configuration of a scenario. Sample points are drawn from `seed`.
StabilityReport analyze(const Scenario& scenario, std::uint64_t seed = 7);

}  // namespace freqctl
