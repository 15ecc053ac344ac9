#include "freqctl/stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "freqctl/simulator.hpp"

namespace freqctl {

namespace {

using ComplexMatrix = Eigen::MatrixXcd;

Matrix sym(const Matrix& m) { return 0.5 * (m + m.transpose()); }

double min_eig_sym(const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(sym(m), Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) {
        throw std::runtime_error("symmetric eigensolver failed");
    }
    return es.eigenvalues().minCoeff();
}

double max_eig_sym(const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(sym(m), Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) {
        throw std::runtime_error("symmetric eigensolver failed");
    }
    return es.eigenvalues().maxCoeff();
}

Eigen::VectorXcd raw_eigenvalues(const Matrix& m) {
    Eigen::EigenSolver<Matrix> es(m, false);
    if (es.info() != Eigen::Success) {
        throw std::runtime_error("eigensolver failed");
    }
    return es.eigenvalues();
}

double min_real_eig(const Matrix& m) { return raw_eigenvalues(m).real().minCoeff(); }
double max_real_eig(const Matrix& m) { return raw_eigenvalues(m).real().maxCoeff(); }

ConditionVerdict positive_definite(std::string name, const Matrix& m) {
    const double lhs = min_eig_sym(m);
    return {std::move(name), lhs > kDefinitenessMargin, lhs, 0.0};
}

ConditionVerdict strictly_greater(std::string name, double lhs, double rhs) {
    return {std::move(name), lhs > rhs + 1e-9 * std::abs(rhs), lhs, rhs};
}

void check_diagonals(const Vector& inertia, const Vector& droop, const Vector& cost,
                     Eigen::Index n, const char* who) {
    if (inertia.size() != n || droop.size() != n || cost.size() != n) {
        throw std::invalid_argument(std::string(who) + ": parameter length mismatch");
    }
    if ((cost.array() <= 0.0).any()) {
        throw std::invalid_argument(std::string(who) + ": costs must be positive");
    }
}

Matrix pair_laplacian() {
    Matrix lc(2, 2);
    lc << 1.0, -1.0, -1.0, 1.0;
    return lc;
}

enum class Form { TwoNode, MultiNode };

struct FormData {
    Form form;
    Matrix inertia, droop, cost_inv, lpb;
    Matrix k;  // L_c C (two-node) or L*C (multi-node), pre-multiplied into H
    Matrix lc_for_exclusion;
};

FormData form_data(const PowerGrid& grid, const CommGraph& comm, const ControlContext& ctx) {
    const auto n = static_cast<Eigen::Index>(grid.node_count());
    FormData d;
    d.inertia = grid.inertia().asDiagonal();
    d.droop = grid.droop().asDiagonal();
    d.cost_inv = grid.cost().cwiseInverse().asDiagonal();
    d.lpb = grid.weighted_laplacian();
    const Matrix c = grid.cost().asDiagonal();
    if (ctx.scheme == Scheme::PairFlow && n == 2 && grid.line_count() == 1 &&
        ctx.is_flow_node(0) && ctx.is_flow_node(1)) {
        d.form = Form::TwoNode;
        d.k = pair_laplacian();
        d.lc_for_exclusion = d.k;
        return d;
    }
    if (ctx.scheme == Scheme::HybridSingle && ctx.pair_lines.size() == 1) {
        const auto& line = grid.lines()[ctx.pair_lines.front()];
        const Matrix lc = comm.laplacian(grid.node_count(), ctx.live_links);
        const Matrix star = build_lc_star(lc, grid.cost(), {line.from, line.to}, grid);
        d.form = Form::MultiNode;
        d.k = star * c;
        d.lc_for_exclusion = d.k;
        return d;
    }
    throw std::invalid_argument(
        "characteristic factorization applies to PAIR_FLOW on two nodes or HYBRID_SINGLE with "
        "an engaged pair");
}

Complex factored_side(const FormData& d, std::size_t node_count, std::size_t line_count,
                      Complex lambda) {
    const auto n = d.inertia.rows();
    const ComplexMatrix id = ComplexMatrix::Identity(n, n);
    const ComplexMatrix m = d.inertia.cast<Complex>();
    const ComplexMatrix dr = d.droop.cast<Complex>();
    const ComplexMatrix k = d.k.cast<Complex>();
    const ComplexMatrix lpb = d.lpb.cast<Complex>();
    const Complex l2 = lambda * lambda;
    const Complex l3 = l2 * lambda;
    ComplexMatrix h = l2 * dr + l3 * m + lambda * d.cost_inv.cast<Complex>() + lambda * k * dr +
                      l2 * k * m;
    const Complex det_m_inv = 1.0 / d.inertia.diagonal().prod();
    if (d.form == Form::TwoNode) {
        h += (2.0 + lambda) * lpb;
        return (lambda + 2.0) * det_m_inv * h.determinant();
    }
    h += (k + lambda * id) * lpb;
    const int exponent = 1 + static_cast<int>(line_count) - static_cast<int>(node_count);
    const double parity = node_count % 2 == 0 ? 1.0 : -1.0;
    return parity * std::pow(lambda, exponent) * (lambda + 2.0) * det_m_inv * h.determinant();
}

}  // namespace

Vector StateMatrix::pack(const SystemState& s) const {
    const auto n = static_cast<Eigen::Index>(node_count);
    const auto e = static_cast<Eigen::Index>(line_count);
    Vector v(2 * n + e + static_cast<Eigen::Index>(q_nodes.size()));
    v.segment(0, n) = s.omega;
    v.segment(n, e) = s.flow;
    v.segment(n + e, n) = s.u;
    for (std::size_t k = 0; k < q_nodes.size(); ++k) {
        v[2 * n + e + static_cast<Eigen::Index>(k)] = s.q[static_cast<Eigen::Index>(q_nodes[k])];
    }
    return v;
}

StateMatrix assemble_state_matrix(const PowerGrid& grid, const CommGraph& comm,
                                  const ControlContext& ctx) {
    if (ctx.held_neighbors) {
        throw std::invalid_argument(
            "assemble_state_matrix: sampled and sequential schemes have no time-invariant "
            "state matrix");
    }
    StateMatrix sm;
    sm.node_count = grid.node_count();
    sm.line_count = grid.line_count();
    for (std::size_t i = 0; i < sm.node_count; ++i) {
        if (ctx.is_flow_node(i)) {
            sm.q_nodes.push_back(i);
        }
    }
    for (std::size_t i = 0; i < sm.node_count; ++i) {
        sm.labels.push_back("omega_" + std::to_string(i + 1));
    }
    for (const auto& l : grid.lines()) {
        sm.labels.push_back("f_" + std::to_string(l.from + 1) + "_" + std::to_string(l.to + 1));
    }
    for (std::size_t i = 0; i < sm.node_count; ++i) {
        sm.labels.push_back("u_" + std::to_string(i + 1));
    }
    for (const auto i : sm.q_nodes) {
        sm.labels.push_back("q_" + std::to_string(i + 1));
    }

    const auto n = static_cast<Eigen::Index>(sm.node_count);
    const auto e = static_cast<Eigen::Index>(sm.line_count);
    const auto dim = static_cast<Eigen::Index>(sm.labels.size());
    sm.a = Matrix::Zero(dim, dim);
    const Vector zero_injection = Vector::Zero(n);
    SystemState basis = SystemState::zeros(grid, comm);
    for (Eigen::Index j = 0; j < dim; ++j) {
        SystemState s = basis;
        if (j < n) {
            s.omega[j] = 1.0;
        } else if (j < n + e) {
            s.flow[j - n] = 1.0;
        } else if (j < 2 * n + e) {
            s.u[j - n - e] = 1.0;
        } else {
            s.q[static_cast<Eigen::Index>(sm.q_nodes[static_cast<std::size_t>(j - 2 * n - e)])] =
                1.0;
        }
        const auto d = derivative(s, grid, comm, ctx, zero_injection);
        SystemState ds = basis;
        ds.omega = d.domega;
        ds.flow = d.dflow;
        ds.u = d.du;
        ds.q = d.dq;
        sm.a.col(j) = sm.pack(ds);
    }
    return sm;
}

Spectrum spectrum(const Matrix& a) {
    Spectrum out;
    out.spectral_abscissa_excl_zeros = -std::numeric_limits<double>::infinity();
    if (a.rows() == 0) {
        return out;
    }
    const auto ev = raw_eigenvalues(a);
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        out.eigenvalues.push_back(ev[i]);
        if (std::abs(ev[i]) <= kStructuralZeroTolerance) {
            ++out.structural_zero_count;
        } else {
            out.spectral_abscissa_excl_zeros =
                std::max(out.spectral_abscissa_excl_zeros, ev[i].real());
        }
    }
    std::sort(out.eigenvalues.begin(), out.eigenvalues.end(), [](Complex x, Complex y) {
        return x.real() != y.real() ? x.real() > y.real() : x.imag() > y.imag();
    });
    return out;
}

std::vector<ConditionVerdict> check_sufficient_two_node(const Vector& inertia,
                                                        const Vector& droop, const Vector& cost,
                                                        double susceptance, const Matrix& lc) {
    check_diagonals(inertia, droop, cost, 2, "check_sufficient_two_node");
    if (lc.rows() != 2 || lc.cols() != 2) {
        throw std::invalid_argument("check_sufficient_two_node: lc must be 2x2");
    }
    if (!(susceptance > 0.0)) {
        throw std::invalid_argument("check_sufficient_two_node: susceptance must be positive");
    }
    const Matrix m = inertia.asDiagonal();
    const Matrix d = droop.asDiagonal();
    const Matrix c_inv = cost.cwiseInverse().asDiagonal();
    const Matrix lpb = susceptance * pair_laplacian();
    const Matrix damping = 0.5 * (lc * m + m * lc) + d;
    const Matrix stiffness = 0.5 * (lc * d + d * lc) + lpb + c_inv;

    std::vector<ConditionVerdict> out;
    out.push_back(positive_definite("inertia_positive", m));
    out.push_back(positive_definite("damping_positive", damping));
    out.push_back(positive_definite("stiffness_positive", stiffness));
    out.push_back(strictly_greater("coupling_margin", min_eig_sym(stiffness) * min_eig_sym(damping),
                                   4.0 * susceptance * inertia.maxCoeff()));
    return out;
}

std::vector<ConditionVerdict> check_sufficient_multi_node(const Vector& inertia,
                                                          const Vector& droop, const Vector& cost,
                                                          const Matrix& lc_star,
                                                          const Matrix& weighted_laplacian) {
    const auto n = inertia.size();
    check_diagonals(inertia, droop, cost, n, "check_sufficient_multi_node");
    if (lc_star.rows() != n || lc_star.cols() != n || weighted_laplacian.rows() != n ||
        weighted_laplacian.cols() != n) {
        throw std::invalid_argument("check_sufficient_multi_node: matrix size mismatch");
    }
    const Matrix m = inertia.asDiagonal();
    const Matrix d = droop.asDiagonal();
    const Matrix c_inv = cost.cwiseInverse().asDiagonal();
    const Matrix k = lc_star * Matrix(cost.asDiagonal());
    const Matrix damping = k * m + d;
    const Matrix stiffness = weighted_laplacian + k * d + c_inv;
    const Matrix coupling = k * weighted_laplacian;
    const double m_max = inertia.maxCoeff();

    std::vector<ConditionVerdict> out;
    out.push_back(positive_definite("inertia_positive", m));
    out.push_back(positive_definite("damping_positive", damping));
    out.push_back(positive_definite("stiffness_positive", stiffness));
    out.push_back(strictly_greater("coupling_margin",
                                   min_eig_sym(stiffness) * min_eig_sym(damping),
                                   max_eig_sym(coupling) * m_max));
    out.push_back(strictly_greater("coupling_margin_raw",
                                   min_real_eig(stiffness) * min_real_eig(damping),
                                   max_real_eig(coupling) * m_max));
    return out;
}

Matrix build_lc_star(const Matrix& lc, const Vector& cost, NodePair failed_pair,
                     const PowerGrid& grid) {
    const auto n = static_cast<Eigen::Index>(grid.node_count());
    if (lc.rows() != n || lc.cols() != n || cost.size() != n) {
        throw std::invalid_argument("build_lc_star: size mismatch");
    }
    const auto [i, j] = make_pair_sorted(failed_pair.first, failed_pair.second);
    if (j >= grid.node_count() || !grid.find_line(i, j)) {
        throw std::invalid_argument("build_lc_star: pair (" + std::to_string(i + 1) + "," +
                                    std::to_string(j + 1) + ") is not joined by a power line");
    }
    const auto a = static_cast<Eigen::Index>(i);
    const auto b = static_cast<Eigen::Index>(j);
    Matrix star = lc;
    star.row(a).setZero();
    star.row(b).setZero();
    star(a, a) = 1.0 / cost[a];
    star(a, b) = -1.0 / cost[b];
    star(b, a) = -1.0 / cost[a];
    star(b, b) = 1.0 / cost[b];
    return star;
}

CharacteristicSides characteristic_sides(const PowerGrid& grid, const CommGraph& comm,
                                         const ControlContext& ctx, Complex lambda) {
    const FormData d = form_data(grid, comm, ctx);
    const StateMatrix sm = assemble_state_matrix(grid, comm, ctx);
    const auto dim = sm.a.rows();
    const ComplexMatrix shifted =
        sm.a.cast<Complex>() - lambda * ComplexMatrix::Identity(dim, dim);
    return {shifted.determinant(),
            factored_side(d, grid.node_count(), grid.line_count(), lambda)};
}

IdentityCheck characteristic_identity_check(const PowerGrid& grid, const CommGraph& comm,
                                            const ControlContext& ctx,
                                            std::span<const Complex> samples) {
    if (samples.empty()) {
        throw std::invalid_argument("characteristic_identity_check: no sample points");
    }
    const FormData d = form_data(grid, comm, ctx);
    std::vector<Complex> excluded{0.0, -2.0};
    const auto ev = raw_eigenvalues(d.lc_for_exclusion);
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        excluded.push_back(-ev[i]);
    }
    for (const auto& s : samples) {
        for (const auto& x : excluded) {
            if (std::abs(s - x) < 1e-6) {
                throw std::invalid_argument(
                    "characteristic_identity_check: sample point too close to an excluded value");
            }
        }
    }

    const StateMatrix sm = assemble_state_matrix(grid, comm, ctx);
    const auto dim = sm.a.rows();
    const ComplexMatrix a = sm.a.cast<Complex>();
    IdentityCheck out;
    out.form = d.form == Form::TwoNode ? "two_node" : "multi_node";
    for (std::size_t k = 0; k < samples.size(); ++k) {
        const Complex lambda = samples[k];
        const Complex direct = (a - lambda * ComplexMatrix::Identity(dim, dim)).determinant();
        const Complex factored = factored_side(d, grid.node_count(), grid.line_count(), lambda);
        if (k == 0) {
            out.sign = (direct / factored).real() >= 0.0 ? 1.0 : -1.0;
        }
        const double scale = std::max(std::abs(direct), std::abs(factored));
        const double residual = scale == 0.0 ? 0.0 : std::abs(direct - out.sign * factored) / scale;
        out.max_relative_residual = std::max(out.max_relative_residual, residual);
    }
    out.consistent = out.max_relative_residual <= kIdentityTolerance;
    return out;
}

std::array<double, 4> two_node_cubic_coefficients(const Vector& x, const Vector& inertia,
                                                  const Vector& droop, const Vector& cost,
                                                  double susceptance, const Matrix& lc) {
    check_diagonals(inertia, droop, cost, 2, "two_node_cubic_coefficients");
    if (x.size() != 2 || lc.rows() != 2 || lc.cols() != 2) {
        throw std::invalid_argument("two_node_cubic_coefficients: expected 2-vectors and 2x2 lc");
    }
    const Matrix m = inertia.asDiagonal();
    const Matrix d = droop.asDiagonal();
    const Matrix c_inv = cost.cwiseInverse().asDiagonal();
    const Matrix lpb = susceptance * pair_laplacian();
    const double a0 = x.dot(2.0 * lpb * x);
    const double a1 = x.dot((lpb + 0.5 * (lc * d + d * lc) + c_inv) * x);
    const double a2 = x.dot((0.5 * (lc * m + m * lc) + d) * x);
    const double a3 = x.dot(m * x);
    return {a0, a1, a2, a3};
}

bool cubic_is_hurwitz(const std::array<double, 4>& a) {
    return a[0] > 0.0 && a[1] > 0.0 && a[2] > 0.0 && a[3] > 0.0 && a[0] * a[3] < a[1] * a[2];
}

StabilityReport analyze(const Scenario& sc, std::uint64_t seed) {
    if (const auto problems = validate(sc); !problems.empty()) {
        throw std::invalid_argument("analyze: invalid scenario: " + problems.front());
    }
    const auto& grid = sc.grid;
    const ControlContext ctx = final_context(sc);
    const StateMatrix sm = assemble_state_matrix(grid, sc.comm, ctx);

    StabilityReport r;
    r.state_dimension = static_cast<std::size_t>(sm.a.rows());
    r.spectrum = spectrum(sm.a);

    bool has_form = false;
    if (ctx.scheme == Scheme::PairFlow && grid.node_count() == 2) {
        r.sufficient = check_sufficient_two_node(grid.inertia(), grid.droop(), grid.cost(),
                                                 grid.lines().front().susceptance,
                                                 pair_laplacian());
        has_form = true;
    } else if (ctx.scheme == Scheme::HybridSingle && ctx.pair_lines.size() == 1) {
        const auto& line = grid.lines()[ctx.pair_lines.front()];
        const Matrix star =
            build_lc_star(sc.comm.laplacian(grid.node_count(), ctx.live_links), grid.cost(),
                          {line.from, line.to}, grid);
        r.sufficient = check_sufficient_multi_node(grid.inertia(), grid.droop(), grid.cost(), star,
                                                   grid.weighted_laplacian());
        has_form = true;
    }

    if (has_form) {
        const FormData d = form_data(grid, sc.comm, ctx);
        const auto ev = raw_eigenvalues(d.lc_for_exclusion);
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> radius(0.5, 5.0);
        std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
        std::vector<Complex> samples;
        while (samples.size() < 10) {
            const Complex s = std::polar(radius(rng), angle(rng));
            bool ok = std::abs(s + 2.0) > 1e-3;
            for (Eigen::Index i = 0; i < ev.size(); ++i) {
                ok = ok && std::abs(s + ev[i]) > 1e-3;
            }
            if (ok) {
                samples.push_back(s);
            }
        }
        r.identity = characteristic_identity_check(grid, sc.comm, ctx, samples);
    }
    return r;
}

}  // namespace freqctl
