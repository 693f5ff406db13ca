#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "hypolab/error.hpp"
#include "hypolab/linalg.hpp"
#include "hypolab/model.hpp"

namespace hypolab {

// ---------------------------------------------------------------------------
// Position grid
// ---------------------------------------------------------------------------

/// Height U(±L) - min U demanded of every truncation domain.
inline constexpr double confinement_threshold = 10.0;

/// Uniform grid on [-L, L] with the normalised Gibbs position weights.
///
/// Edges are the midpoints between consecutive nodes; their weight is the
/// geometric mean of the two node weights. Square roots of weights are formed
/// from U differences so that no ratio of tiny weights is ever taken.
struct WeightedGrid {
    GibbsModel model{Potential::quadratic(), 0.0, std::nullopt};
    double half_width = 0.0;
    int size = 0;
    double spacing = 0.0;
    Eigen::VectorXd nodes, weights, sqrt_weights;
    Eigen::VectorXd U, dU, d2U;
    Eigen::VectorXd edges, edge_weights, edge_sqrt_weights, edge_d2U;

    int edge_count() const { return size - 1; }
};

inline WeightedGrid build_grid(const GibbsModel& model, double half_width, int n) {
    if (n < 16) throw ConfigError("grid.N_x must be at least 16");
    if (!(half_width > 0.0) || !std::isfinite(half_width))
        throw ConfigError("grid.L_dom must be positive and finite");

    WeightedGrid g{};
    g.model = model;
    g.half_width = half_width;
    g.size = n;
    g.spacing = 2.0 * half_width / (n - 1);
    g.nodes.resize(n);
    g.U.resize(n);
    g.dU.resize(n);
    g.d2U.resize(n);
    for (int i = 0; i < n; ++i) {
        const double x = (i == n - 1) ? half_width : -half_width + i * g.spacing;
        const auto pv = model.potential(x);
        g.nodes(i) = x;
        g.U(i) = pv.value;
        g.dU(i) = pv.first;
        g.d2U(i) = pv.second;
        if (pv.second < -model.K)
            throw ConfigError("Hessian lower bound violated at x = " + std::to_string(x));
    }
    const double umin = g.U.minCoeff();
    const double rise = std::min(g.U(0), g.U(n - 1)) - umin;
    if (!(rise >= confinement_threshold))
        throw DomainTooSmallError("truncation domain too small: U(±L) - min U = " +
                                  std::to_string(rise) + " < " +
                                  std::to_string(confinement_threshold));

    Eigen::VectorXd shifted = -(g.U.array() - umin);
    const double total = shifted.array().exp().sum();
    if (!(total > 0.0) || !std::isfinite(total))
        throw WeightOverflowError("Gibbs weights under- or overflow");
    const double log_total = std::log(total);
    g.weights = (shifted.array() - log_total).exp();
    g.sqrt_weights = (0.5 * (shifted.array() - log_total)).exp();

    g.edges.resize(n - 1);
    g.edge_weights.resize(n - 1);
    g.edge_sqrt_weights.resize(n - 1);
    g.edge_d2U.resize(n - 1);
    for (int e = 0; e < n - 1; ++e) {
        g.edges(e) = 0.5 * (g.nodes(e) + g.nodes(e + 1));
        const double le = 0.5 * (shifted(e) + shifted(e + 1)) - log_total;
        g.edge_weights(e) = std::exp(le);
        g.edge_sqrt_weights(e) = std::exp(0.5 * le);
        g.edge_d2U(e) = model.potential(g.edges(e)).second;
    }
    return g;
}

/// Smallest half-width (a multiple of 1/2) with U(±L) - min U >= rise.
inline double auto_half_width(const Potential& p, double rise = 30.0) {
    for (double L = 0.5; L <= 64.0; L += 0.5) {
        const double umin = p.min_value(-L, L);
        if (std::min(p(-L).value, p(L).value) - umin >= rise) return L;
    }
    throw ConfigError("potential does not confine within |x| <= 64");
}

// ---------------------------------------------------------------------------
// Velocity basis
// ---------------------------------------------------------------------------

/// Normalised Hermite functions psi_k, k < size, orthonormal in L^2(kappa).
///
/// d/dv psi_k = sqrt(k) psi_{k-1} and v psi_k = sqrt(k+1) psi_{k+1} +
/// sqrt(k) psi_{k-1}; the raising term out of the top mode is dropped.
struct HermiteBasis {
    int size = 0;

    double lowering(int k) const { return std::sqrt(static_cast<double>(k)); }
    double number(int k) const { return static_cast<double>(k); }

    Eigen::VectorXd number_eigenvalues() const {
        return Eigen::VectorXd::LinSpaced(size, 0.0, size - 1.0);
    }
    Eigen::MatrixXd derivative_matrix() const {
        Eigen::MatrixXd d = Eigen::MatrixXd::Zero(size, size);
        for (int k = 1; k < size; ++k) d(k - 1, k) = lowering(k);
        return d;
    }
    Eigen::MatrixXd multiplication_matrix() const {
        Eigen::MatrixXd d = derivative_matrix();
        return d + d.transpose();
    }
};

inline HermiteBasis build_velocity_basis(int n) {
    if (n < 4) throw ConfigError("grid.N_v must be at least 4");
    return HermiteBasis{n};
}

// ---------------------------------------------------------------------------
// Operators
// ---------------------------------------------------------------------------

/// Discretised generator pieces on the tensor space (position) x (Hermite).
///
/// State vectors are stored in orthonormalised coordinates (node values
/// scaled by sqrt(weight)), so the L^2(mu) inner product is the dot product
/// and adjoints are transposes. Entry (k, i) sits at index k * N_x + i.
///
/// The layout is staggered: even Hermite modes live on the grid nodes, odd
/// modes on the edge midpoints. Slot N_x - 1 of an odd mode has no edge
/// behind it; it is inert (only L_s acts on it).
struct OperatorSet {
    WeightedGrid grid;
    HermiteBasis basis;

    SpMat grad;        ///< (N_x-1) x N_x, forward difference node -> edge
    SpMat dual_grad;   ///< (N_x-1) x N_x, discrete d_x^* node -> edge; its
                       ///< transpose is d_x edge -> node
    SpMat overdamped;  ///< N_x x N_x, L_o = -grad^T grad
    SpMat liouville;   ///< N x N, L_a
    SpMat ou;          ///< N x N, L_s (diagonal)
    SpMat velocity_projector;  ///< N x N, Pi_v
    Eigen::VectorXd constant_mode;  ///< unit vector of the constant function

    double gap = 0.0;              ///< m_h, filled by poincare_constant
    Eigen::VectorXd gap_mode;      ///< unit eigenvector of -L_o at m_h (position)
    Eigen::VectorXd overdamped_spectrum;  ///< eigenvalues of -L_o, ascending

    int nx() const { return grid.size; }
    int nv() const { return basis.size; }
    int dim() const { return grid.size * basis.size; }
    int index(int mode, int slot) const { return mode * grid.size + slot; }

    /// Trivial lift of node values h(x_i) to a phase-space state.
    Eigen::VectorXd lift(const Eigen::VectorXd& node_values) const {
        Eigen::VectorXd f = Eigen::VectorXd::Zero(dim());
        f.head(nx()) = grid.sqrt_weights.cwiseProduct(node_values);
        return f;
    }
    /// Same, for a function already in orthonormalised coordinates.
    Eigen::VectorXd lift_coordinates(const Eigen::VectorXd& position) const {
        Eigen::VectorXd f = Eigen::VectorXd::Zero(dim());
        f.head(nx()) = position;
        return f;
    }

    double mean(const Eigen::VectorXd& f) const { return constant_mode.dot(f); }
    Eigen::VectorXd project_mean_zero(const Eigen::VectorXd& f) const {
        return f - mean(f) * constant_mode;
    }
    bool is_mean_zero(const Eigen::VectorXd& f, double tol = 1e-10) const {
        return std::abs(mean(f)) <= tol * std::max(1.0, f.norm());
    }
    /// Dense P_0 = I - c c^T; only for small problems.
    Eigen::MatrixXd mean_zero_projector() const {
        return Eigen::MatrixXd::Identity(dim(), dim()) - constant_mode * constant_mode.transpose();
    }

    /// L_o acting on every Hermite block
    SpMat lifted_overdamped() const {
        return kron(SpMat(identity(nv())), overdamped);
    }

    /// Discrete Hessian node -> node, (d_x edge->node) o (d_x node->edge).
    Eigen::VectorXd second_derivative(const Eigen::VectorXd& position) const {
        return dual_grad.transpose() * (grad * position);
    }
};

namespace detail {

// Forward difference of f = f~ / sqrt(w) onto edges, in orthonormal coords:
//   (G f~)_e = ( sqrt(w_e/w_{i+1}) f~_{i+1} - sqrt(w_e/w_i) f~_i ) / h
// Dual operator d_x^* g = -(w g)'/w on edges:
//   (H f~)_e = -( sqrt(w_{i+1}/w_e) f~_{i+1} - sqrt(w_i/w_e) f~_i ) / h
inline std::pair<SpMat, SpMat> edge_differences(const WeightedGrid& g) {
    const int n = g.size;
    const double h = g.spacing;
    std::vector<Triplet> tg, th;
    tg.reserve(2 * (n - 1));
    th.reserve(2 * (n - 1));
    for (int e = 0; e < n - 1; ++e) {
        const double q = std::exp(0.25 * (g.U(e + 1) - g.U(e)));  // sqrt(w_e / w_{e+1})
        tg.emplace_back(e, e + 1, q / h);
        tg.emplace_back(e, e, -1.0 / (q * h));
        th.emplace_back(e, e + 1, -1.0 / (q * h));
        th.emplace_back(e, e, q / h);
    }
    SpMat grad(n - 1, n), dual(n - 1, n);
    grad.setFromTriplets(tg.begin(), tg.end());
    dual.setFromTriplets(th.begin(), th.end());
    return {grad, dual};
}

inline SpMat pad_rows(const SpMat& m, Eigen::Index rows) {
    SpMat r(rows, m.cols());
    std::vector<Triplet> t;
    for (int k = 0; k < m.outerSize(); ++k)
        for (SpMat::InnerIterator it(m, k); it; ++it) t.emplace_back(it.row(), it.col(), it.value());
    r.setFromTriplets(t.begin(), t.end());
    return r;
}

}  // namespace detail

/// L_a = v d_x - U' d_v = d_x ⊗ a^+ - d_x^* ⊗ a in the Hermite basis.
///
/// Block (k+1, k) is sqrt(k+1) d_x, with d_x the forward difference
/// node -> edge for even k and its dual edge -> node for odd k; block
/// (k, k+1) is minus the transpose, so L_a^T = -L_a holds entrywise.
inline OperatorSet assemble_operators(const WeightedGrid& grid, const HermiteBasis& basis) {
    OperatorSet ops{};
    ops.grid = grid;
    ops.basis = basis;
    const int nx = grid.size, nv = basis.size, n = nx * nv;

    auto [grad, dual] = detail::edge_differences(grid);
    ops.grad = grad;
    ops.dual_grad = dual;
    SpMat lo = -(SpMat(grad.transpose()) * grad);
    ops.overdamped = 0.5 * (lo + SpMat(lo.transpose()));

    const SpMat up_even = detail::pad_rows(grad, nx);                   // node -> edge
    const SpMat up_odd = SpMat(detail::pad_rows(dual, nx).transpose()); // edge -> node

    std::vector<Triplet> t;
    for (int k = 0; k + 1 < nv; ++k) {
        const double s = basis.lowering(k + 1);
        const SpMat& d = (k % 2 == 0) ? up_even : up_odd;
        for (int c = 0; c < d.outerSize(); ++c)
            for (SpMat::InnerIterator it(d, c); it; ++it) {
                const int row = ops.index(k + 1, static_cast<int>(it.row()));
                const int col = ops.index(k, static_cast<int>(it.col()));
                t.emplace_back(row, col, s * it.value());
                t.emplace_back(col, row, -s * it.value());
            }
    }
    SpMat la(n, n);
    la.setFromTriplets(t.begin(), t.end());
    ops.liouville = 0.5 * (la - SpMat(la.transpose()));

    std::vector<Triplet> ts, tp;
    for (int k = 0; k < nv; ++k)
        for (int i = 0; i < nx; ++i) {
            if (k > 0) ts.emplace_back(ops.index(k, i), ops.index(k, i), -basis.number(k));
            if (k == 0) tp.emplace_back(i, i, 1.0);
        }
    ops.ou.resize(n, n);
    ops.ou.setFromTriplets(ts.begin(), ts.end());
    ops.velocity_projector.resize(n, n);
    ops.velocity_projector.setFromTriplets(tp.begin(), tp.end());

    ops.constant_mode = Eigen::VectorXd::Zero(n);
    ops.constant_mode.head(nx) = grid.sqrt_weights;
    ops.constant_mode.normalize();
    return ops;
}

/// m_h: smallest nonzero eigenvalue of -L_o on the position factor.
inline double poincare_constant(OperatorSet& ops) {
    Eigen::MatrixXd neg = -Eigen::MatrixXd(ops.overdamped);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(neg);
    if (es.info() != Eigen::Success) throw NumericalError("poincare_constant: eigensolver failed");
    const double m = es.eigenvalues()(1);
    if (!(m >= 1e-10))
        throw DegenerateGapError("second eigenvalue of -L_o is " + std::to_string(m) +
                                 "; check domain and grid");
    ops.gap = m;
    ops.gap_mode = es.eigenvectors().col(1);
    ops.overdamped_spectrum = es.eigenvalues();
    return m;
}

/// L = L_a + gamma L_s.
inline SpMat compose_generator(const OperatorSet& ops, double gamma) {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ConfigError("gamma must be positive");
    return ops.liouville + gamma * ops.ou;
}

/// Grid, basis, operators and gap in one call.
inline OperatorSet build_operator_set(const GibbsModel& model, double half_width, int nx, int nv) {
    OperatorSet ops = assemble_operators(build_grid(model, half_width, nx), build_velocity_basis(nv));
    poincare_constant(ops);
    return ops;
}

// ---------------------------------------------------------------------------
// Smooth position test functions
// ---------------------------------------------------------------------------

struct TestFunction {
    std::string name;
    Eigen::VectorXd values;  ///< h(x_i) at the nodes
};

/// {1, x, x^2, exp(-x^2/2), sin x} sampled on the grid nodes.
inline std::vector<TestFunction> standard_test_functions(const WeightedGrid& g) {
    const Eigen::ArrayXd x = g.nodes.array();
    return {
        {"one", Eigen::VectorXd::Ones(g.size)},
        {"x", x.matrix()},
        {"x2", (x * x).matrix()},
        {"gauss", (-0.5 * x * x).exp().matrix()},
        {"sin", x.sin().matrix()},
    };
}

// ---------------------------------------------------------------------------
// Structural checks
// ---------------------------------------------------------------------------

struct StructureCheck {
    std::string name;
    double residual = 0.0;
    bool exact = true;     ///< exact checks must stay below structure_tolerance
    bool passed = true;
};

struct StructureReport {
    std::vector<StructureCheck> checks;
    double lift_residual = 0.0;           ///< ‖(L_a Π_v)^T (L_a Π_v) + L_o Π_v‖_max
    double lift_form_residual = 0.0;      ///< max |<f,-L_o g> - <L_a f, L_a g>| over test pairs
    double fourth_moment_residual = 0.0;  ///< max relative mismatch over test functions

    bool all_exact_passed() const {
        for (const auto& c : checks)
            if (c.exact && !c.passed) return false;
        return true;
    }
    const StructureCheck& find(const std::string& name) const {
        for (const auto& c : checks)
            if (c.name == name) return c;
        throw PreconditionError("no structure check named '" + name + "'");
    }
};

inline constexpr double structure_tolerance = 1e-12;

/// Runs every algebraic identity of the assembled operators; throws
/// StructureError if an exact identity fails.
inline StructureReport check_structure(const OperatorSet& ops, bool throw_on_failure = true) {
    StructureReport rep;
    const int nx = ops.nx(), nv = ops.nv(), n = ops.dim();
    const SpMat& la = ops.liouville;
    const SpMat& ls = ops.ou;
    const SpMat& pv = ops.velocity_projector;
    const SpMat lo_full = ops.lifted_overdamped();
    const double lo_scale = std::max(1.0, max_abs(ops.overdamped));
    const double la_scale = std::max(1.0, max_abs(la));

    auto add = [&](std::string name, double r, bool exact = true) {
        rep.checks.push_back({std::move(name), r, exact, !exact || r <= structure_tolerance});
    };

    add("la_antisymmetric", max_abs(SpMat(la + SpMat(la.transpose()))) / la_scale);
    add("ls_symmetric", max_abs(SpMat(ls - SpMat(ls.transpose()))));
    add("lo_symmetric", max_abs(SpMat(ops.overdamped - SpMat(ops.overdamped.transpose()))) / lo_scale);
    {
        // L_s spectrum: diagonal with entry -k on every slot of mode k
        double r = 0.0;
        for (int k = 0; k < nv; ++k)
            for (int i = 0; i < nx; ++i)
                r = std::max(r, std::abs(ls.coeff(ops.index(k, i), ops.index(k, i)) + k));
        const SpMat off = ls - SpMat(SpMat(ls).diagonal().asDiagonal());
        add("ls_spectrum", std::max(r, max_abs(off)));
    }
    {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(ops.overdamped));
        const double top = es.eigenvalues().maxCoeff();
        add("lo_negative_semidefinite", std::max(0.0, top) / lo_scale);
        add("lo_kernel_constants", (ops.overdamped * ops.grid.sqrt_weights).lpNorm<Eigen::Infinity>() / lo_scale);
    }
    add("piv_idempotent", max_abs(SpMat(SpMat(pv * pv) - pv)));
    add("piv_symmetric", max_abs(SpMat(pv - SpMat(pv.transpose()))));
    add("piv_commutes_lo", max_abs(SpMat(SpMat(pv * lo_full) - SpMat(lo_full * pv))) / lo_scale);
    {
        // ker L_s = range Π_v: L_s Π_v = 0 and Π_v + (-L_s) is diagonal and ≥ 1
        double r = max_abs(SpMat(ls * pv));
        const SpMat s = pv - ls;
        for (int j = 0; j < n; ++j) r = std::max(r, std::max(0.0, 1.0 - s.coeff(j, j)));
        add("ker_ls_range_piv", r);
    }
    const SpMat lapv = la * pv;
    add("piv_la_piv_zero", max_abs(SpMat(pv * lapv)) / la_scale);
    add("lapiv_adjoint", max_abs(SpMat(SpMat(lapv.transpose()) + SpMat(pv * la))) / la_scale);
    {
        // ‖(1-Π_v) f‖² ≤ ‖∇_v f‖² on each Hermite mode; ‖∇_v e_k‖² = k ‖e_k‖²
        const Eigen::MatrixXd dv = ops.basis.derivative_matrix();
        double r = 0.0;
        for (int k = 0; k < nv; ++k) {
            Eigen::VectorXd e = Eigen::VectorXd::Zero(nv);
            e(k) = 1.0;
            const double grad2 = (dv * e).squaredNorm();
            const double fast2 = k == 0 ? 0.0 : 1.0;
            r = std::max(r, std::abs(grad2 - k));
            r = std::max(r, std::max(0.0, fast2 - grad2));
        }
        // v multiplication is raising plus lowering
        const Eigen::MatrixXd vm = ops.basis.multiplication_matrix();
        for (int k = 0; k + 1 < nv; ++k) {
            r = std::max(r, std::abs(vm(k + 1, k) - std::sqrt(k + 1.0)));
            if (k > 0) r = std::max(r, std::abs(vm(k - 1, k) - std::sqrt(double(k))));
        }
        add("velocity_poincare", r);
    }

    // Lift identities
    const SpMat prod = SpMat(lapv.transpose()) * lapv;
    rep.lift_residual = max_abs(SpMat(prod + SpMat(lo_full * pv))) / lo_scale;
    add("lift_operator_form", rep.lift_residual, false);

    const auto funcs = standard_test_functions(ops.grid);
    std::vector<Eigen::VectorXd> lifted;
    for (const auto& tf : funcs) lifted.push_back(ops.project_mean_zero(ops.lift(tf.values)));
    double form = 0.0, fourth = 0.0;
    for (size_t a = 0; a < lifted.size(); ++a) {
        const Eigen::VectorXd laf = la * lifted[a];
        for (size_t b = 0; b < lifted.size(); ++b) {
            const double lhs = lifted[a].dot(-(lo_full * lifted[b]));
            const double rhs = laf.dot(la * lifted[b]);
            form = std::max(form, std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs)));
        }
        const Eigen::VectorXd la2 = la * laf;
        const Eigen::VectorXd fast = la2 - pv * la2;
        const double lhs = fast.squaredNorm();
        const double rhs = 2.0 * ops.second_derivative(lifted[a].head(nx)).squaredNorm();
        fourth = std::max(fourth, std::abs(lhs - rhs) / std::max(1.0, rhs));
    }
    rep.lift_form_residual = form;
    rep.fourth_moment_residual = fourth;
    add("lift_quadratic_form", form, false);
    add("fourth_moment", fourth, false);

    if (throw_on_failure && !rep.all_exact_passed()) {
        std::string msg = "structural assembly failure:";
        for (const auto& c : rep.checks)
            if (c.exact && !c.passed) msg += " " + c.name + "=" + std::to_string(c.residual);
        throw StructureError(msg);
    }
    return rep;
}

}  // namespace hypolab
