#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "hypolab/discretize.hpp"
#include "hypolab/error.hpp"
#include "hypolab/linalg.hpp"
#include "hypolab/tuning.hpp"

namespace hypolab {

/// A_α = (α - L_o)^{-1} (L_a Π_v)^T on the discretised space.
class Corrector {
public:
    Corrector(const OperatorSet& ops, double alpha, SpMat a)
        : ops_(&ops), alpha_(alpha), a_(std::move(a)) {}

    const OperatorSet& ops() const noexcept { return *ops_; }
    double alpha() const noexcept { return alpha_; }
    const SpMat& matrix() const noexcept { return a_; }
    Eigen::VectorXd apply(const Eigen::VectorXd& f) const { return a_ * f; }

private:
    const OperatorSet* ops_;
    double alpha_;
    SpMat a_;
};

/// Solves with α - L_o once (dense Cholesky on the position factor) and
/// applies it to every nonzero column of (L_a Π_v)^T. Those columns only have
/// entries in Hermite mode 0, so the result is block-sparse.
inline Corrector build_corrector(const OperatorSet& ops, double alpha) {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ConfigError("corrector alpha must be positive");
    const int nx = ops.nx(), n = ops.dim();
    const Eigen::MatrixXd shifted =
        alpha * Eigen::MatrixXd::Identity(nx, nx) - Eigen::MatrixXd(ops.overdamped);
    const Eigen::LLT<Eigen::MatrixXd> llt(shifted);
    if (llt.info() != Eigen::Success) throw NumericalError("corrector: Cholesky factorisation failed");

    const SpMat rhs = SpMat(SpMat(ops.liouville * ops.velocity_projector).transpose());
    std::vector<Triplet> t;
    Eigen::VectorXd col(nx);
    for (int j = 0; j < rhs.outerSize(); ++j) {
        col.setZero();
        bool any = false;
        for (SpMat::InnerIterator it(rhs, j); it; ++it) {
            if (it.row() >= nx) {
                if (it.value() != 0.0) throw NumericalError("corrector: right-hand side leaves mode 0");
                continue;
            }
            col(it.row()) = it.value();
            any = any || it.value() != 0.0;
        }
        if (!any) continue;
        const Eigen::VectorXd x = llt.solve(col);
        for (int i = 0; i < nx; ++i)
            if (x(i) != 0.0) t.emplace_back(i, j, x(i));
    }
    SpMat a(n, n);
    a.setFromTriplets(t.begin(), t.end());
    return {ops, alpha, std::move(a)};
}

inline Corrector build_corrector(const OperatorSet& ops) { return build_corrector(ops, ops.gap); }

namespace detail {
inline void require_mean_zero(const OperatorSet& ops, const Eigen::VectorXd& f) {
    if (f.size() != ops.dim()) throw PreconditionError("state has the wrong dimension");
    if (!ops.is_mean_zero(f)) throw PreconditionError("state is not mean-zero");
}
}  // namespace detail

/// 𝔏(f) = ½‖f‖² - ε<Af, f>.
inline double lyapunov(const Eigen::VectorXd& f, const Corrector& c, double eps) {
    detail::require_mean_zero(c.ops(), f);
    return 0.5 * f.squaredNorm() - eps * f.dot(c.apply(f));
}

/// D_ε(f) = -<Lf, f> + ε(<ALf, f> + <Af, Lf>).
inline double dissipation(const Eigen::VectorXd& f, const Corrector& c, double eps, double gamma) {
    detail::require_mean_zero(c.ops(), f);
    const Eigen::VectorXd lf = compose_generator(c.ops(), gamma) * f;
    return -lf.dot(f) + eps * (f.dot(c.apply(lf)) + lf.dot(c.apply(f)));
}

/// Same as dissipation() with L already composed; used in time loops.
inline double dissipation_with(const SpMat& generator, const Eigen::VectorXd& f, const Corrector& c,
                               double eps) {
    const Eigen::VectorXd lf = generator * f;
    return -lf.dot(f) + eps * (f.dot(c.apply(lf)) + lf.dot(c.apply(f)));
}

/// Measured corrector norms against their bounds, plus coercivity of the
/// dissipation form once dissipation_form_min_eig has been run.
struct DissipationReport {
    double m = 0.0, K = 0.0;
    double norm_A = 0.0, norm_LaA = 0.0, norm_AmLaF = 0.0;
    double bound_A = 0.0, bound_LaA = 0.0, bound_AmLaF = 0.0;
    double ratio_A = 0.0, ratio_LaA = 0.0, ratio_AmLaF = 0.0;
    double min_eig_Q = 0.0;
    double lambda_coer = 0.0;
    double slack = 0.0;  ///< min_eig_Q - λ_coer

    double max_ratio() const { return std::max({ratio_A, ratio_LaA, ratio_AmLaF}); }
};

inline DissipationReport verify_corrector_bounds(const Corrector& c) {
    const OperatorSet& ops = c.ops();
    if (!(ops.gap > 0.0)) throw PreconditionError("operator set has no gap; run poincare_constant");
    if (std::abs(c.alpha() - ops.gap) > 1e-12 * ops.gap)
        throw PreconditionError("corrector bounds assume alpha = m_h");
    DissipationReport r;
    r.m = ops.gap;
    r.K = ops.grid.model.K;
    const SpMat& a = c.matrix();
    const SpMat fast = identity(ops.dim()) - ops.velocity_projector;
    r.norm_A = operator_norm(a);
    r.norm_LaA = operator_norm(SpMat(ops.liouville * a));
    r.norm_AmLaF = operator_norm(SpMat(SpMat(a * ops.liouville) * fast));
    r.bound_A = 1.0 / (2.0 * std::sqrt(r.m));
    r.bound_LaA = 1.0;
    r.bound_AmLaF = std::sqrt(2.0 + r.K / (2.0 * r.m));
    r.ratio_A = r.norm_A / r.bound_A;
    r.ratio_LaA = r.norm_LaA / r.bound_LaA;
    r.ratio_AmLaF = r.norm_AmLaF / r.bound_AmLaF;
    r.lambda_coer = rate(r.m, r.K).lambda_coer;
    return r;
}

/// Symmetric matrix of f ↦ D_ε(f).
inline SpMat dissipation_form(const Corrector& c, double eps, double gamma) {
    const SpMat l = compose_generator(c.ops(), gamma);
    const SpMat& a = c.matrix();
    SpMat q = -l + eps * (SpMat(a * l) + SpMat(SpMat(l.transpose()) * a));
    return 0.5 * (q + SpMat(q.transpose()));
}

struct MinEigResult {
    double min_eig_Q;
    double lambda_coer;
    double slack;
};

/// Smallest eigenvalue of the dissipation form on the mean-zero subspace.
///
/// The constant direction is lifted out of the way: Q is replaced by
/// P_0 Q P_0 + s c c^T with s larger than any eigenvalue of Q, so the
/// minimum of the modified matrix is the restricted minimum.
inline MinEigResult dissipation_form_min_eig(const Corrector& c, double eps, double gamma) {
    const OperatorSet& ops = c.ops();
    const SpMat q = dissipation_form(c, eps, gamma);
    const Eigen::VectorXd& cm = ops.constant_mode;
    const int n = ops.dim();

    double gersh = 0.0;
    for (int k = 0; k < q.outerSize(); ++k) {
        double row = 0.0;
        for (SpMat::InnerIterator it(q, k); it; ++it) row += std::abs(it.value());
        gersh = std::max(gersh, row);
    }
    const double s = 2.0 * gersh + 1.0;

    double lmin = 0.0;
    if (n <= dense_limit) {
        Eigen::MatrixXd d = Eigen::MatrixXd(q);
        const Eigen::VectorXd qc = d * cm;
        const double cqc = cm.dot(qc);
        // P0 Q P0 = Q - qc c^T - c qc^T + (c^T Q c) c c^T
        d -= qc * cm.transpose() + cm * qc.transpose();
        d += (cqc + s) * cm * cm.transpose();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(d, Eigen::EigenvaluesOnly);
        if (es.info() != Eigen::Success) throw NumericalError("dissipation form: eigensolver failed");
        lmin = es.eigenvalues()(0);
    } else {
        // The constant mode lies in the kernel of Q, so Q c = 0 and adding
        // s c c^T only needs the mode-0 block; keep the matrix sparse.
        const Eigen::VectorXd qc = q * cm;
        if (qc.norm() > 1e-10 * std::max(1.0, gersh))
            throw NumericalError("dissipation form does not annihilate constants");
        std::vector<Triplet> t;
        for (int i = 0; i < ops.nx(); ++i)
            for (int j = 0; j < ops.nx(); ++j) t.emplace_back(i, j, s * cm(i) * cm(j));
        SpMat lift(n, n);
        lift.setFromTriplets(t.begin(), t.end());
        lmin = smallest_eigenvalue_large(SpMat(q + lift));
    }
    const double lc = rate(ops.gap, ops.grid.model.K).lambda_coer;
    return {lmin, lc, lmin - lc};
}

inline void attach_min_eig(DissipationReport& r, const MinEigResult& e) {
    r.min_eig_Q = e.min_eig_Q;
    r.lambda_coer = e.lambda_coer;
    r.slack = e.slack;
}

// ---------------------------------------------------------------------------
// Bochner identity
// ---------------------------------------------------------------------------

struct BochnerResult {
    double residual = 0.0;  ///< ‖L_o h‖² - ‖∂²h‖² - Σ U''(∂h)²
    double lo_sq = 0.0;     ///< ‖L_o h‖²
    double hess_sq = 0.0;   ///< ‖∂²h‖²
    double curvature = 0.0; ///< Σ_e U''(x_e) (∂h)_e² w_e
    double grad_sq = 0.0;   ///< ‖∂h‖²
    double K = 0.0;
    bool inequality_holds = false;         ///< with |r| added to the right side
    bool strict_inequality_holds = false;  ///< without |r|
};

/// Discrete Bochner identity for a position function given by node values.
/// The gradient lives on edges, so U'' is evaluated at the edge midpoints.
inline BochnerResult bochner_residual(const OperatorSet& ops, const Eigen::VectorXd& node_values) {
    if (node_values.size() != ops.nx()) throw PreconditionError("test function has wrong size");
    const Eigen::VectorXd h = ops.grid.sqrt_weights.cwiseProduct(node_values);
    const Eigen::VectorXd grad = ops.grad * h;
    const Eigen::VectorXd lo = ops.overdamped * h;
    const Eigen::VectorXd hess = ops.second_derivative(h);
    BochnerResult r;
    r.K = ops.grid.model.K;
    r.lo_sq = lo.squaredNorm();
    r.hess_sq = hess.squaredNorm();
    r.grad_sq = grad.squaredNorm();
    r.curvature = ops.grid.edge_d2U.dot(grad.cwiseAbs2());
    r.residual = r.lo_sq - r.hess_sq - r.curvature;
    r.inequality_holds = r.hess_sq <= r.lo_sq + r.K * r.grad_sq + std::abs(r.residual);
    r.strict_inequality_holds = r.hess_sq <= r.lo_sq + r.K * r.grad_sq;
    return r;
}

}  // namespace hypolab
