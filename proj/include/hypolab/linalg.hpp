#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "hypolab/error.hpp"

namespace hypolab {

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

/// Largest problem size handled with dense factorizations.
inline constexpr Eigen::Index dense_limit = 4096;

inline double max_abs(const SpMat& m) {
    double r = 0.0;
    for (int k = 0; k < m.outerSize(); ++k)
        for (SpMat::InnerIterator it(m, k); it; ++it) r = std::max(r, std::abs(it.value()));
    return r;
}

inline SpMat identity(Eigen::Index n) {
    SpMat id(n, n);
    id.setIdentity();
    return id;
}

/// Kronecker product in mode-major order: (a ⊗ b)[(k,i),(l,j)] = a[k,l] b[i,j].
inline SpMat kron(const SpMat& a, const SpMat& b) {
    std::vector<Triplet> t;
    t.reserve(static_cast<size_t>(a.nonZeros() * b.nonZeros()));
    for (int ka = 0; ka < a.outerSize(); ++ka)
        for (SpMat::InnerIterator ia(a, ka); ia; ++ia)
            for (int kb = 0; kb < b.outerSize(); ++kb)
                for (SpMat::InnerIterator ib(b, kb); ib; ++ib)
                    t.emplace_back(ia.row() * b.rows() + ib.row(), ia.col() * b.cols() + ib.col(),
                                   ia.value() * ib.value());
    SpMat r(a.rows() * b.rows(), a.cols() * b.cols());
    r.setFromTriplets(t.begin(), t.end());
    return r;
}

/// Largest singular value.
///
/// Rows and columns that are identically zero are removed first (this does
/// not change the nonzero singular values). The compressed matrix is handled
/// by a dense SVD when it fits under dense_limit, otherwise by power
/// iteration on the normal matrix.
inline double operator_norm(const SpMat& m, int max_iter = 10000, double tol = 1e-13) {
    std::vector<int> rows_used(m.rows(), -1), cols_used(m.cols(), -1);
    int nr = 0, nc = 0;
    for (int k = 0; k < m.outerSize(); ++k)
        for (SpMat::InnerIterator it(m, k); it; ++it) {
            if (it.value() == 0.0) continue;
            if (rows_used[it.row()] < 0) rows_used[it.row()] = nr++;
            if (cols_used[it.col()] < 0) cols_used[it.col()] = nc++;
        }
    if (nr == 0) return 0.0;

    if (std::max(nr, nc) <= dense_limit) {
        Eigen::MatrixXd d = Eigen::MatrixXd::Zero(nr, nc);
        for (int k = 0; k < m.outerSize(); ++k)
            for (SpMat::InnerIterator it(m, k); it; ++it)
                if (it.value() != 0.0) d(rows_used[it.row()], cols_used[it.col()]) += it.value();
        Eigen::BDCSVD<Eigen::MatrixXd> svd(d);
        return svd.singularValues()(0);
    }

    Eigen::VectorXd x = Eigen::VectorXd::Ones(m.cols()).normalized();
    double prev = 0.0;
    for (int it = 0; it < max_iter; ++it) {
        Eigen::VectorXd y = m.transpose() * (m * x);
        const double lambda = x.dot(y);
        const double ny = y.norm();
        if (ny == 0.0) return 0.0;
        x = y / ny;
        if (it > 10 && std::abs(lambda - prev) <= tol * std::abs(lambda)) return std::sqrt(lambda);
        prev = lambda;
    }
    throw NumericalError("operator_norm: power iteration did not converge");
}

/// Smallest eigenvalue of a symmetric matrix given by its action.
///
/// Lanczos with full reorthogonalisation for a Ritz estimate, refined by
/// shifted inverse iteration with a sparse LU of (Q - sigma I).
inline double smallest_eigenvalue_large(const SpMat& q, int krylov = 300, int max_iter = 200) {
    const Eigen::Index n = q.rows();
    const int kdim = static_cast<int>(std::min<Eigen::Index>(krylov, n));
    Eigen::MatrixXd basis(n, kdim);
    Eigen::VectorXd alpha(kdim), beta(kdim);
    Eigen::VectorXd v = Eigen::VectorXd::Ones(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) += 1e-3 * std::sin(0.7 * static_cast<double>(i));
    v.normalize();
    int used = 0;
    for (int j = 0; j < kdim; ++j) {
        basis.col(j) = v;
        Eigen::VectorXd w = q * v;
        alpha(j) = v.dot(w);
        for (int r = 0; r < 2; ++r)
            w -= basis.leftCols(j + 1) * (basis.leftCols(j + 1).transpose() * w);
        beta(j) = w.norm();
        used = j + 1;
        if (beta(j) < 1e-12) break;
        v = w / beta(j);
    }
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(used, used);
    for (int j = 0; j < used; ++j) {
        t(j, j) = alpha(j);
        if (j + 1 < used) t(j, j + 1) = t(j + 1, j) = beta(j);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
    double lambda = es.eigenvalues()(0);
    Eigen::VectorXd x = basis.leftCols(used) * es.eigenvectors().col(0);

    const double sigma = lambda - 1e-6 * std::max(1.0, std::abs(lambda));
    SpMat shifted = q - sigma * identity(n);
    Eigen::SparseLU<SpMat> lu;
    lu.compute(shifted);
    if (lu.info() != Eigen::Success) throw NumericalError("smallest_eigenvalue: factorisation failed");
    for (int it = 0; it < max_iter; ++it) {
        Eigen::VectorXd y = lu.solve(x);
        x = y.normalized();
        const double next = x.dot(q * x);
        if (std::abs(next - lambda) <= 1e-13 * std::max(1.0, std::abs(next))) return next;
        lambda = next;
    }
    return lambda;
}

}  // namespace hypolab
