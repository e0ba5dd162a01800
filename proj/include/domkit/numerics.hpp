#pragma once

// Dense linear algebra for the small systems handled by domkit (n <= ~20).

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "domkit/error.hpp"

namespace domkit {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;

/// Counts of eigenvalues of a symmetric matrix by sign.
struct Inertia {
    int positive = 0;
    int zero = 0;
    int negative = 0;

    int dimension() const { return positive + zero + negative; }
    friend bool operator==(const Inertia&, const Inertia&) = default;
};

inline std::string to_string(const Inertia& in) {
    return "(" + std::to_string(in.positive) + ", " + std::to_string(in.zero) + ", " +
           std::to_string(in.negative) + ")";
}

/// Counts of (complex) eigenvalues by half plane; `boundary` holds |Re| <= tol.
struct SpectralSplit {
    int right = 0;
    int boundary = 0;
    int left = 0;
};

inline bool all_finite(const Matrix& M) { return M.allFinite(); }

inline void require_square(const Matrix& M, const char* what) {
    if (M.rows() != M.cols())
        throw Error(ErrorCode::invalid_argument, std::string(what) + ": matrix is not square");
    if (!M.allFinite())
        throw Error(ErrorCode::invalid_argument, std::string(what) + ": non-finite entry");
}

/// Diagonal similarity scaling (powers of two) that equalises row and column norms.
inline Matrix balance(Matrix M) {
    constexpr double radix = 2.0;
    constexpr double radix2 = radix * radix;
    const Eigen::Index n = M.rows();
    for (int sweep = 0; sweep < 100; ++sweep) {
        bool done = true;
        for (Eigen::Index i = 0; i < n; ++i) {
            double c = 0.0, r = 0.0;
            for (Eigen::Index j = 0; j < n; ++j) {
                if (j == i) continue;
                c += std::abs(M(j, i));
                r += std::abs(M(i, j));
            }
            if (c == 0.0 || r == 0.0) continue;
            const double s = c + r;
            double f = 1.0;
            double g = r / radix;
            while (c < g) {
                f *= radix;
                c *= radix2;
            }
            g = r * radix;
            while (c > g) {
                f /= radix;
                c /= radix2;
            }
            if ((c + r) / f < 0.95 * s) {
                done = false;
                M.row(i) /= f;
                M.col(i) *= f;
            }
        }
        if (done) break;
    }
    return M;
}

/// All eigenvalues with multiplicity. Real input yields conjugate-closed output.
inline std::vector<Complex> eigenvalues(const Matrix& M) {
    require_square(M, "eigenvalues");
    const Eigen::Index n = M.rows();
    if (n == 0) return {};
    if (n == 1) return {Complex(M(0, 0), 0.0)};
    Eigen::EigenSolver<Matrix> solver(balance(M), /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success)
        throw Error(ErrorCode::not_converged, "eigenvalues: QR iteration did not converge");
    const auto& ev = solver.eigenvalues();
    return {ev.data(), ev.data() + n};
}

inline SpectralSplit spectral_split(const std::vector<Complex>& eigs, double tol) {
    SpectralSplit split;
    for (const auto& z : eigs) {
        if (z.real() > tol)
            ++split.right;
        else if (z.real() < -tol)
            ++split.left;
        else
            ++split.boundary;
    }
    return split;
}

inline double default_inertia_tol(const Matrix& S) { return 1e-9 * std::max(1.0, S.norm()); }

/// Inertia of a symmetric matrix; eigenvalues with magnitude <= tol count as zero.
inline Inertia symmetric_inertia(const Matrix& S, std::optional<double> tol = std::nullopt) {
    require_square(S, "symmetric_inertia");
    const double asym = (S - S.transpose()).cwiseAbs().maxCoeff();
    if (S.size() > 0 && asym > 1e-12 * S.norm())
        throw Error(ErrorCode::invalid_argument, "symmetric_inertia: matrix is not symmetric");
    const double t = tol.value_or(default_inertia_tol(S));
    Inertia in;
    if (S.size() == 0) return in;
    Eigen::SelfAdjointEigenSolver<Matrix> solver(S, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success)
        throw Error(ErrorCode::not_converged, "symmetric_inertia: eigensolver did not converge");
    for (Eigen::Index i = 0; i < S.rows(); ++i) {
        const double ev = solver.eigenvalues()(i);
        if (ev > t)
            ++in.positive;
        else if (ev < -t)
            ++in.negative;
        else
            ++in.zero;
    }
    return in;
}

inline double max_symmetric_eigenvalue(const Matrix& S) {
    Matrix sym = 0.5 * (S + S.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> solver(sym, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success)
        throw Error(ErrorCode::not_converged, "eigensolver did not converge");
    return solver.eigenvalues().maxCoeff();
}

/// Solves A^T P + P A = -Q by Bartels-Stewart on the complex Schur form of A.
///
/// When A has eigenvalues with lambda_i + conj(lambda_j) = 0 the operator is
/// singular; a consistent right-hand side still yields a solution (the null
/// component is set to zero), an inconsistent one throws ErrorCode::singular.
inline Matrix solve_lyapunov(const Matrix& A, const Matrix& Q) {
    require_square(A, "solve_lyapunov");
    require_square(Q, "solve_lyapunov");
    const Eigen::Index n = A.rows();
    if (Q.rows() != n) throw Error(ErrorCode::invalid_argument, "solve_lyapunov: size mismatch");
    if ((Q - Q.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, Q.norm()))
        throw Error(ErrorCode::invalid_argument, "solve_lyapunov: Q is not symmetric");
    if (n == 0) return Matrix(0, 0);

    Eigen::ComplexSchur<ComplexMatrix> schur(A.cast<Complex>());
    if (schur.info() != Eigen::Success)
        throw Error(ErrorCode::not_converged, "solve_lyapunov: Schur decomposition failed");
    const ComplexMatrix& T = schur.matrixT();
    const ComplexMatrix& U = schur.matrixU();

    const ComplexMatrix rhs = -(U.adjoint() * Q.cast<Complex>() * U);
    ComplexMatrix Y = ComplexMatrix::Zero(n, n);
    const double pair_tol = 1e-12 * std::max(1.0, A.norm());
    const double rhs_tol = 1e-10 * std::max(1.0, Q.norm());

    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            Complex acc = rhs(i, j);
            for (Eigen::Index k = 0; k < i; ++k) acc -= std::conj(T(k, i)) * Y(k, j);
            for (Eigen::Index k = 0; k < j; ++k) acc -= Y(i, k) * T(k, j);
            const Complex d = std::conj(T(i, i)) + T(j, j);
            if (std::abs(d) <= pair_tol) {
                if (std::abs(acc) > rhs_tol)
                    throw Error(ErrorCode::singular,
                                "solve_lyapunov: eigenvalue pair sums to zero (singular operator)");
                Y(i, j) = 0.0;
            } else {
                Y(i, j) = acc / d;
            }
        }
    }

    Matrix P = (U * Y * U.adjoint()).real();
    P = 0.5 * (P + P.transpose());

    const double residual = (A.transpose() * P + P * A + Q).norm();
    if (!P.allFinite() || residual > 1e-8 * (A.norm() * P.norm() + Q.norm()))
        throw Error(ErrorCode::singular, "solve_lyapunov: residual check failed (ill-conditioned)");
    return P;
}

}  // namespace domkit
