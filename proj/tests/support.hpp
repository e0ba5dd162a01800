#pragma once

// Fixtures and independent oracles shared by the unit and acceptance tests.

#include <unsupported/Eigen/KroneckerProduct>

#include <cmath>
#include <random>
#include <vector>

#include "domkit/domkit.hpp"

namespace fixtures {

using namespace domkit;

inline Polynomial poly(std::vector<double> descending) { return Polynomial::from_descending(std::move(descending)); }

/// 10 / ((s^2 + 2s + 2)(s + 3))
inline TransferFunction third_order() { return TransferFunction(Polynomial{10.0}, poly({1, 2, 2}) * poly({1, 3})); }

/// M / ((s + b1)(s + b2)(s + b3))
inline TransferFunction three_pole(double M, double b1, double b2, double b3) {
    return TransferFunction(Polynomial{M}, poly({1, b1}) * poly({1, b2}) * poly({1, b3}));
}

/// Modal realisation of three_pole: A = diag(-b), B = ones, C = residues.
inline StateSpace three_pole_modal(double M, double b1, double b2, double b3) {
    StateSpace s;
    s.A = Matrix::Zero(3, 3);
    s.A.diagonal() << -b1, -b2, -b3;
    s.B = Matrix::Ones(3, 1);
    s.C = Matrix(1, 3);
    s.C << M / ((b2 - b1) * (b3 - b1)), M / ((b1 - b2) * (b3 - b2)), M / ((b1 - b3) * (b2 - b3));
    s.D = Matrix::Zero(1, 1);
    return s;
}

inline StateSpace kalman() {
    StateSpace s;
    s.A = Matrix(4, 4);
    s.A << 0, -1, 0, 0, 1, 0, 0, 0, 0, 0, 0, 1, 0, 0, -1, -1;
    s.B = Matrix(4, 1);
    s.B << 10, 10.1, 0, -1;
    s.C = Matrix(1, 4);
    s.C << 1, 0, -10.1, -0.1;
    s.D = Matrix::Zero(1, 1);
    return s;
}

inline StateSpace chua(double alpha = 8.8, double beta = 15.0) {
    StateSpace s;
    s.A = Matrix(3, 3);
    s.A << -alpha, alpha, 0, 1, -1, 1, 0, -beta, 0;
    s.B = Matrix(3, 1);
    s.B << -alpha, 0, 0;
    s.C = Matrix(1, 3);
    s.C << 1, 0, 0;
    s.D = Matrix::Zero(1, 1);
    return s;
}

/// 3(s + 1) / ((s^2 + 4s + 8)(s + 3))
inline TransferFunction plant() { return TransferFunction(poly({3, 3}), poly({1, 4, 8}) * poly({1, 3})); }
/// 0.4 / (s + 0.2)
inline TransferFunction lag() { return TransferFunction(Polynomial{0.4}, poly({1, 0.2})); }
/// Linear part seen by u = -phi(y) under positive feedback: -K G C.
inline TransferFunction controlled_loop(double K) { return -K * (plant() * lag()); }

inline Matrix companion(const Polynomial& p) { return realize(TransferFunction(Polynomial{1.0}, p)).A; }

}  // namespace fixtures

namespace oracle {

using namespace domkit;

/// Lyapunov solve through the n^2 x n^2 Kronecker system (I (x) A^T + A^T (x) I) vec P = -vec Q.
inline Matrix kron_lyapunov(const Matrix& A, const Matrix& Q) {
    const Eigen::Index n = A.rows();
    const Matrix I = Matrix::Identity(n, n);
    const Matrix K = Eigen::kroneckerProduct(I, A.transpose()) + Eigen::kroneckerProduct(A.transpose(), I);
    const Vector q = Eigen::Map<const Vector>(Q.data(), n * n);
    const Vector p = K.fullPivLu().solve(-q);
    return Eigen::Map<const Matrix>(p.data(), n, n);
}

/// det(sI - A) by the Faddeev-LeVerrier recursion (no eigenvalues involved).
inline Polynomial faddeev_leverrier(const Matrix& A) {
    const Eigen::Index n = A.rows();
    std::vector<double> desc{1.0};
    Matrix M = Matrix::Zero(n, n);
    double c = 1.0;
    for (Eigen::Index k = 1; k <= n; ++k) {
        M = A * M + c * Matrix::Identity(n, n);
        c = -(A * M).trace() / static_cast<double>(k);
        desc.push_back(c);
    }
    return Polynomial::from_descending(desc);
}

/// Number of sign changes in the first column of the Routh array (roots in the open RHP),
/// assuming no zero ever appears in the first column.
inline int routh_rhp_count(const Polynomial& p) {
    const auto d = p.descending();
    const std::size_t n = d.size();
    std::vector<std::vector<double>> rows(n);
    for (std::size_t i = 0; i < n; i += 2) rows[0].push_back(d[i]);
    for (std::size_t i = 1; i < n; i += 2) rows[1].push_back(d[i]);
    const std::size_t width = rows[0].size();
    for (auto& r : rows) r.resize(width + 1, 0.0);
    for (std::size_t i = 2; i < n; ++i) {
        for (std::size_t j = 0; j < width; ++j)
            rows[i][j] = (rows[i - 1][0] * rows[i - 2][j + 1] - rows[i - 2][0] * rows[i - 1][j + 1]) / rows[i - 1][0];
    }
    int changes = 0;
    for (std::size_t i = 1; i < n; ++i)
        if ((rows[i][0] < 0) != (rows[i - 1][0] < 0)) ++changes;
    return changes;
}

inline bool routh_hurwitz(const Polynomial& p) {
    const auto d = p.descending();
    for (double c : d)
        if (!(c * d.front() > 0)) return false;
    // A vanishing first-column entry signals roots on the imaginary axis.
    const std::size_t n = d.size();
    std::vector<std::vector<double>> rows(n);
    for (std::size_t i = 0; i < n; i += 2) rows[0].push_back(d[i]);
    for (std::size_t i = 1; i < n; i += 2) rows[1].push_back(d[i]);
    const std::size_t width = rows[0].size();
    for (auto& r : rows) r.resize(width + 1, 0.0);
    const double scale = std::abs(d.front()) + std::abs(d.back());
    for (std::size_t i = 2; i < n; ++i) {
        if (std::abs(rows[i - 1][0]) < 1e-12 * scale) return false;
        for (std::size_t j = 0; j < width; ++j)
            rows[i][j] = (rows[i - 1][0] * rows[i - 2][j + 1] - rows[i - 2][0] * rows[i - 1][j + 1]) / rows[i - 1][0];
    }
    for (std::size_t i = 0; i < n; ++i)
        if (!(rows[i][0] * d.front() > 1e-12 * scale)) return false;
    return true;
}

/// Random matrix with entries uniform in [-scale, scale].
inline Matrix random_matrix(std::mt19937& rng, Eigen::Index r, Eigen::Index c, double scale = 1.0) {
    std::uniform_real_distribution<double> u(-scale, scale);
    Matrix M(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) M(i, j) = u(rng);
    return M;
}

/// Direct evaluation of the 3-pole closed form of Re G(jw - lambda).
inline double three_pole_real_part(double M, double b1, double b2, double b3, double lambda, double w) {
    const double w2 = w * w;
    const double num = (3 * lambda - b1 - b2 - b3) * w2 + (b1 - lambda) * (b2 - lambda) * (b3 - lambda);
    const double den = (w2 + (b1 - lambda) * (b1 - lambda)) * (w2 + (b2 - lambda) * (b2 - lambda)) *
                       (w2 + (b3 - lambda) * (b3 - lambda));
    return M * num / den;
}

/// Certificate search for p-passivity of a SISO system: P ranges over the affine family with
/// P B = C^T and P (A + lambda I) B = -(A + lambda I)^T C^T; the free parameter is scanned for
/// the most negative max eigenvalue of (A + lambda I)^T P + P (A + lambda I).
struct SearchResult {
    Matrix P;
    double worst = 0.0;
};

inline SearchResult passivity_certificate_search(const StateSpace& sys, double lambda) {
    const Eigen::Index n = sys.states();
    const Matrix Al = sys.A + lambda * Matrix::Identity(n, n);
    std::vector<Matrix> basis;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i; j < n; ++j) {
            Matrix E = Matrix::Zero(n, n);
            E(i, j) = E(j, i) = 1.0;
            basis.push_back(E);
        }
    const auto m = static_cast<Eigen::Index>(basis.size());
    Matrix lhs(2 * n, m);
    for (Eigen::Index k = 0; k < m; ++k) {
        lhs.col(k).head(n) = basis[static_cast<std::size_t>(k)] * sys.B;
        lhs.col(k).tail(n) = basis[static_cast<std::size_t>(k)] * Al * sys.B;
    }
    Vector rhs(2 * n);
    rhs.head(n) = sys.C.transpose();
    rhs.tail(n) = -(Al.transpose() * sys.C.transpose());
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(lhs);
    const Vector x0 = cod.solve(rhs);
    Eigen::FullPivLU<Matrix> lu(lhs);
    const Matrix null = lu.kernel();

    auto assemble = [&](const Vector& x) {
        Matrix P = Matrix::Zero(n, n);
        for (Eigen::Index k = 0; k < m; ++k) P += x(k) * basis[static_cast<std::size_t>(k)];
        return P;
    };
    auto cost = [&](double t) {
        const Matrix P = assemble(x0 + null.col(0) * t);
        return max_symmetric_eigenvalue(Al.transpose() * P + P * Al);
    };
    double best_t = 0.0, best = cost(0.0);
    for (int i = 0; i <= 20000; ++i) {
        const double t = -100.0 + 200.0 * i / 20000.0;
        const double c = cost(t);
        if (c < best) {
            best = c;
            best_t = t;
        }
    }
    double a = best_t - 0.01, b = best_t + 0.01;
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int it = 0; it < 100; ++it) {
        const double c = b - g * (b - a), d = a + g * (b - a);
        if (cost(c) < cost(d))
            b = d;
        else
            a = c;
    }
    if (cost(0.5 * (a + b)) < best) best_t = 0.5 * (a + b);
    SearchResult r;
    r.P = assemble(x0 + null.col(0) * best_t);
    r.worst = cost(best_t);
    return r;
}

}  // namespace oracle
