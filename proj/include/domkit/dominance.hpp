#pragma once

// Dominance and dissipativity certificates, the frequency-domain dissipativity
// test, relative-degree necessary conditions and the pointwise gain scan.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "domkit/frequency.hpp"
#include "domkit/lti.hpp"
#include "domkit/numerics.hpp"

namespace domkit {

/// Quadratic supply s(y, u) = [y; u]^T [[Q, L], [L^T, R]] [y; u].
struct Supply {
    Matrix Q;
    Matrix L;
    Matrix R;

    void validate() const {
        if (Q.rows() != Q.cols() || R.rows() != R.cols() || L.rows() != Q.rows() || L.cols() != R.rows())
            throw Error(ErrorCode::invalid_argument, "Supply: inconsistent block sizes");
        if (!Q.allFinite() || !L.allFinite() || !R.allFinite())
            throw Error(ErrorCode::invalid_argument, "Supply: non-finite entry");
        if (Q.size() && (Q - Q.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, Q.norm()))
            throw Error(ErrorCode::invalid_argument, "Supply: Q is not symmetric");
        if (R.size() && (R - R.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, R.norm()))
            throw Error(ErrorCode::invalid_argument, "Supply: R is not symmetric");
    }

    bool is_scalar() const { return Q.rows() == 1 && R.rows() == 1; }
    double q() const { return Q(0, 0); }
    double l() const { return L(0, 0); }
    double r() const { return R(0, 0); }

    static Supply scalar(double q, double l, double r) {
        Supply s{Matrix::Constant(1, 1, q), Matrix::Constant(1, 1, l), Matrix::Constant(1, 1, r)};
        s.validate();
        return s;
    }
    static Supply zero(int m = 1) {
        return {Matrix::Zero(m, m), Matrix::Zero(m, m), Matrix::Zero(m, m)};
    }
    static Supply p_passive(int m = 1) {
        return {Matrix::Zero(m, m), Matrix::Identity(m, m), Matrix::Zero(m, m)};
    }
    static Supply strictly_output_passive(double eps, int m = 1) {
        return {-eps * Matrix::Identity(m, m), Matrix::Identity(m, m), Matrix::Zero(m, m)};
    }
    static Supply strictly_input_passive(double delta, int m = 1) {
        return {Matrix::Zero(m, m), Matrix::Identity(m, m), -delta * Matrix::Identity(m, m)};
    }
    /// Linear-side supply for a loop u = -phi(y) with slope of phi in [K1, K2].
    /// Evaluated on [G; 1] it equals 2 Re{(1 + K2 G) conj(1 + K1 G)}.
    static Supply sector(double k1, double k2) { return scalar(2.0 * k1 * k2, k1 + k2, 2.0); }
};

/// Supply rate per unit dy^2 along the graph of a linearised feedback du = -slope * dy.
/// A nonlinearity with this slope is compatible with the supply iff the value is <= 0.
inline double supply_along_feedback(const Supply& s, double slope) {
    if (!s.is_scalar()) throw Error(ErrorCode::invalid_argument, "supply_along_feedback: scalar supply required");
    return s.q() - 2.0 * s.l() * slope + s.r() * slope * slope;
}

struct DominanceCertificate {
    Matrix P;
    double eps = 0.0;
    double lambda = 0.0;
    int p = 0;

    bool strict() const { return eps > 0.0; }
};

inline double default_certificate_tol(const Matrix& A, const DominanceCertificate& cert) {
    return 1e-9 * std::max(1.0, cert.P.norm() * (A.norm() + std::abs(cert.lambda) + 1.0));
}

/// Lyapunov construction: P solves (A + lambda I)^T P + P (A + lambda I) = -I.
inline DominanceCertificate build_dominance_certificate(const Matrix& A, double lambda) {
    require_square(A, "build_dominance_certificate");
    if (!(lambda >= 0.0) || !std::isfinite(lambda))
        throw Error(ErrorCode::invalid_argument, "build_dominance_certificate: lambda must be finite and >= 0");
    const Eigen::Index n = A.rows();
    const Matrix shifted = A + lambda * Matrix::Identity(n, n);
    const auto split = spectral_split(eigenvalues(shifted), 1e-9 * std::max(1.0, shifted.norm()));
    if (split.boundary > 0)
        throw Error(ErrorCode::boundary_pole, "no strict certificate at this rate: A + lambda I has an eigenvalue on the imaginary axis");
    DominanceCertificate cert;
    cert.P = solve_lyapunov(shifted, Matrix::Identity(n, n));
    cert.eps = 1.0;
    cert.lambda = lambda;
    cert.p = split.right;
    return cert;
}

namespace detail {
inline CheckResult check_inertia(const DominanceCertificate& cert, Eigen::Index n) {
    if (cert.p < 0 || cert.p > n) return CheckResult::fail("p out of range");
    if ((cert.P - cert.P.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, cert.P.norm()))
        return CheckResult::fail("P is not symmetric");
    const Inertia want{static_cast<int>(n) - cert.p, 0, cert.p};
    const Inertia got = symmetric_inertia(cert.P);
    if (!(got == want)) return CheckResult::fail("inertia mismatch: P has " + to_string(got) + ", need " + to_string(want));
    return CheckResult::pass();
}
}  // namespace detail

/// A^T P + P A + 2 lambda P + eps I <= tol and inertia(P) = (n-p, 0, p).
inline CheckResult verify_dominance_certificate(const Matrix& A, const DominanceCertificate& cert,
                                                std::optional<double> tol = std::nullopt) {
    if (A.rows() != A.cols() || cert.P.rows() != A.rows() || cert.P.cols() != A.cols())
        return CheckResult::fail("dimension mismatch");
    if (!A.allFinite() || !cert.P.allFinite()) return CheckResult::fail("non-finite entry");
    if (cert.eps < 0.0) return CheckResult::fail("eps must be >= 0");
    const Eigen::Index n = A.rows();
    if (n == 0) return CheckResult::pass();
    if (auto in = detail::check_inertia(cert, n); !in) return in;
    const Matrix lmi = A.transpose() * cert.P + cert.P * A + 2.0 * cert.lambda * cert.P +
                       cert.eps * Matrix::Identity(n, n);
    const double worst = max_symmetric_eigenvalue(lmi);
    const double t = tol.value_or(default_certificate_tol(A, cert));
    if (worst > t) return CheckResult::fail("dissipation inequality violated: max eigenvalue " + std::to_string(worst));
    return CheckResult::pass();
}

/// Block LMI
///   [[A^T P + P A - C^T Q C + 2 lambda P + eps I,  P B - C^T L - C^T Q D],
///    [.,                                           -R - D^T L - L^T D - D^T Q D]] <= tol.
inline CheckResult verify_dissipativity_certificate(const StateSpace& sys, const Supply& supply,
                                                    const DominanceCertificate& cert,
                                                    std::optional<double> tol = std::nullopt) {
    try {
        sys.validate();
        supply.validate();
    } catch (const Error& e) {
        return CheckResult::fail(e.what());
    }
    const Eigen::Index n = sys.states(), m = sys.inputs(), k = sys.outputs();
    if (supply.Q.rows() != k || supply.R.rows() != m) return CheckResult::fail("supply dimensions do not match the system");
    if (cert.P.rows() != n || cert.P.cols() != n) return CheckResult::fail("dimension mismatch");
    if (!cert.P.allFinite()) return CheckResult::fail("non-finite entry");
    if (cert.eps < 0.0) return CheckResult::fail("eps must be >= 0");
    if (auto in = detail::check_inertia(cert, n); !in) return in;

    const Matrix& A = sys.A;
    const Matrix& B = sys.B;
    const Matrix& C = sys.C;
    const Matrix& D = sys.D;
    const Matrix& P = cert.P;
    Matrix lmi(n + m, n + m);
    lmi.topLeftCorner(n, n) = A.transpose() * P + P * A - C.transpose() * supply.Q * C + 2.0 * cert.lambda * P +
                              cert.eps * Matrix::Identity(n, n);
    const Matrix xu = P * B - C.transpose() * supply.L - C.transpose() * supply.Q * D;
    lmi.topRightCorner(n, m) = xu;
    lmi.bottomLeftCorner(m, n) = xu.transpose();
    lmi.bottomRightCorner(m, m) = -supply.R - D.transpose() * supply.L - supply.L.transpose() * D -
                                  D.transpose() * supply.Q * D;
    const double worst = max_symmetric_eigenvalue(lmi);
    const double scale = std::max(1.0, P.norm() * (A.norm() + std::abs(cert.lambda) + B.norm() + 1.0) +
                                           supply.Q.norm() * (1.0 + C.norm()) * (1.0 + C.norm()) +
                                           supply.L.norm() * (1.0 + C.norm()) + supply.R.norm());
    const double t = tol.value_or(1e-9 * scale);
    if (worst > t) return CheckResult::fail("dissipation inequality violated: max eigenvalue " + std::to_string(worst));
    return CheckResult::pass();
}

struct KypReport {
    bool holds = false;
    bool strict = false;
    int p = 0;            // poles of G(s - lambda) in C+
    int requested_p = 0;
    double min_margin = 0.0;    // over grid and infinity
    double argmin_omega = 0.0;  // +inf when the minimum is the high-frequency limit
    double finite_min_margin = 0.0;
    double finite_argmin_omega = 0.0;
    double infinity_margin = 0.0;
    double strict_threshold = 0.0;
};

/// q(g) = Q |g|^2 + 2 L Re g + R.
inline double supply_form(const Supply& s, Complex g) {
    return s.q() * std::norm(g) + 2.0 * s.l() * g.real() + s.r();
}

inline double kyp_strict_threshold(const Supply& s) {
    return 1e-7 * (1.0 + std::abs(s.r()) + std::abs(s.l()) + std::abs(s.q()));
}

/// Frequency-domain p-dissipativity test for SISO G at rate lambda.
inline KypReport kyp_frequency_test(const TransferFunction& g, double lambda, const Supply& supply, int p,
                                    const FrequencyGrid& grid, std::optional<double> boundary_tol = std::nullopt) {
    supply.validate();
    if (!supply.is_scalar()) throw Error(ErrorCode::invalid_argument, "kyp_frequency_test: scalar supply required");
    if (!g.is_proper()) throw Error(ErrorCode::invalid_argument, "kyp_frequency_test: improper transfer function");
    grid.validate();
    const double tol = boundary_tol.value_or(default_boundary_tol(lambda));
    const TransferFunction h = shift(g, lambda);
    const auto split = spectral_split(h.poles(), tol);
    if (split.boundary > 0) throw Error(ErrorCode::boundary_pole, "kyp_frequency_test: boundary pole");

    KypReport rep;
    rep.p = split.right;
    rep.requested_p = p;
    rep.strict_threshold = kyp_strict_threshold(supply);
    rep.infinity_margin = supply_form(supply, Complex(h.high_frequency_gain(), 0.0));
    rep.finite_min_margin = std::numeric_limits<double>::infinity();
    for (double w : grid.omegas) {
        const double m = supply_form(supply, evaluate(h, Complex(0.0, w)));
        if (m < rep.finite_min_margin) {
            rep.finite_min_margin = m;
            rep.finite_argmin_omega = w;
        }
    }
    if (rep.infinity_margin < rep.finite_min_margin) {
        rep.min_margin = rep.infinity_margin;
        rep.argmin_omega = std::numeric_limits<double>::infinity();
    } else {
        rep.min_margin = rep.finite_min_margin;
        rep.argmin_omega = rep.finite_argmin_omega;
    }
    rep.holds = rep.p == p && rep.min_margin >= 0.0;
    rep.strict = rep.holds && rep.min_margin > rep.strict_threshold;
    return rep;
}

/// Admissible counts r of zeros in C+ for relative degree delta and degree p;
/// empty when the cell is excluded (delta > 2p + 1).
inline std::vector<int> passivity_table_cell(int delta, int p) {
    std::vector<int> out;
    if (delta < 0 || p < 0 || delta > 2 * p + 1) return out;
    const int lo = std::max(0, static_cast<int>(std::ceil(p - (delta + 1) / 2.0)));
    const int hi = static_cast<int>(std::floor(p - (delta - 1) / 2.0));
    for (int r = lo; r <= hi; ++r) out.push_back(r);
    return out;
}

/// Every p in 0..n compatible with the relative degree and zero count of G(s - lambda).
inline std::vector<int> passivity_degree_candidates(const TransferFunction& g, double lambda,
                                                    std::optional<double> tol = std::nullopt) {
    if (!g.is_proper()) throw Error(ErrorCode::invalid_argument, "passivity_degree_candidates: improper transfer function");
    const PoleZeroSplit split = pole_zero_split(g, lambda, tol);
    if (split.boundary_poles > 0) throw Error(ErrorCode::boundary_pole, "passivity_degree_candidates: boundary pole");
    if (split.boundary_zeros > 0) throw Error(ErrorCode::boundary_pole, "passivity_degree_candidates: boundary zero");
    const int delta = split.relative_degree();
    std::vector<int> out;
    for (int p = 0; p <= split.n_total; ++p) {
        const auto cell = passivity_table_cell(delta, p);
        if (std::find(cell.begin(), cell.end(), split.r) != cell.end()) out.push_back(p);
    }
    return out;
}

struct GainScan {
    bool all_hurwitz = true;
    int samples = 0;
    double worst_gain = 0.0;       // gain with the largest spectral abscissa
    double worst_abscissa = -std::numeric_limits<double>::infinity();
    std::optional<double> first_failure;
};

/// Sample gains: both endpoints plus log spacing (linear when the interval contains
/// non-positive values other than a zero left endpoint).
inline std::vector<double> scan_gains(double k1, double k2, int samples) {
    std::vector<double> out;
    if (samples < 2 || k1 == k2) return {k1, k2};
    if (k2 > 0.0 && k1 >= 0.0) {
        const double lo = k1 > 0.0 ? k1 : k2 * 1e-6;
        const int m = k1 > 0.0 ? samples : samples - 1;
        if (k1 == 0.0) out.push_back(0.0);
        const double a = std::log10(lo), b = std::log10(k2);
        for (int i = 0; i < m; ++i) out.push_back(std::pow(10.0, a + (b - a) * i / (m - 1)));
    } else {
        for (int i = 0; i < samples; ++i) out.push_back(k1 + (k2 - k1) * i / (samples - 1));
    }
    out.front() = k1;
    out.back() = k2;
    return out;
}

/// Hurwitz test of A - K B C for each sampled K in [K1, K2]. Necessary, not exhaustive.
inline GainScan pointwise_gain_stability_scan(const StateSpace& sys, double k1, double k2, int samples = 200) {
    sys.validate();
    if (!sys.is_siso()) throw Error(ErrorCode::invalid_argument, "pointwise_gain_stability_scan: SISO only");
    if (!(k1 <= k2)) throw Error(ErrorCode::invalid_argument, "pointwise_gain_stability_scan: requires K1 <= K2");
    GainScan out;
    for (double k : scan_gains(k1, k2, samples)) {
        const Matrix closed = sys.A - k * sys.B * sys.C;
        double abscissa = -std::numeric_limits<double>::infinity();
        for (const auto& z : eigenvalues(closed)) abscissa = std::max(abscissa, z.real());
        ++out.samples;
        if (abscissa > out.worst_abscissa) {
            out.worst_abscissa = abscissa;
            out.worst_gain = k;
        }
        const bool hurwitz = abscissa < -1e-12 * (1.0 + closed.norm());
        if (!hurwitz && out.all_hurwitz) {
            out.all_hurwitz = false;
            out.first_failure = k;
        }
    }
    return out;
}

}  // namespace domkit
