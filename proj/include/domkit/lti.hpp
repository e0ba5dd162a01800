#pragma once

// Polynomials, SISO transfer functions and state-space models.

#include <algorithm>
#include <cmath>
#include <complex>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "domkit/log.hpp"
#include "domkit/numerics.hpp"

namespace domkit {

/// Real polynomial, coefficients in ascending degree order.
class Polynomial {
   public:
    Polynomial() = default;

    explicit Polynomial(std::vector<double> ascending) : c_(std::move(ascending)) {
        for (double v : c_)
            if (!std::isfinite(v))
                throw Error(ErrorCode::invalid_argument, "Polynomial: non-finite coefficient");
        trim();
    }

    Polynomial(std::initializer_list<double> ascending)
        : Polynomial(std::vector<double>(ascending)) {}

    /// Coefficients listed from the highest power down, as control toolboxes write them.
    static Polynomial from_descending(std::vector<double> descending) {
        std::reverse(descending.begin(), descending.end());
        return Polynomial(std::move(descending));
    }

    /// leading * prod (s - r_i); imaginary parts of the product are discarded.
    static Polynomial from_roots(std::span<const Complex> roots, double leading = 1.0) {
        std::vector<Complex> acc{Complex(1.0)};
        for (const auto& r : roots) {
            std::vector<Complex> next(acc.size() + 1, Complex(0.0));
            for (std::size_t k = 0; k < acc.size(); ++k) {
                next[k + 1] += acc[k];
                next[k] -= r * acc[k];
            }
            acc = std::move(next);
        }
        std::vector<double> out(acc.size());
        for (std::size_t k = 0; k < acc.size(); ++k) out[k] = leading * acc[k].real();
        return Polynomial(std::move(out));
    }

    bool is_zero() const { return c_.empty(); }
    /// Degree; the zero polynomial reports 0 (check is_zero()).
    int degree() const { return c_.empty() ? 0 : static_cast<int>(c_.size()) - 1; }
    double leading() const { return c_.empty() ? 0.0 : c_.back(); }
    double operator[](int k) const {
        return (k >= 0 && k < static_cast<int>(c_.size())) ? c_[k] : 0.0;
    }
    const std::vector<double>& coefficients() const { return c_; }

    std::vector<double> descending() const { return {c_.rbegin(), c_.rend()}; }

    template <typename T>
    T operator()(T s) const {
        T acc(0.0);
        for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * s + T(*it);
        return acc;
    }

    /// sum |c_k| |s|^k, the scale against which |p(s)| is judged small.
    double magnitude_scale(double abs_s) const {
        double acc = 0.0;
        for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * abs_s + std::abs(*it);
        return acc;
    }

    /// p(s - lambda), re-expanded with binomial coefficients.
    Polynomial shifted(double lambda) const {
        const std::size_t m = c_.size();
        std::vector<double> out(m, 0.0);
        for (std::size_t k = 0; k < m; ++k) {
            // (s - lambda)^k = sum_i C(k,i) s^i (-lambda)^(k-i)
            double binom = 1.0;
            for (std::size_t i = k + 1; i-- > 0;) {
                // i runs k..0; binom = C(k, i)
                out[i] += c_[k] * binom * std::pow(-lambda, static_cast<double>(k - i));
                binom = binom * static_cast<double>(i) / static_cast<double>(k - i + 1);
            }
        }
        return Polynomial(std::move(out));
    }

    Polynomial derivative() const {
        if (c_.size() <= 1) return {};
        std::vector<double> out(c_.size() - 1);
        for (std::size_t k = 1; k < c_.size(); ++k) out[k - 1] = static_cast<double>(k) * c_[k];
        return Polynomial(std::move(out));
    }

    /// Zeroes coefficients below rel_tol * max|c| and drops resulting leading zeros.
    Polynomial cleaned(double rel_tol) const {
        if (c_.empty()) return {};
        double big = 0.0;
        for (double v : c_) big = std::max(big, std::abs(v));
        std::vector<double> out = c_;
        for (double& v : out)
            if (std::abs(v) <= rel_tol * big) v = 0.0;
        return Polynomial(std::move(out));
    }

    friend Polynomial operator+(const Polynomial& a, const Polynomial& b) {
        std::vector<double> out(std::max(a.c_.size(), b.c_.size()), 0.0);
        for (std::size_t k = 0; k < out.size(); ++k) out[k] = a[int(k)] + b[int(k)];
        return Polynomial(std::move(out));
    }
    friend Polynomial operator-(const Polynomial& a, const Polynomial& b) { return a + (-1.0) * b; }
    friend Polynomial operator*(double k, const Polynomial& p) {
        std::vector<double> out = p.c_;
        for (double& v : out) v *= k;
        return Polynomial(std::move(out));
    }
    friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
        if (a.is_zero() || b.is_zero()) return {};
        std::vector<double> out(a.c_.size() + b.c_.size() - 1, 0.0);
        for (std::size_t i = 0; i < a.c_.size(); ++i)
            for (std::size_t j = 0; j < b.c_.size(); ++j) out[i + j] += a.c_[i] * b.c_[j];
        return Polynomial(std::move(out));
    }

   private:
    void trim() {
        while (!c_.empty() && c_.back() == 0.0) c_.pop_back();
    }

    std::vector<double> c_;
};

/// Roots via eigenvalues of the balanced companion matrix, polished by Newton steps.
inline std::vector<Complex> poly_roots(const Polynomial& p) {
    if (p.is_zero()) throw Error(ErrorCode::invalid_argument, "poly_roots: zero polynomial");
    const int n = p.degree();
    if (n == 0) return {};

    // Exact roots at the origin come off first; the companion form handles them poorly.
    int zeros_at_origin = 0;
    while (p[zeros_at_origin] == 0.0) ++zeros_at_origin;
    std::vector<double> reduced(p.coefficients().begin() + zeros_at_origin, p.coefficients().end());
    const Polynomial q(std::move(reduced));
    const int m = q.degree();

    std::vector<Complex> roots(zeros_at_origin, Complex(0.0));
    if (m == 0) return roots;
    Matrix companion = Matrix::Zero(m, m);
    for (int k = 0; k < m; ++k) companion(0, k) = -q[m - 1 - k] / q.leading();
    for (int k = 1; k < m; ++k) companion(k, k - 1) = 1.0;
    auto found = eigenvalues(companion);

    const Polynomial dq = q.derivative();
    for (auto& z : found) {
        for (int it = 0; it < 3; ++it) {
            const Complex f = q(z);
            const Complex df = dq(z);
            if (std::abs(df) == 0.0) break;
            const Complex step = f / df;
            const Complex candidate = z - step;
            if (!(std::abs(q(candidate)) < std::abs(f))) break;
            z = candidate;
        }
    }
    // Restore exact conjugate symmetry broken by independent polishing.
    for (auto& z : found)
        if (std::abs(z.imag()) <= 1e-14 * std::max(1.0, std::abs(z))) z = Complex(z.real(), 0.0);
    roots.insert(roots.end(), found.begin(), found.end());
    return roots;
}

/// SISO rational function num(s)/den(s); the denominator is stored monic.
class TransferFunction {
   public:
    TransferFunction() : num_{}, den_{1.0} {}

    TransferFunction(Polynomial num, Polynomial den) : num_(std::move(num)), den_(std::move(den)) {
        if (den_.is_zero())
            throw Error(ErrorCode::invalid_argument, "TransferFunction: zero denominator");
        const double lead = den_.leading();
        if (lead != 1.0) {
            num_ = (1.0 / lead) * num_;
            den_ = (1.0 / lead) * den_;
        }
    }

    static TransferFunction from_descending(std::vector<double> num, std::vector<double> den) {
        return {Polynomial::from_descending(std::move(num)), Polynomial::from_descending(std::move(den))};
    }

    const Polynomial& num() const { return num_; }
    const Polynomial& den() const { return den_; }

    int order() const { return den_.degree(); }
    /// deg(den) - deg(num); the zero function counts as infinitely strictly proper.
    int relative_degree() const { return num_.is_zero() ? den_.degree() + 1 : den_.degree() - num_.degree(); }
    bool is_proper() const { return relative_degree() >= 0; }
    bool is_strictly_proper() const { return relative_degree() > 0; }

    /// Limit of G(s) as |s| -> infinity (the direct feedthrough).
    double high_frequency_gain() const {
        if (!is_proper()) throw Error(ErrorCode::invalid_argument, "transfer function is improper");
        return relative_degree() == 0 ? num_.leading() / den_.leading() : 0.0;
    }

    std::vector<Complex> poles() const { return poly_roots(den_); }
    std::vector<Complex> zeros() const { return num_.is_zero() ? std::vector<Complex>{} : poly_roots(num_); }

    friend TransferFunction operator*(const TransferFunction& a, const TransferFunction& b) {
        return {a.num_ * b.num_, a.den_ * b.den_};
    }
    friend TransferFunction operator*(double k, const TransferFunction& g) { return {k * g.num_, g.den_}; }

   private:
    Polynomial num_;
    Polynomial den_;
};

inline std::string to_string(const Polynomial& p) {
    std::ostringstream os;
    os.precision(10);
    os << "[";
    const auto d = p.descending();
    for (std::size_t k = 0; k < d.size(); ++k) os << (k ? ", " : "") << d[k];
    os << "]";
    return os.str();
}

inline std::string to_string(const TransferFunction& g) {
    return to_string(g.num()) + " / " + to_string(g.den());
}

/// Removes numerator/denominator root pairs closer than tol*(1+|root|).
///
/// Returns the input unchanged when nothing cancels; otherwise logs a warning
/// and rebuilds both polynomials from their surviving roots.
inline TransferFunction cancel_common_factors(const TransferFunction& g, double tol = 1e-7) {
    if (g.num().is_zero() || g.num().degree() == 0 || g.den().degree() == 0) return g;
    auto zs = g.zeros();
    auto ps = g.poles();
    std::vector<bool> zero_used(zs.size(), false);
    std::vector<Complex> kept_poles;
    int cancelled = 0;
    for (const auto& p : ps) {
        std::size_t best = zs.size();
        double best_d = 0.0;
        for (std::size_t i = 0; i < zs.size(); ++i) {
            if (zero_used[i]) continue;
            const double d = std::abs(zs[i] - p);
            if (d <= tol * (1.0 + std::abs(p)) && (best == zs.size() || d < best_d)) {
                best = i;
                best_d = d;
            }
        }
        if (best != zs.size()) {
            zero_used[best] = true;
            ++cancelled;
        } else {
            kept_poles.push_back(p);
        }
    }
    if (cancelled == 0) return g;
    std::vector<Complex> kept_zeros;
    for (std::size_t i = 0; i < zs.size(); ++i)
        if (!zero_used[i]) kept_zeros.push_back(zs[i]);
    log::warn("cancelled " + std::to_string(cancelled) +
              " near-common pole/zero pair(s); realization was not minimal");
    return {Polynomial::from_roots(kept_zeros, g.num().leading()),
            Polynomial::from_roots(kept_poles, g.den().leading())};
}

/// Continuous-time model x' = Ax + Bu, y = Cx + Du.
struct StateSpace {
    Matrix A, B, C, D;

    Eigen::Index states() const { return A.rows(); }
    Eigen::Index inputs() const { return B.cols(); }
    Eigen::Index outputs() const { return C.rows(); }
    bool is_siso() const { return inputs() == 1 && outputs() == 1; }

    void validate() const {
        require_square(A, "StateSpace");
        const auto n = A.rows();
        if (B.rows() != n || C.cols() != n || D.rows() != C.rows() || D.cols() != B.cols())
            throw Error(ErrorCode::invalid_argument, "StateSpace: incompatible dimensions");
        if (!B.allFinite() || !C.allFinite() || !D.allFinite())
            throw Error(ErrorCode::invalid_argument, "StateSpace: non-finite entry");
    }
};

inline Polynomial characteristic_polynomial(const Matrix& A) {
    const auto eig = eigenvalues(A);
    return Polynomial::from_roots(eig);
}

/// G(s) = C (sI - A)^{-1} B + D for a SISO model.
///
/// Uses C adj(sI - A) B = det(sI - A + BC) - det(sI - A), so the numerator is
/// charpoly(A - BC) - (1 - D) charpoly(A). Near-common roots are cancelled.
inline TransferFunction tf_from_statespace(const StateSpace& sys) {
    sys.validate();
    if (!sys.is_siso()) throw Error(ErrorCode::invalid_argument, "tf_from_statespace: system is not SISO");
    const double d = sys.D(0, 0);
    const Polynomial den = characteristic_polynomial(sys.A);
    const Polynomial closed = characteristic_polynomial(sys.A - sys.B * sys.C);
    std::vector<double> num(den.coefficients().size(), 0.0);
    double scale = 0.0;
    for (std::size_t k = 0; k < num.size(); ++k) {
        num[k] = closed[int(k)] - (1.0 - d) * den[int(k)];
        scale = std::max({scale, std::abs(closed[int(k)]), std::abs(den[int(k)])});
    }
    num.back() = d;
    for (std::size_t k = 0; k + 1 < num.size(); ++k)
        if (std::abs(num[k]) <= 1e-12 * scale) num[k] = 0.0;
    return cancel_common_factors(TransferFunction(Polynomial(std::move(num)), den));
}

/// Controllable canonical realization of a proper SISO transfer function.
inline StateSpace realize(const TransferFunction& g) {
    if (!g.is_proper()) throw Error(ErrorCode::invalid_argument, "realize: improper transfer function");
    const int n = g.order();
    const double d = g.high_frequency_gain();
    const Polynomial rem = g.num() - d * g.den();
    StateSpace sys{Matrix::Zero(n, n), Matrix::Zero(n, 1), Matrix::Zero(1, n), Matrix::Constant(1, 1, d)};
    for (int k = 0; k + 1 < n; ++k) sys.A(k, k + 1) = 1.0;
    for (int k = 0; k < n; ++k) {
        if (n > 0) sys.A(n - 1, k) = -g.den()[k];
        sys.C(0, k) = rem[k];
    }
    if (n > 0) sys.B(n - 1, 0) = 1.0;
    return sys;
}

/// H(s) = G(s - lambda).
inline TransferFunction shift(const TransferFunction& g, double lambda) {
    if (!std::isfinite(lambda) || lambda < 0.0)
        throw Error(ErrorCode::invalid_argument, "shift: rate must be finite and non-negative");
    return {g.num().shifted(lambda), g.den().shifted(lambda)};
}

inline Complex evaluate(const TransferFunction& g, Complex s) {
    const Complex d = g.den()(s);
    if (std::abs(d) <= 1e-13 * g.den().magnitude_scale(std::abs(s)))
        throw Error(ErrorCode::evaluation_at_pole, "evaluate: s is a pole of the transfer function");
    return g.num()(s) / d;
}

inline double default_boundary_tol(double lambda) { return 1e-9 * (1.0 + std::abs(lambda)); }

/// Pole/zero structure of G(s - lambda) relative to the imaginary axis.
struct PoleZeroSplit {
    int p = 0;        // poles in C+
    int n_total = 0;  // all poles
    int q = 0;        // finite zeros
    int r = 0;        // finite zeros in C+
    bool boundary = false;
    int boundary_poles = 0;
    int boundary_zeros = 0;

    int relative_degree() const { return n_total - q; }
};

inline PoleZeroSplit pole_zero_split(const TransferFunction& g, double lambda, std::optional<double> tol = std::nullopt) {
    const double t = tol.value_or(default_boundary_tol(lambda));
    const TransferFunction h = shift(g, lambda);
    const auto ps = spectral_split(h.poles(), t);
    const auto zs = spectral_split(h.zeros(), t);
    PoleZeroSplit out;
    out.p = ps.right;
    out.n_total = h.order();
    out.q = h.num().is_zero() ? 0 : h.num().degree();
    out.r = zs.right;
    out.boundary_poles = ps.boundary;
    out.boundary_zeros = zs.boundary;
    out.boundary = ps.boundary + zs.boundary > 0;
    return out;
}

/// G(0); throws when the origin is a pole.
inline double dc_gain(const TransferFunction& g) { return evaluate(g, Complex(0.0)).real(); }

}  // namespace domkit
