#pragma once

// Lur'e loop simulation, equilibria and a coarse attractor classifier.

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "domkit/lti.hpp"
#include "domkit/numerics.hpp"

namespace domkit {

/// Static scalar nonlinearity with its derivative and declared slope bounds.
struct Nonlinearity {
    std::string name = "zero";
    std::function<double(double)> value = [](double) { return 0.0; };
    std::function<double(double)> derivative = [](double) { return 0.0; };
    double k1 = 0.0;
    double k2 = 0.0;
    /// sup |phi| when finite; used for a-priori bounds.
    std::optional<double> bound = 0.0;

    double operator()(double y) const { return value(y); }

    static Nonlinearity zero() { return {}; }

    /// a * tanh(k y)
    static Nonlinearity scaled_tanh(double a, double k) { return tanh_plus_linear(a, k, 0.0); }

    /// a * tanh(k y) + slope * y
    static Nonlinearity tanh_plus_linear(double a, double k, double slope) {
        Nonlinearity f;
        f.name = "tanh_plus_linear";
        f.value = [=](double y) { return a * std::tanh(k * y) + slope * y; };
        f.derivative = [=](double y) {
            const double c = std::cosh(k * y);
            return a * k / (c * c) + slope;
        };
        f.k1 = std::min(slope, slope + a * k);
        f.k2 = std::max(slope, slope + a * k);
        f.bound = slope == 0.0 ? std::optional<double>(std::abs(a)) : std::nullopt;
        if (slope == 0.0) f.name = "tanh_scaled";
        return f;
    }

    /// Piecewise-linear interpolation through (ys[i], phis[i]); linear extrapolation at both ends.
    static Nonlinearity table(std::vector<double> ys, std::vector<double> phis) {
        if (ys.size() != phis.size() || ys.size() < 2)
            throw Error(ErrorCode::invalid_argument, "Nonlinearity::table: need at least two matching samples");
        for (std::size_t i = 0; i < ys.size(); ++i) {
            if (!std::isfinite(ys[i]) || !std::isfinite(phis[i]))
                throw Error(ErrorCode::invalid_argument, "Nonlinearity::table: non-finite sample");
            if (i > 0 && !(ys[i] > ys[i - 1]))
                throw Error(ErrorCode::invalid_argument, "Nonlinearity::table: abscissae must increase");
        }
        auto segment = [ys](double y) {
            const auto it = std::upper_bound(ys.begin(), ys.end(), y);
            std::size_t i = it == ys.begin() ? 0 : static_cast<std::size_t>(it - ys.begin()) - 1;
            return std::min(i, ys.size() - 2);
        };
        Nonlinearity f;
        f.name = "custom_table";
        f.derivative = [=](double y) {
            const std::size_t i = segment(y);
            return (phis[i + 1] - phis[i]) / (ys[i + 1] - ys[i]);
        };
        f.value = [=](double y) {
            const std::size_t i = segment(y);
            const double s = (phis[i + 1] - phis[i]) / (ys[i + 1] - ys[i]);
            return phis[i] + s * (y - ys[i]);
        };
        f.k1 = std::numeric_limits<double>::infinity();
        f.k2 = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i + 1 < ys.size(); ++i) {
            const double s = (phis[i + 1] - phis[i]) / (ys[i + 1] - ys[i]);
            f.k1 = std::min(f.k1, s);
            f.k2 = std::max(f.k2, s);
        }
        f.bound = std::nullopt;
        return f;
    }
};

/// Checks that sampled slopes over [lo, hi] stay inside [k1 - tol, k2 + tol].
inline CheckResult validate_sector(const Nonlinearity& phi, double k1, double k2, double lo = -10.0, double hi = 10.0,
                                   int samples = 2001, double tol = 1e-9) {
    for (int i = 0; i < samples; ++i) {
        const double y = lo + (hi - lo) * i / (samples - 1);
        const double d = phi.derivative(y);
        if (d < k1 - tol || d > k2 + tol)
            return CheckResult::fail("slope " + std::to_string(d) + " at y = " + std::to_string(y) + " leaves [" +
                                     std::to_string(k1) + ", " + std::to_string(k2) + "]");
    }
    return CheckResult::pass();
}

/// x' = A x + B u, y = C x, u = feedback_sign * phi(y).
struct LureLoop {
    StateSpace linear;
    Nonlinearity phi;
    int feedback_sign = -1;

    void validate() const {
        linear.validate();
        if (!linear.is_siso()) throw Error(ErrorCode::invalid_argument, "LureLoop: SISO linear part required");
        if (linear.D(0, 0) != 0.0)
            throw Error(ErrorCode::invalid_argument, "LureLoop: D = 0 required (algebraic loop)");
        if (feedback_sign != 1 && feedback_sign != -1)
            throw Error(ErrorCode::invalid_argument, "LureLoop: feedback_sign must be +1 or -1");
    }

    double output(const Vector& x) const { return (linear.C * x)(0, 0); }
    double input(const Vector& x) const { return feedback_sign * phi(output(x)); }
    Vector field(const Vector& x) const { return linear.A * x + linear.B.col(0) * input(x); }
};

struct Trajectory {
    std::vector<double> times;
    Matrix states;  // n x samples
    double dt = 0.0;
    bool diverged = false;

    Eigen::Index size() const { return states.cols(); }
    Vector state(Eigen::Index k) const { return states.col(k); }
};

/// Fixed-step classical Runge-Kutta from x0 over [0, T].
inline Trajectory simulate(const LureLoop& loop, const Vector& x0, double dt, double T) {
    loop.validate();
    if (!(dt > 0.0) || !(T >= dt) || !std::isfinite(T))
        throw Error(ErrorCode::invalid_argument, "simulate: need dt > 0 and T >= dt");
    if (x0.size() != loop.linear.states() || !x0.allFinite())
        throw Error(ErrorCode::invalid_argument, "simulate: x0 has the wrong size or a non-finite entry");
    const auto steps = static_cast<Eigen::Index>(std::llround(T / dt));
    Trajectory tr;
    tr.dt = dt;
    tr.states.resize(x0.size(), steps + 1);
    tr.times.reserve(static_cast<std::size_t>(steps + 1));
    Vector x = x0;
    tr.states.col(0) = x;
    tr.times.push_back(0.0);
    Eigen::Index k = 0;
    for (; k < steps; ++k) {
        const Vector k1 = loop.field(x);
        const Vector k2 = loop.field(x + 0.5 * dt * k1);
        const Vector k3 = loop.field(x + 0.5 * dt * k2);
        const Vector k4 = loop.field(x + dt * k3);
        x += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!x.allFinite() || x.norm() > 1e12) {
            tr.diverged = true;
            break;
        }
        tr.states.col(k + 1) = x;
        tr.times.push_back(static_cast<double>(k + 1) * dt);
    }
    if (tr.diverged) tr.states.conservativeResize(Eigen::NoChange, k + 1);
    return tr;
}

struct Equilibria {
    std::vector<double> inputs;  // u*
    std::vector<Vector> states;  // x* = -A^{-1} B u*
    double dc_gain = 0.0;        // G(0)
};

/// Roots of h(u) = u - feedback_sign * phi(G(0) u) on [lo, hi] by sign scan and bisection.
inline Equilibria equilibria(const LureLoop& loop, double lo = -100.0, double hi = 100.0, int samples = 20001) {
    loop.validate();
    if (!(lo < hi) || samples < 2) throw Error(ErrorCode::invalid_argument, "equilibria: bad search range");
    const Matrix& A = loop.linear.A;
    Eigen::FullPivLU<Matrix> lu(A);
    if (!lu.isInvertible()) throw Error(ErrorCode::singular, "equilibria: pole at s = 0 (A is singular)");
    const Vector a_inv_b = lu.solve(Matrix(loop.linear.B.col(0)));
    Equilibria out;
    out.dc_gain = -(loop.linear.C * a_inv_b)(0, 0);

    auto h = [&](double u) { return u - loop.feedback_sign * loop.phi(out.dc_gain * u); };
    auto add = [&](double u) {
        for (double v : out.inputs)
            if (std::abs(v - u) <= 1e-8 * std::max(1.0, std::abs(u))) return;
        out.inputs.push_back(u);
    };

    double u_prev = lo, h_prev = h(lo);
    if (h_prev == 0.0) add(lo);
    for (int i = 1; i < samples; ++i) {
        const double u = lo + (hi - lo) * i / (samples - 1);
        const double hu = h(u);
        if (hu == 0.0) {
            add(u);
        } else if (h_prev != 0.0 && (h_prev < 0.0) != (hu < 0.0)) {
            double a = u_prev, b = u, ha = h_prev;
            while (b - a > 1e-10 * std::max(1.0, std::abs(a))) {
                const double m = 0.5 * (a + b);
                const double hm = h(m);
                if (hm == 0.0) {
                    a = b = m;
                    break;
                }
                if ((hm < 0.0) == (ha < 0.0)) {
                    a = m;
                    ha = hm;
                } else {
                    b = m;
                }
            }
            add(0.5 * (a + b));
        }
        u_prev = u;
        h_prev = hu;
    }
    std::sort(out.inputs.begin(), out.inputs.end());
    for (double u : out.inputs) out.states.push_back(-a_inv_b * u);
    return out;
}

enum class AttractorKind { fixed_point, periodic, other, diverged };

inline const char* to_string(AttractorKind k) {
    switch (k) {
        case AttractorKind::fixed_point: return "fixed_point";
        case AttractorKind::periodic: return "periodic";
        case AttractorKind::other: return "other";
        case AttractorKind::diverged: return "diverged";
    }
    return "?";
}

struct AttractorLabel {
    AttractorKind kind = AttractorKind::other;
    Vector equilibrium;            // fixed_point witness
    std::optional<double> period;  // periodic witness
    double tail_diameter = 0.0;
    double recurrence_residual = std::numeric_limits<double>::infinity();
};

struct ClassifyOptions {
    double transient_fraction = 0.5;
    double fixed_point_tol = 1e-4;
    double recurrence_tol = 1e-3;
    Eigen::Index min_samples = 1000;
};

namespace detail {
/// max over the last period of |x(t + lag) - x(t)|, lag in samples (fractional, linear interpolation).
inline double recurrence_residual(const Matrix& tail, double lag) {
    const Eigen::Index n = tail.cols();
    const auto whole = static_cast<Eigen::Index>(std::floor(lag));
    const double frac = lag - static_cast<double>(whole);
    const auto span = static_cast<Eigen::Index>(std::ceil(lag));
    if (whole < 1 || n < 2 * span + 2) return std::numeric_limits<double>::infinity();
    double worst = 0.0;
    const Eigen::Index end = n - 2 - whole;
    for (Eigen::Index t = end - span; t <= end; ++t) {
        const Vector ahead = (1.0 - frac) * tail.col(t + whole) + frac * tail.col(t + whole + 1);
        worst = std::max(worst, (ahead - tail.col(t)).norm());
    }
    return worst;
}
}  // namespace detail

/// Labels the post-transient part of a trajectory.
inline AttractorLabel classify(const Trajectory& tr, const ClassifyOptions& opt = {}) {
    AttractorLabel label;
    if (tr.diverged) {
        label.kind = AttractorKind::diverged;
        return label;
    }
    if (!(opt.transient_fraction >= 0.0 && opt.transient_fraction < 1.0))
        throw Error(ErrorCode::invalid_argument, "classify: transient fraction must lie in [0, 1)");
    const Eigen::Index total = tr.size();
    const auto start = static_cast<Eigen::Index>(std::floor(opt.transient_fraction * static_cast<double>(total)));
    const Matrix tail = tr.states.rightCols(total - start);
    if (tail.cols() < opt.min_samples)
        throw Error(ErrorCode::invalid_argument, "classify: fewer than " + std::to_string(opt.min_samples) +
                                                     " post-transient samples");

    const Vector lo = tail.rowwise().minCoeff();
    const Vector hi = tail.rowwise().maxCoeff();
    const Vector mean = tail.rowwise().mean();
    label.tail_diameter = (hi - lo).norm();
    if (label.tail_diameter < opt.fixed_point_tol * (1.0 + mean.norm())) {
        label.kind = AttractorKind::fixed_point;
        label.equilibrium = tail.col(tail.cols() - 1);
        return label;
    }

    // Coarse period from the autocorrelation of the widest coordinate.
    Eigen::Index coord = 0;
    (hi - lo).maxCoeff(&coord);
    const Eigen::Index stride = std::max<Eigen::Index>(1, tail.cols() / 4096);
    std::vector<double> s;
    for (Eigen::Index k = 0; k < tail.cols(); k += stride) s.push_back(tail(coord, k));
    const double m = std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
    for (double& v : s) v -= m;
    const std::size_t N = s.size();
    auto acf = [&](std::size_t lag) {
        double num = 0.0;
        for (std::size_t i = 0; i + lag < N; ++i) num += s[i] * s[i + lag];
        return num / static_cast<double>(N - lag);
    };
    const double r0 = acf(0);
    if (!(r0 > 0.0)) {
        label.kind = AttractorKind::other;
        return label;
    }
    std::size_t lag = 1;
    while (lag < N / 2 && acf(lag) > 0.0) ++lag;
    const std::size_t first_negative = lag;
    std::vector<double> r(N / 2 + 1, 0.0);
    double best_r = -std::numeric_limits<double>::infinity();
    for (std::size_t k = first_negative; k <= N / 2; ++k) {
        r[k] = acf(k);
        best_r = std::max(best_r, r[k]);
    }
    // Earliest local maximum within 10% of the highest peak, so multiples of the period lose.
    std::size_t best = 0;
    for (std::size_t k = first_negative + 1; k < N / 2 && best_r > 0.0; ++k) {
        if (r[k] >= r[k - 1] && r[k] >= r[k + 1] && r[k] >= 0.9 * best_r) {
            best = k;
            break;
        }
    }
    if (best == 0) {
        label.kind = AttractorKind::other;
        return label;
    }

    // Refine at full resolution by descent on the residual, then to a fractional lag.
    const auto centre = static_cast<Eigen::Index>(best) * stride;
    const Eigen::Index reach = 8 * stride + 2;
    auto residual_at = [&](Eigen::Index L) {
        return L < 1 ? std::numeric_limits<double>::infinity() : detail::recurrence_residual(tail, static_cast<double>(L));
    };
    Eigen::Index lag_full = centre;
    for (Eigen::Index L = std::max<Eigen::Index>(1, centre - stride); L <= centre + stride; ++L)
        if (residual_at(L) < residual_at(lag_full)) lag_full = L;
    double res = residual_at(lag_full);
    for (bool moved = true; moved;) {
        moved = false;
        for (Eigen::Index step : {Eigen::Index{-1}, Eigen::Index{1}}) {
            const Eigen::Index L = lag_full + step;
            if (std::abs(L - centre) > reach) continue;
            if (const double r = residual_at(L); r < res) {
                res = r;
                lag_full = L;
                moved = true;
            }
        }
    }
    double a = static_cast<double>(lag_full) - 1.0, b = static_cast<double>(lag_full) + 1.0;
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int it = 0; it < 60; ++it) {
        const double c = b - phi * (b - a), d = a + phi * (b - a);
        if (detail::recurrence_residual(tail, c) < detail::recurrence_residual(tail, d))
            b = d;
        else
            a = c;
    }
    double tau_best = static_cast<double>(lag_full);
    if (const double r = detail::recurrence_residual(tail, 0.5 * (a + b)); r < res) {
        res = r;
        tau_best = 0.5 * (a + b);
    }
    label.recurrence_residual = res;
    const double period = tau_best * tr.dt;
    if (res < opt.recurrence_tol * label.tail_diameter && period > 10.0 * tr.dt) {
        label.kind = AttractorKind::periodic;
        label.period = period;
    } else {
        label.kind = AttractorKind::other;
    }
    return label;
}

/// Radius of a ball containing every trajectory of a loop with a Hurwitz linear part and
/// bounded phi: sup_t |e^{At}| |x0| + sup|phi| * int_0^inf |e^{At} B| dt.
inline double a_priori_state_bound(const LureLoop& loop, const Vector& x0) {
    loop.validate();
    if (!loop.phi.bound) throw Error(ErrorCode::invalid_argument, "a_priori_state_bound: phi must be bounded");
    const Matrix& A = loop.linear.A;
    for (const auto& z : eigenvalues(A))
        if (z.real() >= 0.0) throw Error(ErrorCode::invalid_argument, "a_priori_state_bound: A is not Hurwitz");
    double spectral_abscissa = -std::numeric_limits<double>::infinity();
    for (const auto& z : eigenvalues(A)) spectral_abscissa = std::max(spectral_abscissa, z.real());
    const double h = std::min(0.01, 0.1 / std::max(1.0, A.norm()));
    const Matrix step = (A * h).exp();
    Matrix phi_t = Matrix::Identity(A.rows(), A.cols());
    double sup_norm = 1.0;
    double integral = 0.0;
    double prev = loop.linear.B.norm();
    const double horizon = 50.0 / -spectral_abscissa;
    for (double t = 0.0; t < horizon; t += h) {
        phi_t = phi_t * step;
        Eigen::JacobiSVD<Matrix> svd(phi_t);
        sup_norm = std::max(sup_norm, svd.singularValues()(0));
        const double cur = (phi_t * loop.linear.B).norm();
        integral += 0.5 * h * (prev + cur);
        prev = cur;
    }
    return 1.05 * (sup_norm * x0.norm() + *loop.phi.bound * integral);
}

/// CSV with columns t, x1..xn, y, u.
inline void write_trajectory_csv(std::ostream& os, const Trajectory& tr, const LureLoop& loop, Eigen::Index stride = 1) {
    const auto old_precision = os.precision(12);
    const Eigen::Index n = tr.states.rows();
    os << 't';
    for (Eigen::Index i = 0; i < n; ++i) os << ",x" << (i + 1);
    os << ",y,u\n";
    stride = std::max<Eigen::Index>(1, stride);
    for (Eigen::Index k = 0; k < tr.size(); k += stride) {
        const Vector x = tr.states.col(k);
        os << tr.times[static_cast<std::size_t>(k)];
        for (Eigen::Index i = 0; i < n; ++i) os << ',' << x(i);
        os << ',' << loop.output(x) << ',' << loop.input(x) << '\n';
    }
    os.precision(old_precision);
}

}  // namespace domkit
