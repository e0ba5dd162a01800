#pragma once

// Shifted Nyquist loci, encirclement counting and the circle criterion for dominance.

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "domkit/lti.hpp"

namespace domkit {

struct GridOptions {
    double omega_min = 1e-3;
    double omega_max = 1e4;
    int points = 2000;
    /// Density multiplier applied within a decade of each shifted pole's frequency.
    int densify = 10;
};

/// Sample frequencies along the shifted imaginary axis. With `symmetric`
/// the locus is mirrored to negative frequencies.
struct FrequencyGrid {
    std::vector<double> omegas;
    bool symmetric = true;

    void validate() const {
        if (omegas.empty()) throw Error(ErrorCode::invalid_argument, "FrequencyGrid: empty");
        for (std::size_t i = 0; i < omegas.size(); ++i) {
            if (!std::isfinite(omegas[i]))
                throw Error(ErrorCode::invalid_argument, "FrequencyGrid: non-finite frequency");
            if (i > 0 && !(omegas[i] > omegas[i - 1]))
                throw Error(ErrorCode::invalid_argument, "FrequencyGrid: not strictly increasing");
        }
        if (symmetric && omegas.front() < 0.0)
            throw Error(ErrorCode::invalid_argument, "FrequencyGrid: symmetric grid needs omega >= 0");
    }

    static FrequencyGrid logspace(double lo, double hi, int points, bool include_zero = true) {
        if (!(lo > 0.0) || !(hi > lo) || points < 2)
            throw Error(ErrorCode::invalid_argument, "FrequencyGrid::logspace: bad range");
        FrequencyGrid g;
        if (include_zero) g.omegas.push_back(0.0);
        const double a = std::log10(lo), b = std::log10(hi);
        for (int i = 0; i < points; ++i) g.omegas.push_back(std::pow(10.0, a + (b - a) * i / (points - 1)));
        return g;
    }

    /// Default analysis grid for G(s - lambda): log-spaced base grid, densified
    /// around the imaginary parts of shifted poles and zeros, plus zero frequency.
    static FrequencyGrid for_system(const TransferFunction& g, double lambda, const GridOptions& opt = {}) {
        FrequencyGrid grid = logspace(opt.omega_min, opt.omega_max, opt.points, true);
        const double per_decade = opt.points / std::log10(opt.omega_max / opt.omega_min);
        auto add_log = [&](double lo, double hi, int n) {
            if (!(lo > 0.0) || !(hi > lo) || n < 2) return;
            const double a = std::log10(lo), b = std::log10(hi);
            for (int i = 0; i < n; ++i) grid.omegas.push_back(std::pow(10.0, a + (b - a) * i / (n - 1)));
        };
        const TransferFunction h = shift(g, lambda);
        std::vector<Complex> features = h.poles();
        for (const auto& z : h.zeros()) features.push_back(z);
        for (const auto& z : features) {
            const double w = std::abs(z.imag());
            const double sigma = std::abs(z.real());
            if (w > 0.0) {
                add_log(w / 10.0, w * 10.0, static_cast<int>(2 * opt.densify * per_decade));
                if (sigma < w / 10.0) {
                    const double half = 10.0 * std::max(sigma, 1e-9 * w);
                    const int n = 201;
                    for (int i = 0; i < n; ++i) {
                        const double om = w - half + 2.0 * half * i / (n - 1);
                        if (om > 0.0) grid.omegas.push_back(om);
                    }
                }
            } else if (sigma > 0.0 && sigma < 10.0 * opt.omega_min) {
                add_log(sigma / 100.0, std::min(100.0 * sigma, opt.omega_min), 200);
            }
        }
        std::sort(grid.omegas.begin(), grid.omegas.end());
        std::vector<double> unique;
        for (double w : grid.omegas)
            if (unique.empty() || w > unique.back() * (1.0 + 1e-12) + 1e-300) unique.push_back(w);
        grid.omegas = std::move(unique);
        return grid;
    }
};

struct LocusOptions {
    /// Radius of semicircular detours around boundary poles; unset = boundary poles are an error.
    std::optional<double> indent_radius;
    /// Half-width of the band around the imaginary axis treated as the boundary.
    std::optional<double> boundary_tol;
};

/// Image of the shifted Nyquist contour under G.
struct NyquistLocus {
    std::vector<Complex> path;    // contour points in the shifted plane (s = j*omega, or detours)
    std::vector<Complex> points;  // G(path - lambda)
    Complex closure_point;        // image of the infinite arc
    double lambda = 0.0;

    double omega_of(std::size_t i) const { return path[i].imag(); }
    std::size_t size() const { return points.size(); }
};

namespace detail {
inline std::vector<Complex> boundary_poles(const TransferFunction& shifted, double tol) {
    std::vector<Complex> out;
    for (const auto& p : shifted.poles())
        if (std::abs(p.real()) <= tol) out.push_back(Complex(0.0, p.imag()));
    return out;
}
}  // namespace detail

inline NyquistLocus nyquist_locus(const TransferFunction& g, double lambda, const FrequencyGrid& grid,
                                  const LocusOptions& opt = {}) {
    grid.validate();
    if (!g.is_proper()) throw Error(ErrorCode::invalid_argument, "nyquist_locus: improper transfer function");
    const double tol = opt.boundary_tol.value_or(default_boundary_tol(lambda));
    const TransferFunction h = shift(g, lambda);
    const auto on_axis = detail::boundary_poles(h, tol);
    if (!on_axis.empty() && !opt.indent_radius)
        throw Error(ErrorCode::boundary_pole, "nyquist_locus: boundary pole at rate " + std::to_string(lambda));

    std::vector<double> omegas;
    if (grid.symmetric) {
        for (auto it = grid.omegas.rbegin(); it != grid.omegas.rend(); ++it)
            if (*it > 0.0) omegas.push_back(-*it);
        for (double w : grid.omegas) omegas.push_back(w);
    } else {
        omegas = grid.omegas;
    }

    std::vector<Complex> path;
    if (on_axis.empty()) {
        for (double w : omegas) path.emplace_back(0.0, w);
    } else {
        const double rho = *opt.indent_radius;
        if (!(rho > 0.0)) throw Error(ErrorCode::invalid_argument, "nyquist_locus: indent radius must be positive");
        for (double w : omegas) {
            bool inside = false;
            for (const auto& p : on_axis) inside = inside || std::abs(w - p.imag()) < rho;
            if (!inside) path.emplace_back(0.0, w);
        }
        constexpr int arc_points = 65;
        for (const auto& p : on_axis) {
            if (!grid.symmetric && (p.imag() + rho < omegas.front() || p.imag() - rho > omegas.back())) continue;
            for (int i = 0; i < arc_points; ++i) {
                const double theta = -std::numbers::pi / 2 + std::numbers::pi * i / (arc_points - 1);
                path.push_back(p + rho * std::polar(1.0, theta));
            }
        }
        std::sort(path.begin(), path.end(), [](const Complex& a, const Complex& b) { return a.imag() < b.imag(); });
    }

    NyquistLocus locus;
    locus.lambda = lambda;
    locus.path = std::move(path);
    locus.points.reserve(locus.path.size());
    for (const auto& s : locus.path) locus.points.push_back(evaluate(h, s));
    locus.closure_point = Complex(h.high_frequency_gain(), 0.0);
    return locus;
}

/// Counter-clockwise winding number of the closed locus (through its closure point) around `point`.
inline int winding_number(const NyquistLocus& locus, Complex point) {
    if (locus.points.empty()) throw Error(ErrorCode::invalid_argument, "winding_number: empty locus");
    std::vector<Complex> contour = locus.points;
    contour.push_back(locus.closure_point);
    contour.push_back(locus.points.front());

    double scale = std::abs(point);
    for (const auto& z : contour) scale = std::max(scale, std::abs(z));
    scale = std::max(scale, std::numeric_limits<double>::min());

    double min_dist = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k + 1 < contour.size(); ++k) {
        const Complex a = contour[k], b = contour[k + 1];
        const Complex ab = b - a;
        const double len2 = std::norm(ab);
        double t = len2 > 0.0 ? ((point - a) * std::conj(ab)).real() / len2 : 0.0;
        t = std::clamp(t, 0.0, 1.0);
        min_dist = std::min(min_dist, std::abs(a + t * ab - point));
    }
    if (min_dist < 1e-6 * scale)
        throw Error(ErrorCode::too_close, "winding_number: test point lies on the locus (inconclusive)");

    double total = 0.0;
    for (std::size_t k = 0; k + 1 < contour.size(); ++k) {
        const double step = std::arg((contour[k + 1] - point) / (contour[k] - point));
        if (std::abs(step) > std::numbers::pi / 2)
            throw Error(ErrorCode::grid_too_coarse, "winding_number: phase step exceeds pi/2; refine the grid");
        total += step;
    }
    const double turns = total / (2.0 * std::numbers::pi);
    const double rounded = std::round(turns);
    if (std::abs(turns - rounded) > 1e-3)
        throw Error(ErrorCode::grid_too_coarse, "winding_number: accumulated phase is not an integer");
    return static_cast<int>(rounded);
}

struct NyquistDominance {
    int p1 = 0;             // poles of G(s - lambda) in C+
    int encirclements = 0;  // clockwise encirclements of -1/k
    int p2 = 0;             // dominance degree of G/(1 + kG)
};

inline int count_shifted_unstable_poles(const TransferFunction& g, double lambda, double tol) {
    return spectral_split(shift(g, lambda).poles(), tol).right;
}

/// Closed-loop dominance degree of G/(1 + kG) at rate lambda.
inline NyquistDominance nyquist_dominance(const TransferFunction& g, double lambda, double k, const FrequencyGrid& grid,
                                          const LocusOptions& opt = {}) {
    if (k == 0.0 || !std::isfinite(k)) throw Error(ErrorCode::invalid_argument, "nyquist_dominance: k must be nonzero");
    const double tol = opt.boundary_tol.value_or(default_boundary_tol(lambda));
    const NyquistLocus locus = nyquist_locus(g, lambda, grid, opt);
    NyquistDominance out;
    out.p1 = count_shifted_unstable_poles(g, lambda, tol);
    out.encirclements = -winding_number(locus, Complex(-1.0 / k, 0.0));
    out.p2 = out.p1 + out.encirclements;
    return out;
}

/// G / (1 + K1 G), cancelled to coprime form.
inline TransferFunction loop_transform(const TransferFunction& g, double k1) {
    if (k1 == 0.0) return g;
    const Polynomial den = g.den() + k1 * g.num();
    if (den.cleaned(1e-14).is_zero())
        throw Error(ErrorCode::singular, "loop_transform: 1 + K1 G vanishes identically");
    return cancel_common_factors(TransferFunction(g.num(), den.cleaned(1e-14)));
}

/// Z = (1 + K2 g) / (1 + K1 g) for a single frequency-response value g.
inline Complex loop_transformed_z(Complex g, double k1, double k2) {
    const Complex den = 1.0 + k1 * g;
    if (std::abs(den) <= 1e-12 * (1.0 + std::abs(k1 * g)))
        throw Error(ErrorCode::singular, "1 + K1 G vanishes on the grid");
    return (1.0 + k2 * g) / den;
}

struct PositiveRealReport {
    bool holds = false;
    double min_margin = 0.0;
    double argmin_omega = 0.0;  // +inf when the minimum is the high-frequency limit
    double threshold = 1e-7;
};

/// min over the grid and infinity of Re{(1 + K2 G(jw - lambda)) / (1 + K1 G(jw - lambda))}.
inline PositiveRealReport positive_real_test(const TransferFunction& g, double lambda, double k1, double k2,
                                             const FrequencyGrid& grid, double threshold = 1e-7) {
    grid.validate();
    if (!g.is_proper()) throw Error(ErrorCode::invalid_argument, "positive_real_test: improper transfer function");
    const TransferFunction h = shift(g, lambda);
    if (!detail::boundary_poles(h, default_boundary_tol(lambda)).empty())
        throw Error(ErrorCode::boundary_pole, "positive_real_test: boundary pole");
    PositiveRealReport rep;
    rep.threshold = threshold;
    rep.min_margin = loop_transformed_z(Complex(h.high_frequency_gain(), 0.0), k1, k2).real();
    rep.argmin_omega = std::numeric_limits<double>::infinity();
    for (double w : grid.omegas) {
        const double m = loop_transformed_z(evaluate(h, Complex(0.0, w)), k1, k2).real();
        if (m < rep.min_margin) {
            rep.min_margin = m;
            rep.argmin_omega = w;
        }
    }
    rep.holds = rep.min_margin > threshold;
    return rep;
}

enum class DiskMode { outside, inside, half_plane_right, half_plane_left };

inline const char* to_string(DiskMode m) {
    switch (m) {
        case DiskMode::outside: return "outside";
        case DiskMode::inside: return "inside";
        case DiskMode::half_plane_right: return "half_plane_right";
        case DiskMode::half_plane_left: return "half_plane_left";
    }
    return "?";
}

/// The critical disk D(K1, K2) together with the side the locus must keep to.
/// When one of the bounds is zero the disk degenerates to the half plane Re z > -1/K2
/// (K1 = 0) or Re z < -1/K1 (K2 = 0).
struct Disk {
    double center = 0.0;
    double radius = 0.0;
    DiskMode mode = DiskMode::outside;
    double threshold = 0.0;  // half-plane modes only

    /// Signed distance to the forbidden region; positive means admissible.
    double clearance(Complex z) const {
        switch (mode) {
            case DiskMode::outside: return std::abs(z - center) - radius;
            case DiskMode::inside: return radius - std::abs(z - center);
            case DiskMode::half_plane_right: return z.real() - threshold;
            case DiskMode::half_plane_left: return threshold - z.real();
        }
        return 0.0;
    }

    double scale() const { return 1.0 + std::abs(center) + radius + std::abs(threshold); }
};

inline Disk disk(double k1, double k2) {
    if (!(k1 < k2)) throw Error(ErrorCode::invalid_argument, "disk: requires K1 < K2");
    Disk d;
    if (k1 == 0.0) {
        d.mode = DiskMode::half_plane_right;
        d.threshold = -1.0 / k2;
        return d;
    }
    if (k2 == 0.0) {
        d.mode = DiskMode::half_plane_left;
        d.threshold = -1.0 / k1;
        return d;
    }
    d.center = -(k1 + k2) / (2.0 * k1 * k2);
    d.radius = (k2 - k1) / (2.0 * std::abs(k1 * k2));
    d.mode = (k1 < 0.0 && k2 > 0.0) ? DiskMode::inside : DiskMode::outside;
    return d;
}

enum class Verdict { certified, rejected, inconclusive };

inline const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::certified: return "certified";
        case Verdict::rejected: return "rejected";
        case Verdict::inconclusive: return "inconclusive";
    }
    return "?";
}

struct ClauseResult {
    bool evaluated = false;
    bool pass = false;
    std::string detail;
};

struct CircleReport {
    Verdict status = Verdict::inconclusive;
    std::optional<int> p;
    std::vector<int> consistent_p;
    int q = 0;  // poles of G in the interior of Omega_lambda
    int n = 0;
    int encirclements = 0;  // clockwise, around -1/K1
    Disk region;
    double min_clearance = 0.0;
    double clearance_omega = 0.0;
    ClauseResult boundary;      // ii
    ClauseResult encirclement;  // iii
    ClauseResult disk_clause;   // iv
    std::string reason;
};

/// Graphical circle criterion for p-dominance of the Lur'e loop u = -phi(y),
/// d phi/dy in [K1, K2]. Every p in 0..n is tested against E = p - q; the
/// encirclement count admits at most one.
inline CircleReport circle_criterion(const TransferFunction& g, double lambda, double k1, double k2,
                                     const FrequencyGrid& grid, const LocusOptions& opt = {}) {
    if (!(k1 < k2)) throw Error(ErrorCode::invalid_argument, "circle_criterion: requires K1 < K2");
    if (!g.is_proper()) throw Error(ErrorCode::invalid_argument, "circle_criterion: improper transfer function");
    const double tol = opt.boundary_tol.value_or(default_boundary_tol(lambda));
    CircleReport rep;
    rep.region = disk(k1, k2);
    rep.n = g.order();

    const auto split = spectral_split(shift(g, lambda).poles(), tol);
    rep.q = split.right;
    rep.boundary.evaluated = true;
    rep.boundary.pass = split.boundary == 0;
    if (!rep.boundary.pass) {
        rep.boundary.detail = std::to_string(split.boundary) + " pole(s) on the boundary of Omega_lambda";
        rep.status = Verdict::inconclusive;
        rep.reason = "boundary pole";
        return rep;
    }
    rep.boundary.detail = "no poles on the boundary";

    LocusOptions no_indent = opt;
    no_indent.indent_radius.reset();
    const NyquistLocus locus = nyquist_locus(g, lambda, grid, no_indent);

    bool inconclusive = false;
    rep.encirclement.evaluated = true;
    if (k1 == 0.0) {
        rep.encirclements = 0;
        rep.encirclement.detail = "K1 = 0: test point at infinity, no encirclements";
    } else {
        try {
            rep.encirclements = -winding_number(locus, Complex(-1.0 / k1, 0.0));
            rep.encirclement.detail = "E = " + std::to_string(rep.encirclements) + " clockwise around -1/K1";
        } catch (const Error& e) {
            if (!e.inconclusive()) throw;
            inconclusive = true;
            rep.encirclement.detail = e.what();
            rep.reason = to_string(e.code());
        }
    }
    if (!inconclusive) {
        for (int p = 0; p <= rep.n; ++p)
            if (rep.encirclements == p - rep.q) rep.consistent_p.push_back(p);
        rep.encirclement.pass = !rep.consistent_p.empty();
        if (!rep.encirclement.pass) rep.encirclement.detail += "; no p in 0..n satisfies E = p - q";
    }

    rep.disk_clause.evaluated = true;
    rep.min_clearance = rep.region.clearance(locus.closure_point);
    rep.clearance_omega = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < locus.size(); ++i) {
        const double c = rep.region.clearance(locus.points[i]);
        if (c < rep.min_clearance) {
            rep.min_clearance = c;
            rep.clearance_omega = locus.omega_of(i);
        }
    }
    const double graze = 1e-9 * rep.region.scale();
    if (std::abs(rep.min_clearance) <= graze) {
        inconclusive = true;
        rep.disk_clause.detail = "locus grazes the critical region";
        if (rep.reason.empty()) rep.reason = "locus grazes disk boundary";
    } else {
        rep.disk_clause.pass = rep.min_clearance > 0.0;
        rep.disk_clause.detail = std::string("locus must stay ") + to_string(rep.region.mode) +
                                 "; min clearance " + std::to_string(rep.min_clearance);
    }

    if (inconclusive) {
        rep.status = Verdict::inconclusive;
    } else if (rep.encirclement.pass && rep.disk_clause.pass) {
        rep.status = Verdict::certified;
        rep.p = rep.consistent_p.front();
    } else {
        rep.status = Verdict::rejected;
        rep.reason = !rep.encirclement.pass ? "encirclement count inconsistent" : "locus enters the critical disk";
    }
    return rep;
}

/// CSV with columns omega,re,im,closure; the closure point is the last row (omega = inf).
inline void write_locus_csv(std::ostream& os, const NyquistLocus& locus) {
    const auto old_precision = os.precision(15);
    os << "omega,re,im,closure\n";
    for (std::size_t i = 0; i < locus.size(); ++i)
        os << locus.omega_of(i) << ',' << locus.points[i].real() << ',' << locus.points[i].imag() << ",0\n";
    os << "inf," << locus.closure_point.real() << ',' << locus.closure_point.imag() << ",1\n";
    os.precision(old_precision);
}

}  // namespace domkit
