#pragma once

// Verbs of the domkit command-line tool. Each returns the process exit code:
// 0 conclusive, 1 input error, 2 inconclusive.

#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "domkit/spec.hpp"

#ifndef DOMKIT_VERSION
#define DOMKIT_VERSION "0.0.0"
#endif

namespace domkit::cli {

enum Exit : int { conclusive = 0, input_error = 1, inconclusive = 2 };

struct Options {
    std::optional<std::string> out;
    std::optional<double> indent_radius;
    std::optional<int> grid_points;
    std::optional<double> tol;
    // rate-scan
    std::optional<double> lambda_from;
    std::optional<double> lambda_to;
    std::optional<int> steps;
    std::optional<int> p;
};

/// Finite numbers as JSON numbers; infinities and NaN as strings (JSON has no encoding for them).
inline json num(double v) {
    if (std::isfinite(v)) return v == 0.0 ? 0.0 : v;
    if (std::isnan(v)) return "nan";
    return v > 0 ? "inf" : "-inf";
}

inline json complex_list(const std::vector<Complex>& zs) {
    json out = json::array();
    for (const auto& z : zs) out.push_back(json::array({num(z.real()), num(z.imag())}));
    return out;
}

inline void apply_overrides(SystemSpec& spec, const Options& opt) {
    if (opt.grid_points) {
        if (*opt.grid_points < 2) throw Error(ErrorCode::invalid_argument, "--grid-points must be >= 2");
        spec.grid.points = *opt.grid_points;
    }
    if (opt.tol) {
        if (!(*opt.tol > 0.0)) throw Error(ErrorCode::invalid_argument, "--tol must be positive");
        spec.tol.boundary = *opt.tol;
    }
    if (opt.indent_radius) {
        if (!(*opt.indent_radius > 0.0)) throw Error(ErrorCode::invalid_argument, "--indent-radius must be positive");
        spec.tol.indent_radius = *opt.indent_radius;
    }
}

inline json provenance(const SystemSpec& spec, const FrequencyGrid* grid) {
    json p;
    p["tool"] = "domkit";
    p["version"] = DOMKIT_VERSION;
    json g;
    g["omega_min"] = num(spec.grid.omega_min);
    g["omega_max"] = num(spec.grid.omega_max);
    g["points"] = spec.grid.points;
    g["densify"] = spec.grid.densify;
    if (grid) g["samples"] = grid->omegas.size();
    p["grid"] = g;
    json t;
    t["boundary"] = num(spec.boundary_tol());
    t["indent_radius"] = spec.tol.indent_radius ? num(*spec.tol.indent_radius) : json(nullptr);
    t["winding_too_close_relative"] = 1e-6;
    t["winding_integrality"] = 1e-3;
    t["disk_graze_relative"] = 1e-9;
    t["positive_real"] = num(spec.tol.positive_real);
    p["tolerances"] = t;
    return p;
}

inline json system_json(const SystemSpec& spec, const TransferFunction& loop) {
    json s;
    s["name"] = spec.name;
    s["num"] = loop.num().descending();
    s["den"] = loop.den().descending();
    s["order"] = loop.order();
    s["relative_degree"] = loop.relative_degree();
    s["feedback"] = spec.feedback_sign > 0 ? "positive" : "negative";
    s["gain"] = num(spec.gain);
    s["controller"] = spec.controller.has_value();
    s["convention"] = "loop u = -phi(y) on the listed transfer function; positive feedback enters as a factor -1";
    return s;
}

inline json disk_json(const Disk& d) {
    json j;
    j["mode"] = to_string(d.mode);
    if (d.mode == DiskMode::outside || d.mode == DiskMode::inside) {
        j["center"] = num(d.center);
        j["radius"] = num(d.radius);
    } else {
        j["threshold"] = num(d.threshold);
    }
    return j;
}

inline json clause_json(const ClauseResult& c) {
    json j;
    j["evaluated"] = c.evaluated;
    j["pass"] = c.pass;
    j["detail"] = c.detail;
    return j;
}

inline json kyp_json(const KypReport& r) {
    json j;
    j["holds"] = r.holds;
    j["strict"] = r.strict;
    j["p"] = r.p;
    j["requested_p"] = r.requested_p;
    j["min_margin"] = num(r.min_margin);
    j["argmin_omega"] = num(r.argmin_omega);
    j["finite_min_margin"] = num(r.finite_min_margin);
    j["finite_argmin_omega"] = num(r.finite_argmin_omega);
    j["infinity_margin"] = num(r.infinity_margin);
    j["strict_threshold"] = num(r.strict_threshold);
    return j;
}

inline void emit(const json& j, const Options& opt, std::ostream& out) {
    const std::string text = j.dump(2) + "\n";
    if (opt.out) {
        std::ofstream f(*opt.out, std::ios::binary);
        if (!f) throw Error(ErrorCode::invalid_argument, "cannot write '" + *opt.out + "'");
        f << text;
    } else {
        out << text;
    }
}

/// Dominance analysis of the loop at the spec's rate.
inline int cmd_analyze(SystemSpec spec, const Options& opt, std::ostream& out, std::ostream& err) {
    apply_overrides(spec, opt);
    const TransferFunction L = spec.loop();
    const double lambda = spec.lambda;
    const double btol = spec.boundary_tol();

    json report;
    report["lambda"] = num(lambda);
    report["system"] = system_json(spec, L);

    const PoleZeroSplit split = pole_zero_split(L, lambda, btol);
    json pz;
    pz["p"] = split.p;
    pz["n_total"] = split.n_total;
    pz["q"] = split.q;
    pz["r"] = split.r;
    pz["relative_degree"] = split.relative_degree();
    pz["boundary"] = split.boundary;
    pz["boundary_poles"] = split.boundary_poles;
    pz["boundary_zeros"] = split.boundary_zeros;
    const TransferFunction shifted = shift(L, lambda);
    pz["shifted_poles"] = complex_list(shifted.poles());
    pz["shifted_zeros"] = complex_list(shifted.zeros());
    report["pole_zero_split"] = pz;

    json cands;
    try {
        cands["p"] = passivity_degree_candidates(L, lambda, btol);
    } catch (const Error& e) {
        cands["p"] = nullptr;
        cands["reason"] = e.what();
    }
    report["passivity_candidates"] = cands;

    json verdict;
    int code = conclusive;
    const FrequencyGrid* used_grid = nullptr;
    FrequencyGrid grid;

    if (split.boundary_poles > 0) {
        verdict["status"] = "inconclusive";
        verdict["p"] = nullptr;
        verdict["reason"] = "boundary pole";
        code = inconclusive;
    } else {
        grid = spec.frequency_grid(lambda);
        used_grid = &grid;
        if (spec.sector) {
            const auto [k1, k2] = *spec.sector;
            const CircleReport cr = circle_criterion(L, lambda, k1, k2, grid, spec.locus_options());
            json c;
            c["status"] = to_string(cr.status);
            c["p"] = cr.p ? json(*cr.p) : json(nullptr);
            c["consistent_p"] = cr.consistent_p;
            c["q"] = cr.q;
            c["n"] = cr.n;
            c["encirclements_clockwise"] = cr.encirclements;
            c["test_point"] = k1 != 0.0 ? num(-1.0 / k1) : json("-inf");
            c["disk"] = disk_json(cr.region);
            c["min_clearance"] = num(cr.min_clearance);
            c["clearance_omega"] = num(cr.clearance_omega);
            c["clauses"] = {{"ii_boundary", clause_json(cr.boundary)},
                            {"iii_encirclement", clause_json(cr.encirclement)},
                            {"iv_disk", clause_json(cr.disk_clause)}};
            c["reason"] = cr.reason;
            report["circle"] = c;

            json k;
            k["supply"] = {{"Q", 0.0},
                           {"L", num(k2 - k1)},
                           {"R", 2.0},
                           {"applied_to", "G/(1 + K1 G)"},
                           {"convention",
                            "sector [K1,K2] with u = -phi(y): Q = 2 K1 K2, L = K1 + K2, R = 2 on G, "
                            "equivalently Q = 0, L = K2 - K1, R = 2 on the loop-transformed G/(1 + K1 G)"}};
            try {
                const TransferFunction gt = loop_transform(L, k1);
                const int pt = spectral_split(shift(gt, lambda).poles(), btol).right;
                const FrequencyGrid gt_grid = FrequencyGrid::for_system(gt, lambda, spec.grid);
                const KypReport kr = kyp_frequency_test(gt, lambda, Supply::scalar(0.0, k2 - k1, 2.0), pt, gt_grid, btol);
                k["report"] = kyp_json(kr);
            } catch (const Error& e) {
                k["report"] = nullptr;
                k["reason"] = e.what();
            }
            report["kyp"] = k;

            verdict["status"] = to_string(cr.status);
            verdict["p"] = cr.p ? json(*cr.p) : json(nullptr);
            verdict["basis"] = "circle criterion";
            verdict["reason"] = cr.reason;
            if (cr.status == Verdict::inconclusive) code = inconclusive;
        } else {
            verdict["status"] = "certified";
            verdict["p"] = split.p;
            verdict["basis"] = "open-loop pole split";
            verdict["reason"] = "";
        }
    }
    report["verdict"] = verdict;
    report["provenance"] = provenance(spec, used_grid);
    emit(report, opt, out);
    if (code == inconclusive) err << "domkit: inconclusive: " << verdict["reason"].get<std::string>() << "\n";
    return code;
}

/// Shifted Nyquist locus as CSV, plus a disk sidecar when a sector is present.
inline int cmd_nyquist(SystemSpec spec, const Options& opt, std::ostream& out, std::ostream& err) {
    apply_overrides(spec, opt);
    const TransferFunction L = spec.loop();
    const FrequencyGrid grid = spec.frequency_grid(spec.lambda);
    const NyquistLocus locus = nyquist_locus(L, spec.lambda, grid, spec.locus_options());
    if (opt.out) {
        std::ofstream f(*opt.out, std::ios::binary);
        if (!f) throw Error(ErrorCode::invalid_argument, "cannot write '" + *opt.out + "'");
        write_locus_csv(f, locus);
    } else {
        write_locus_csv(out, locus);
    }
    if (spec.sector) {
        json side;
        side["k1"] = num(spec.sector->first);
        side["k2"] = num(spec.sector->second);
        side["lambda"] = num(spec.lambda);
        side["disk"] = disk_json(disk(spec.sector->first, spec.sector->second));
        side["provenance"] = provenance(spec, &grid);
        const std::string path = opt.out ? *opt.out + ".disk.json" : std::string{};
        if (opt.out) {
            std::ofstream f(path, std::ios::binary);
            if (!f) throw Error(ErrorCode::invalid_argument, "cannot write '" + path + "'");
            f << side.dump(2) << "\n";
        } else {
            err << side.dump(2) << "\n";
        }
    }
    return conclusive;
}

/// Closed-loop simulation, attractor label and equilibria.
inline int cmd_simulate(SystemSpec spec, const Options& opt, std::ostream& out, std::ostream& err) {
    apply_overrides(spec, opt);
    if (!spec.simulation) throw Error(ErrorCode::invalid_argument, "spec: 'simulation' block required");
    if (!spec.phi) throw Error(ErrorCode::invalid_argument, "spec: 'nonlinearity' required");
    const SimulationSpec& sim = *spec.simulation;
    LureLoop loop{spec.forward_state_space(), *spec.phi, spec.feedback_sign};
    if (sim.x0.size() != loop.linear.states())
        throw Error(ErrorCode::invalid_argument, "spec: x0 has " + std::to_string(sim.x0.size()) +
                                                     " entries, the realisation has " +
                                                     std::to_string(loop.linear.states()) + " states");
    const Trajectory tr = simulate(loop, sim.x0, sim.dt, sim.T);

    if (opt.out) {
        std::ofstream f(*opt.out, std::ios::binary);
        if (!f) throw Error(ErrorCode::invalid_argument, "cannot write '" + *opt.out + "'");
        write_trajectory_csv(f, tr, loop, sim.csv_stride);
    }

    json label;
    ClassifyOptions co;
    co.transient_fraction = sim.transient_fraction;
    co.fixed_point_tol = spec.tol.fixed_point;
    co.recurrence_tol = spec.tol.recurrence;
    int code = conclusive;
    try {
        const AttractorLabel l = classify(tr, co);
        label["kind"] = to_string(l.kind);
        label["tail_diameter"] = num(l.tail_diameter);
        label["recurrence_residual"] = num(l.recurrence_residual);
        label["period"] = l.period ? num(*l.period) : json(nullptr);
        if (l.kind == AttractorKind::fixed_point) {
            label["equilibrium"] = std::vector<double>(l.equilibrium.data(), l.equilibrium.data() + l.equilibrium.size());
            label["output"] = num(loop.output(l.equilibrium));
        }
        if (l.kind == AttractorKind::diverged) code = inconclusive;
    } catch (const Error& e) {
        label["kind"] = nullptr;
        label["reason"] = e.what();
        code = inconclusive;
    }

    json eq;
    try {
        const Equilibria e = equilibria(loop);
        eq["inputs"] = e.inputs;
        json ys = json::array();
        for (double u : e.inputs) ys.push_back(num(e.dc_gain * u));
        eq["outputs"] = ys;
        eq["dc_gain"] = num(e.dc_gain);
    } catch (const Error& e) {
        eq = {{"reason", e.what()}};
    }

    json report;
    report["label"] = label;
    report["equilibria"] = eq;
    report["diverged"] = tr.diverged;
    report["samples"] = tr.size();
    report["final_time"] = num(tr.times.back());
    report["final_state"] = std::vector<double>(tr.states.col(tr.size() - 1).data(),
                                                tr.states.col(tr.size() - 1).data() + tr.states.rows());
    report["simulation"] = {{"dt", num(sim.dt)},
                            {"T", num(sim.T)},
                            {"integrator", "rk4"},
                            {"transient_fraction", num(sim.transient_fraction)},
                            {"fixed_point_relative", num(co.fixed_point_tol)},
                            {"recurrence_relative", num(co.recurrence_tol)}};
    report["nonlinearity"] = spec.nonlinearity_json;
    report["feedback"] = spec.feedback_sign > 0 ? "positive" : "negative";
    report["provenance"] = provenance(spec, nullptr);
    out << report.dump(2) << "\n";
    if (tr.diverged) err << "domkit: trajectory diverged at t = " << tr.times.back() << "\n";
    return code;
}

struct RateRow {
    double lambda = 0.0;
    bool boundary = false;
    int p = 0;
    std::vector<int> candidates;
    std::optional<KypReport> kyp;
};

/// Pole split and p-passivity margin over a range of rates.
inline int cmd_rate_scan(SystemSpec spec, const Options& opt, std::ostream& out, std::ostream&) {
    apply_overrides(spec, opt);
    RateScanSpec rs = spec.rate_scan.value_or(RateScanSpec{});
    if (opt.lambda_from) rs.lambda_min = *opt.lambda_from;
    if (opt.lambda_to) rs.lambda_max = *opt.lambda_to;
    if (opt.steps) rs.steps = *opt.steps;
    if (opt.p) rs.p = *opt.p;
    if (!(rs.lambda_min >= 0.0) || !(rs.lambda_max > rs.lambda_min) || rs.steps < 2)
        throw Error(ErrorCode::invalid_argument, "rate-scan needs 0 <= from < to and steps >= 2");

    const TransferFunction L = spec.loop();
    const Supply supply = Supply::p_passive();

    auto evaluate_rate = [&](double lambda) {
        RateRow row;
        row.lambda = lambda;
        const double btol = spec.tol.boundary.value_or(default_boundary_tol(lambda));
        const PoleZeroSplit split = pole_zero_split(L, lambda, btol);
        row.p = split.p;
        row.boundary = split.boundary_poles > 0;
        if (!split.boundary) row.candidates = passivity_degree_candidates(L, lambda, btol);
        if (!row.boundary) {
            const FrequencyGrid grid = FrequencyGrid::for_system(L, lambda, spec.grid);
            row.kyp = kyp_frequency_test(L, lambda, supply, rs.p.value_or(split.p), grid, btol);
        }
        return row;
    };
    auto holds = [](const RateRow& r) { return r.kyp && r.kyp->holds; };

    std::vector<RateRow> rows;
    for (int i = 0; i < rs.steps; ++i)
        rows.push_back(evaluate_rate(rs.lambda_min + (rs.lambda_max - rs.lambda_min) * i / (rs.steps - 1)));

    auto refine = [&](double good, double bad) {
        for (int it = 0; it < 40 && std::abs(good - bad) > 1e-9 * (1.0 + std::abs(good)); ++it) {
            const double mid = 0.5 * (good + bad);
            (holds(evaluate_rate(mid)) ? good : bad) = mid;
        }
        return good;
    };

    json windows = json::array();
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (!holds(rows[i])) continue;
        std::size_t j = i;
        while (j + 1 < rows.size() && holds(rows[j + 1])) ++j;
        json w;
        const bool open_lo = i == 0, open_hi = j + 1 == rows.size();
        w["lambda_min"] = num(open_lo ? rows[i].lambda : refine(rows[i].lambda, rows[i - 1].lambda));
        w["lambda_max"] = num(open_hi ? rows[j].lambda : refine(rows[j].lambda, rows[j + 1].lambda));
        w["clipped_below"] = open_lo;
        w["clipped_above"] = open_hi;
        w["p"] = rows[i].kyp->requested_p;
        windows.push_back(w);
        i = j;
    }

    json table = json::array();
    for (const auto& r : rows) {
        json j;
        j["lambda"] = num(r.lambda);
        j["p"] = r.p;
        j["boundary"] = r.boundary;
        j["candidates"] = r.candidates;
        if (r.kyp) {
            j["holds"] = r.kyp->holds;
            j["strict"] = r.kyp->strict;
            j["min_margin"] = num(r.kyp->min_margin);
            j["finite_min_margin"] = num(r.kyp->finite_min_margin);
            j["requested_p"] = r.kyp->requested_p;
        } else {
            j["holds"] = false;
            j["strict"] = false;
            j["min_margin"] = nullptr;
            j["finite_min_margin"] = nullptr;
            j["requested_p"] = nullptr;
        }
        table.push_back(j);
    }

    json report;
    report["system"] = system_json(spec, L);
    report["supply"] = {{"Q", 0.0}, {"L", 1.0}, {"R", 0.0}, {"name", "p-passive"}};
    report["requested_p"] = rs.p ? json(*rs.p) : json("pole split at each rate");
    report["rows"] = table;
    report["windows"] = windows;
    report["range"] = {{"lambda_min", num(rs.lambda_min)}, {"lambda_max", num(rs.lambda_max)}, {"steps", rs.steps}};
    report["provenance"] = provenance(spec, nullptr);
    emit(report, opt, out);
    return conclusive;
}

}  // namespace domkit::cli
