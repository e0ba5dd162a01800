#pragma once

// System description files for the command-line front end.

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "domkit/domkit.hpp"

namespace domkit::cli {

using json = nlohmann::json;

struct SimulationSpec {
    Vector x0;
    double dt = 1e-3;
    double T = 100.0;
    double transient_fraction = 0.5;
    int csv_stride = 1;
};

struct RateScanSpec {
    double lambda_min = 0.0;
    double lambda_max = 1.0;
    int steps = 101;
    std::optional<int> p;
};

struct Tolerances {
    std::optional<double> boundary;
    std::optional<double> indent_radius;
    double positive_real = 1e-7;
    double fixed_point = 1e-4;
    double recurrence = 1e-3;
};

struct SystemSpec {
    std::string name;
    TransferFunction plant;
    std::optional<StateSpace> state_space;
    std::optional<TransferFunction> controller;
    double gain = 1.0;
    int feedback_sign = -1;
    double lambda = 0.0;
    std::optional<std::pair<double, double>> sector;
    std::optional<Nonlinearity> phi;
    json nonlinearity_json;
    GridOptions grid;
    std::optional<SimulationSpec> simulation;
    std::optional<RateScanSpec> rate_scan;
    Tolerances tol;

    /// Forward path gain * plant * controller (no feedback sign).
    TransferFunction forward() const {
        TransferFunction f = gain * plant;
        if (controller) f = f * *controller;
        return cancel_common_factors(f);
    }

    /// Linear part as seen by the negative-feedback convention u = -phi(y);
    /// positive feedback is absorbed as a factor -1.
    TransferFunction loop() const {
        const TransferFunction f = forward();
        return feedback_sign > 0 ? -1.0 * f : f;
    }

    /// Realisation used for simulation; keeps the supplied state space when there is nothing to compose.
    StateSpace forward_state_space() const {
        if (state_space && !controller && gain == 1.0) return *state_space;
        return realize(forward());
    }

    double boundary_tol() const { return tol.boundary.value_or(default_boundary_tol(lambda)); }

    LocusOptions locus_options() const {
        LocusOptions o;
        o.boundary_tol = boundary_tol();
        o.indent_radius = tol.indent_radius;
        return o;
    }

    FrequencyGrid frequency_grid(double at_lambda) const {
        return FrequencyGrid::for_system(loop(), at_lambda, grid);
    }
};

namespace detail {

inline Error spec_error(const std::string& what) { return Error(ErrorCode::invalid_argument, "spec: " + what); }

inline double number(const json& j, const char* key) {
    if (!j.contains(key)) throw spec_error(std::string("missing key '") + key + "'");
    if (!j.at(key).is_number()) throw spec_error(std::string("'") + key + "' must be a number");
    const double v = j.at(key).get<double>();
    if (!std::isfinite(v)) throw spec_error(std::string("'") + key + "' must be finite");
    return v;
}

inline double number_or(const json& j, const char* key, double fallback) {
    return j.contains(key) ? number(j, key) : fallback;
}

inline std::vector<double> numbers(const json& j, const char* what) {
    if (!j.is_array()) throw spec_error(std::string(what) + " must be an array of numbers");
    std::vector<double> out;
    for (const auto& v : j) {
        if (!v.is_number()) throw spec_error(std::string(what) + " must be an array of numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

/// Nested array of rows. A flat array is read as a column when `flat_is_column`, else as a row.
inline Matrix matrix(const json& j, const char* what, bool flat_is_column = false) {
    if (!j.is_array() || j.empty()) throw spec_error(std::string(what) + " must be a non-empty array");
    if (!j.front().is_array()) {
        const auto v = numbers(j, what);
        const Vector col = Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
        return flat_is_column ? Matrix(col) : Matrix(col.transpose());
    }
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = static_cast<Eigen::Index>(j.front().size());
    Matrix M(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const auto row = numbers(j[static_cast<std::size_t>(i)], what);
        if (static_cast<Eigen::Index>(row.size()) != cols) throw spec_error(std::string(what) + " has ragged rows");
        for (Eigen::Index k = 0; k < cols; ++k) M(i, k) = row[static_cast<std::size_t>(k)];
    }
    return M;
}

inline TransferFunction transfer_function(const json& j, const char* what) {
    if (!j.is_object() || !j.contains("num") || !j.contains("den"))
        throw spec_error(std::string(what) + " needs 'num' and 'den' (descending powers)");
    return TransferFunction::from_descending(numbers(j.at("num"), "num"), numbers(j.at("den"), "den"));
}

inline Nonlinearity nonlinearity(const json& j) {
    if (!j.is_object() || !j.contains("kind")) throw spec_error("nonlinearity needs 'kind'");
    const std::string kind = j.at("kind").get<std::string>();
    const json params = j.value("params", json::object());
    if (kind == "tanh_scaled") return Nonlinearity::scaled_tanh(number_or(params, "a", 1.0), number_or(params, "k", 1.0));
    if (kind == "tanh_plus_linear")
        return Nonlinearity::tanh_plus_linear(number_or(params, "a", 1.0), number_or(params, "k", 1.0),
                                              number(params, "slope"));
    if (kind == "custom_table") {
        if (!params.contains("y") || !params.contains("phi")) throw spec_error("custom_table needs params 'y' and 'phi'");
        return Nonlinearity::table(numbers(params.at("y"), "y"), numbers(params.at("phi"), "phi"));
    }
    if (kind == "zero") return Nonlinearity::zero();
    throw spec_error("unknown nonlinearity kind '" + kind + "'");
}

}  // namespace detail

inline SystemSpec parse_spec(const json& j) {
    using namespace detail;
    if (!j.is_object()) throw spec_error("top level must be an object");
    SystemSpec s;
    s.name = j.value("name", std::string{});

    const bool has_tf = j.contains("transfer_function");
    const bool has_ss = j.contains("state_space");
    if (has_tf == has_ss) throw spec_error("exactly one of 'transfer_function' and 'state_space' is required");
    if (has_tf) {
        s.plant = transfer_function(j.at("transfer_function"), "transfer_function");
    } else {
        const json& ss = j.at("state_space");
        StateSpace sys;
        sys.A = matrix(ss.at("A"), "A");
        sys.B = matrix(ss.at("B"), "B", true);
        sys.C = matrix(ss.at("C"), "C");
        sys.D = ss.contains("D") ? matrix(ss.at("D"), "D") : Matrix::Zero(sys.C.rows(), sys.B.cols());
        sys.validate();
        if (!sys.is_siso()) throw spec_error("state_space must be SISO");
        s.state_space = sys;
        s.plant = tf_from_statespace(sys);
    }
    if (j.contains("controller")) s.controller = transfer_function(j.at("controller"), "controller");
    s.gain = number_or(j, "gain", 1.0);

    s.lambda = number_or(j, "lambda", 0.0);
    if (s.lambda < 0.0) throw spec_error("lambda must be >= 0");

    if (j.contains("sector")) {
        const json& sec = j.at("sector");
        const double k1 = number(sec, "k1"), k2 = number(sec, "k2");
        if (!(k1 < k2)) throw spec_error("sector requires k1 < k2");
        s.sector = std::make_pair(k1, k2);
    }
    if (j.contains("nonlinearity")) {
        s.nonlinearity_json = j.at("nonlinearity");
        s.phi = nonlinearity(j.at("nonlinearity"));
    }
    const std::string fb = j.value("feedback", std::string("negative"));
    if (fb == "negative")
        s.feedback_sign = -1;
    else if (fb == "positive")
        s.feedback_sign = 1;
    else
        throw spec_error("feedback must be 'negative' or 'positive'");

    if (j.contains("grid")) {
        const json& g = j.at("grid");
        s.grid.omega_min = number_or(g, "omega_min", s.grid.omega_min);
        s.grid.omega_max = number_or(g, "omega_max", s.grid.omega_max);
        s.grid.points = static_cast<int>(number_or(g, "points", s.grid.points));
        if (!(s.grid.omega_min > 0.0) || !(s.grid.omega_max > s.grid.omega_min) || s.grid.points < 2)
            throw spec_error("grid needs 0 < omega_min < omega_max and points >= 2");
    }
    if (j.contains("simulation")) {
        const json& sim = j.at("simulation");
        SimulationSpec ss;
        const auto x0 = numbers(sim.at("x0"), "x0");
        ss.x0 = Eigen::Map<const Vector>(x0.data(), static_cast<Eigen::Index>(x0.size()));
        ss.dt = number_or(sim, "dt", ss.dt);
        ss.T = number_or(sim, "T", ss.T);
        ss.transient_fraction = number_or(sim, "transient_fraction", ss.transient_fraction);
        ss.csv_stride = static_cast<int>(number_or(sim, "csv_stride", ss.csv_stride));
        s.simulation = ss;
    }
    if (j.contains("rate_scan")) {
        const json& r = j.at("rate_scan");
        RateScanSpec rs;
        rs.lambda_min = number(r, "lambda_min");
        rs.lambda_max = number(r, "lambda_max");
        rs.steps = static_cast<int>(number_or(r, "steps", rs.steps));
        if (r.contains("p")) rs.p = static_cast<int>(number(r, "p"));
        s.rate_scan = rs;
    }
    if (j.contains("tolerances")) {
        const json& t = j.at("tolerances");
        if (t.contains("boundary")) s.tol.boundary = number(t, "boundary");
        if (t.contains("indent_radius")) s.tol.indent_radius = number(t, "indent_radius");
        s.tol.positive_real = number_or(t, "positive_real", s.tol.positive_real);
        s.tol.fixed_point = number_or(t, "fixed_point", s.tol.fixed_point);
        s.tol.recurrence = number_or(t, "recurrence", s.tol.recurrence);
    }
    return s;
}

inline SystemSpec load_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::invalid_argument, "cannot open spec file '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::invalid_argument, std::string("spec: malformed JSON: ") + e.what());
    }
    try {
        return parse_spec(j);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::invalid_argument, std::string("spec: ") + e.what());
    }
}

}  // namespace domkit::cli
