#ifndef QMETRO_BUILTINS_HPP
#define QMETRO_BUILTINS_HPP

#include "qmetro/model.hpp"
#include "qmetro/radar.hpp"

#include <json.hpp>

#include <fstream>
#include <map>
#include <string>

namespace qmetro {

// Key-value parameters for built-in families; unknown keys are rejected so
// typos surface early.
using BuiltinParams = std::map<std::string, double>;

namespace detail {
inline double take(BuiltinParams& params, const std::string& key, double fallback) {
    auto it = params.find(key);
    if (it == params.end()) return fallback;
    const double v = it->second;
    params.erase(it);
    return v;
}
}  // namespace detail

inline PureStateModel builtin_model(const std::string& name, BuiltinParams params = {}) {
    PureStateModel m;
    if (name == "qubit_bloch") {
        m = qubit_bloch_model();
    } else if (name == "multiphase") {
        const int d = static_cast<int>(detail::take(params, "d", 2));
        m = multiphase_model(d);
    } else if (name == "radar_biphoton") {
        RadarScene scene;
        scene.kappa = detail::take(params, "kappa", scene.kappa);
        scene.sigma0 = detail::take(params, "sigma0", scene.sigma0);
        scene.sigma_i0 = detail::take(params, "sigma_i0", scene.sigma_i0);
        scene.omega0 = detail::take(params, "omega0", scene.omega0);
        scene.omega_i0 = detail::take(params, "omega_i0", scene.omega_i0);
        scene.t0 = detail::take(params, "t0", scene.t0);
        scene.t_i0 = detail::take(params, "t_i0", scene.t_i0);
        scene.c = detail::take(params, "c", scene.c);
        scene.velocity = detail::take(params, "velocity", scene.velocity);
        scene.range = detail::take(params, "range", scene.range);
        TimeGrid grid;
        grid.n_t = static_cast<int>(detail::take(params, "grid_n", grid.n_t));
        grid.w = detail::take(params, "grid_w", grid.w);
        m = biphoton_model(scene, grid);
    } else {
        throw std::invalid_argument("unknown builtin model '" + name + "'");
    }
    if (!params.empty())
        throw std::invalid_argument("builtin '" + name + "': unknown parameter '" +
                                    params.begin()->first + "'");
    return m;
}

// ---------------------------------------------------------------------------
// Explicit-model file format: JSON with fields
//   d (int), n (int), psi (d pairs [re, im]), dpsi (n lists of d pairs).
// ---------------------------------------------------------------------------

inline ComplexVector parse_complex_vector(const nlohmann::json& j, int expected, const char* what) {
    if (!j.is_array() || static_cast<int>(j.size()) != expected)
        throw ParseError(std::string(what) + ": expected an array of " + std::to_string(expected) +
                         " [re, im] pairs");
    ComplexVector v(expected);
    for (int k = 0; k < expected; ++k) {
        const auto& entry = j[k];
        if (!entry.is_array() || entry.size() != 2 || !entry[0].is_number() ||
            !entry[1].is_number())
            throw ParseError(std::string(what) + ": entry " + std::to_string(k) +
                             " is not an [re, im] pair");
        v[k] = Complex(entry[0].get<double>(), entry[1].get<double>());
    }
    return v;
}

inline PureStateModel explicit_model_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("d") || !j.contains("n") || !j.contains("psi") ||
        !j.contains("dpsi"))
        throw ParseError("explicit model: need fields d, n, psi, dpsi");
    const int d = j["d"].get<int>();
    const int n = j["n"].get<int>();
    if (d < 1 || n < 1) throw ParseError("explicit model: d and n must be positive");
    ComplexVector psi = parse_complex_vector(j["psi"], d, "psi");
    if (!j["dpsi"].is_array() || static_cast<int>(j["dpsi"].size()) != n)
        throw ParseError("explicit model: dpsi must hold n derivative vectors");
    std::vector<ComplexVector> dpsi;
    dpsi.reserve(n);
    for (int k = 0; k < n; ++k)
        dpsi.push_back(parse_complex_vector(j["dpsi"][k], d, "dpsi"));
    try {
        return explicit_model(std::move(psi), std::move(dpsi));
    } catch (const std::invalid_argument& e) {
        throw ParseError(std::string("explicit model: ") + e.what());
    }
}

inline PureStateModel load_model_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open model file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("model file '" + path + "': " + e.what());
    }
    return explicit_model_from_json(j);
}

}  // namespace qmetro

#endif  // QMETRO_BUILTINS_HPP
