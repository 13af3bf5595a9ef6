// io.hpp: JSON device files. Keys carry their unit as a suffix and unknown keys
// are rejected.

#pragma once

#include "fluxcav/circuit.hpp"
#include "fluxcav/core.hpp"
#include "fluxcav/lindblad.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <optional>
#include <set>
#include <string>

namespace fluxcav {

using json = nlohmann::json;

class ConfigError : public InvalidParameter {
public:
    using InvalidParameter::InvalidParameter;
};

namespace io {

inline void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [k, v] : j.items())
        if (!ok.count(k)) throw ConfigError(where + ": unknown key '" + k + "'");
}

template <class T>
T get(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) throw ConfigError(where + ": missing key '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(where + "." + key + ": " + e.what());
    }
}

template <class T>
T get_or(const json& j, const char* key, T fallback, const std::string& where) {
    return j.contains(key) ? get<T>(j, key, where) : fallback;
}

// Lifetimes may be given as the string "inf".
inline double get_time(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) throw ConfigError(where + ": missing key '" + key + "'");
    const auto& v = j.at(key);
    if (v.is_string() && v.get<std::string>() == "inf") return std::numeric_limits<double>::infinity();
    if (!v.is_number()) throw ConfigError(where + "." + key + ": expected a number or \"inf\"");
    return v.get<double>();
}

inline json time_to_json(double t) { return std::isinf(t) ? json("inf") : json(t); }

// FNV-1a over the compact dump; stable across platforms and runs.
inline std::uint64_t hash(const json& j) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : j.dump()) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

inline json read_json_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open '" + path + "'");
    try {
        return json::parse(is);
    } catch (const json::parse_error& e) {
        throw ConfigError("'" + path + "': " + e.what());
    }
}

}  // namespace io

// ------------------------------------------------------------ circuit

inline const char* to_string(ModeRole r) {
    switch (r) {
    case ModeRole::storage: return "storage";
    case ModeRole::readout: return "readout";
    case ModeRole::other: return "other";
    }
    return "other";
}

inline ModeRole mode_role_from_string(const std::string& s) {
    if (s == "storage") return ModeRole::storage;
    if (s == "readout") return ModeRole::readout;
    if (s == "other") return ModeRole::other;
    throw ConfigError("mode role must be storage, readout or other (got '" + s + "')");
}

inline CircuitSpec circuit_from_json(const json& j) {
    const std::string w = "circuit";
    io::check_keys(j, {"qubit", "modes", "qubit_dim", "qubit_levels", "max_product_dim"}, w);
    CircuitSpec s;
    const json& q = j.at("qubit");
    const auto type = io::get<std::string>(q, "type", w + ".qubit");
    if (type == "fluxonium") {
        io::check_keys(q, {"type", "e_c_ghz", "e_l_ghz", "e_j_ghz", "phi_ext_phi0", "n_jj"}, w + ".qubit");
        FluxoniumParams f;
        f.e_c = io::get<double>(q, "e_c_ghz", w + ".qubit");
        f.e_l = io::get<double>(q, "e_l_ghz", w + ".qubit");
        f.e_j = io::get<double>(q, "e_j_ghz", w + ".qubit");
        f.phi_ext = io::get_or<double>(q, "phi_ext_phi0", 0.5, w + ".qubit");
        f.n_jj = io::get_or<int>(q, "n_jj", 0, w + ".qubit");
        s.qubit = f;
    } else if (type == "transmon") {
        io::check_keys(q, {"type", "e_c_ghz", "e_j_ghz", "n_cutoff"}, w + ".qubit");
        TransmonParams t;
        t.e_c = io::get<double>(q, "e_c_ghz", w + ".qubit");
        t.e_j = io::get<double>(q, "e_j_ghz", w + ".qubit");
        t.n_cutoff = io::get_or<int>(q, "n_cutoff", 15, w + ".qubit");
        s.qubit = t;
    } else {
        throw ConfigError(w + ".qubit.type must be fluxonium or transmon (got '" + type + "')");
    }
    if (!j.contains("modes") || !j.at("modes").is_array()) throw ConfigError(w + ": 'modes' must be an array");
    for (const auto& m : j.at("modes")) {
        io::check_keys(m, {"name", "role", "freq_ghz", "g_ghz", "fock_dim"}, w + ".modes[]");
        HarmonicModeParams h;
        h.name = io::get_or<std::string>(m, "name", "storage", w + ".modes[]");
        h.role = mode_role_from_string(io::get_or<std::string>(m, "role", "storage", w + ".modes[]"));
        h.bare_freq = io::get<double>(m, "freq_ghz", w + ".modes[]");
        h.coupling_g = io::get<double>(m, "g_ghz", w + ".modes[]");
        h.fock_dim = io::get_or<int>(m, "fock_dim", 2, w + ".modes[]");
        s.modes.push_back(h);
    }
    s.qubit_dim = io::get_or<int>(j, "qubit_dim", 60, w);
    s.qubit_levels = io::get_or<int>(j, "qubit_levels", 10, w);
    s.max_product_dim = io::get_or<Eigen::Index>(j, "max_product_dim", 20000, w);
    try {
        s.validate();
    } catch (const InvalidParameter& e) {
        throw ConfigError(e.what());
    }
    return s;
}

inline json circuit_to_json(const CircuitSpec& s) {
    json j;
    if (s.is_fluxonium()) {
        const auto& f = s.fluxonium();
        j["qubit"] = {{"type", "fluxonium"}, {"e_c_ghz", f.e_c}, {"e_l_ghz", f.e_l}, {"e_j_ghz", f.e_j},
                      {"phi_ext_phi0", f.phi_ext}, {"n_jj", f.n_jj}};
    } else {
        const auto& t = s.transmon();
        j["qubit"] = {{"type", "transmon"}, {"e_c_ghz", t.e_c}, {"e_j_ghz", t.e_j}, {"n_cutoff", t.n_cutoff}};
    }
    j["modes"] = json::array();
    for (const auto& m : s.modes) {
        j["modes"].push_back({{"name", m.name}, {"role", to_string(m.role)}, {"freq_ghz", m.bare_freq},
                              {"g_ghz", m.coupling_g}, {"fock_dim", m.fock_dim}});
    }
    j["qubit_dim"] = s.qubit_dim;
    j["qubit_levels"] = s.qubit_levels;
    j["max_product_dim"] = s.max_product_dim;
    return j;
}

// ------------------------------------------------------------ device file

// Measured half-flux numbers shipped with a device, used as regression targets and
// as the effective model for the dynamics commands.
struct MeasuredParams {
    double omega_qubit{std::numeric_limits<double>::quiet_NaN()};  // GHz
    double chi{std::numeric_limits<double>::quiet_NaN()};          // GHz
    double kerr{std::numeric_limits<double>::quiet_NaN()};         // GHz
    double chi_readout{std::numeric_limits<double>::quiet_NaN()};  // GHz
};

struct LossTimes {
    double t1_storage{std::numeric_limits<double>::infinity()};  // us
    double t1_qubit{std::numeric_limits<double>::infinity()};    // us
    double t2r_qubit{std::numeric_limits<double>::infinity()};   // us
    double t2e_qubit{std::numeric_limits<double>::infinity()};   // us
    double ground_population{1.0};  // thermal qubit ground population

    // Ramsey T2 sets the dephasing seen by the slow selective pulses.
    [[nodiscard]] LossRates rates() const {
        return LossRates::from_times(t1_storage, t1_qubit, t2r_qubit, ground_population);
    }
};

struct DeviceFile {
    std::string name;
    CircuitSpec circuit;
    std::optional<MeasuredParams> measured;
    std::optional<LossTimes> losses;

    // Effective model from the measured chi and K.
    [[nodiscard]] EffectiveModel measured_model(int fock_dim) const {
        require(measured && std::isfinite(measured->chi) && std::isfinite(measured->kerr),
                "device '" + name + "' has no measured chi/K");
        EffectiveModel m;
        m.chi = measured->chi;
        m.kerr = measured->kerr;
        m.fock_dim = fock_dim;
        return m;
    }
};

inline DeviceFile device_from_json(const json& j) {
    io::check_keys(j, {"name", "circuit", "measured", "losses"}, "device");
    DeviceFile d;
    d.name = io::get_or<std::string>(j, "name", "device", "device");
    if (!j.contains("circuit")) throw ConfigError("device: missing key 'circuit'");
    d.circuit = circuit_from_json(j.at("circuit"));
    if (j.contains("measured")) {
        const json& m = j.at("measured");
        const std::string w = "device.measured";
        io::check_keys(m, {"omega_qubit_mhz", "chi_mhz", "kerr_khz", "chi_readout_mhz"}, w);
        MeasuredParams p;
        const double nan = std::numeric_limits<double>::quiet_NaN();
        p.omega_qubit = io::get_or<double>(m, "omega_qubit_mhz", nan, w) * units::kMHz;
        p.chi = io::get_or<double>(m, "chi_mhz", nan, w) * units::kMHz;
        p.kerr = io::get_or<double>(m, "kerr_khz", nan, w) * units::kKHz;
        p.chi_readout = io::get_or<double>(m, "chi_readout_mhz", nan, w) * units::kMHz;
        d.measured = p;
    }
    if (j.contains("losses")) {
        const json& l = j.at("losses");
        const std::string w = "device.losses";
        io::check_keys(l, {"t1_storage_us", "t1_qubit_us", "t2r_qubit_us", "t2e_qubit_us", "ground_population"}, w);
        LossTimes t;
        auto time_or_inf = [&](const char* k) {
            return l.contains(k) ? io::get_time(l, k, w) : std::numeric_limits<double>::infinity();
        };
        t.t1_storage = time_or_inf("t1_storage_us");
        t.t1_qubit = time_or_inf("t1_qubit_us");
        t.t2r_qubit = time_or_inf("t2r_qubit_us");
        t.t2e_qubit = time_or_inf("t2e_qubit_us");
        t.ground_population = io::get_or<double>(l, "ground_population", 1.0, w);
        for (double v : {t.t1_storage, t.t1_qubit, t.t2r_qubit, t.t2e_qubit})
            if (!(v > 0.0)) throw ConfigError(w + ": lifetimes must be positive");
        if (t.ground_population < 0.0 || t.ground_population > 1.0)
            throw ConfigError(w + ".ground_population must lie in [0, 1]");
        d.losses = t;
    }
    return d;
}

inline DeviceFile read_device(const std::string& path) { return device_from_json(io::read_json_file(path)); }

inline json device_to_json(const DeviceFile& d) {
    json j;
    j["name"] = d.name;
    j["circuit"] = circuit_to_json(d.circuit);
    if (d.measured) {
        json m;
        auto put = [&](const char* k, double v, double scale) {
            if (std::isfinite(v)) m[k] = v / scale;
        };
        put("omega_qubit_mhz", d.measured->omega_qubit, units::kMHz);
        put("chi_mhz", d.measured->chi, units::kMHz);
        put("kerr_khz", d.measured->kerr, units::kKHz);
        put("chi_readout_mhz", d.measured->chi_readout, units::kMHz);
        j["measured"] = m;
    }
    if (d.losses) {
        j["losses"] = {{"t1_storage_us", io::time_to_json(d.losses->t1_storage)},
                       {"t1_qubit_us", io::time_to_json(d.losses->t1_qubit)},
                       {"t2r_qubit_us", io::time_to_json(d.losses->t2r_qubit)},
                       {"t2e_qubit_us", io::time_to_json(d.losses->t2e_qubit)},
                       {"ground_population", d.losses->ground_population}};
    }
    return j;
}

}  // namespace fluxcav
