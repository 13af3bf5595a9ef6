#pragma once

#include "fluxcav/fluxcav.hpp"

#include <string>

namespace fluxcav::fixtures {

inline DeviceFile shipped_device(const std::string& name) {
    return read_device(std::string(FLUXCAV_DATA_DIR) + "/" + name + ".json");
}

inline CircuitSpec single_mode_fluxonium(double e_c, double e_l, double e_j, double phi_ext, double freq, double g,
                                         int fock = 6) {
    CircuitSpec s;
    s.qubit = FluxoniumParams{e_c, e_l, e_j, phi_ext, 0};
    s.modes = {{"storage", ModeRole::storage, freq, g, fock}};
    return s;
}

}  // namespace fluxcav::fixtures
