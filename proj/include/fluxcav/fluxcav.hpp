// fluxcav.hpp: umbrella header.

#pragma once

#include "fluxcav/core.hpp"
#include "fluxcav/operators.hpp"
#include "fluxcav/circuit.hpp"
#include "fluxcav/dressed.hpp"
#include "fluxcav/ode.hpp"
#include "fluxcav/lindblad.hpp"
#include "fluxcav/phase_space.hpp"
#include "fluxcav/bosonic.hpp"
#include "fluxcav/snap.hpp"
#include "fluxcav/design.hpp"
#include "fluxcav/io.hpp"
