#pragma once

// Semi-discrete optimal transport with storage fees: Laguerre-cell geometry, exact
// piecewise-linear density integration, the regularized capacity map and its damped
// Newton solver, and partition-stability diagnostics.

#include "sfot/error.hpp"
#include "sfot/geometry.hpp"
#include "sfot/power_diagram.hpp"
#include "sfot/density_mesh.hpp"
#include "sfot/mass.hpp"
#include "sfot/storage_map.hpp"
#include "sfot/solver.hpp"
#include "sfot/diagnostics.hpp"
#include "sfot/generate.hpp"
