#pragma once

// Umbrella header.

#include "athom/core.hpp"
#include "athom/integrands.hpp"
#include "athom/validation.hpp"
#include "athom/geometry.hpp"
#include "athom/profiles.hpp"
#include "athom/cell_problems.hpp"
#include "athom/regime.hpp"
#include "athom/surface_density.hpp"
#include "athom/at_solver.hpp"
#include "athom/limit_solver.hpp"
#include "athom/averaging.hpp"
#include "athom/experiment.hpp"
