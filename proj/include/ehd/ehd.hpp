#pragma once
// Umbrella header for the library (the command runner lives in cli.hpp).

#include "error.hpp"
#include "geometry.hpp"
#include "profiles.hpp"
#include "field.hpp"
#include "energy.hpp"
#include "weiss.hpp"
#include "frequency.hpp"
#include "minimizer.hpp"
#include "blowup.hpp"
#include "corner_solver.hpp"
