#pragma once

#include "platoon/errors.hpp"
#include "platoon/model.hpp"
#include "platoon/dp_solver.hpp"
#include "platoon/steady_state.hpp"
#include "platoon/rng.hpp"
#include "platoon/simulation.hpp"
#include "platoon/experiments.hpp"
