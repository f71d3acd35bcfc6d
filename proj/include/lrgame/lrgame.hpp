#pragma once

#include "lrgame/aitken.hpp"
#include "lrgame/efficiency.hpp"
#include "lrgame/error.hpp"
#include "lrgame/estimation.hpp"
#include "lrgame/game.hpp"
#include "lrgame/generators.hpp"
#include "lrgame/monte_carlo.hpp"
#include "lrgame/privacy_cost.hpp"
#include "lrgame/projected_descent.hpp"
#include "lrgame/rng.hpp"
#include "lrgame/scalarization.hpp"
