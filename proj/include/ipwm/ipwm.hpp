#pragma once

#include "ipwm/anchors.hpp"
#include "ipwm/bootstrap.hpp"
#include "ipwm/core.hpp"
#include "ipwm/data_model.hpp"
#include "ipwm/estimators.hpp"
#include "ipwm/formula.hpp"
#include "ipwm/glm.hpp"
#include "ipwm/nuisance.hpp"
#include "ipwm/parallel.hpp"
#include "ipwm/reinfarction.hpp"
#include "ipwm/rng.hpp"
#include "ipwm/scenario_io.hpp"
#include "ipwm/simulation.hpp"
#include "ipwm/weights.hpp"
