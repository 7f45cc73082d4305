/**
 * @file cab.hpp
 * @brief Umbrella header for the corrected Adams-Bashforth sampling toolkit.
 */
#pragma once

#include "cab/benchfields.hpp"
#include "cab/convergence.hpp"
#include "cab/errors.hpp"
#include "cab/multistep.hpp"
#include "cab/noise.hpp"
#include "cab/rectified_field.hpp"
#include "cab/reference_oracle.hpp"
#include "cab/sampler.hpp"
#include "cab/schedule.hpp"
#include "cab/state.hpp"
