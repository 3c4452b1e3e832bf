// SPDX-License-Identifier: Apache-2.0
//
// Umbrella header for the stepping library.

#pragma once

#include "core.hpp"
#include "kd.hpp"
#include "kinetic.hpp"
#include "metrics.hpp"
#include "moments.hpp"
#include "rng.hpp"
