#pragma once

//! Conditional quantile trajectories from level/slope snippet data.

#include "cond_dist.hpp"
#include "csv.hpp"
#include "dynamics.hpp"
#include "error.hpp"
#include "integrate.hpp"
#include "io.hpp"
#include "kernel.hpp"
#include "parallel.hpp"
#include "random.hpp"
#include "sim.hpp"
#include "snippet.hpp"
