#pragma once

// Umbrella header for the stratified cost-effectiveness library.

#include "strata_icer/clustering.hpp"
#include "strata_icer/dataset.hpp"
#include "strata_icer/error.hpp"
#include "strata_icer/icer.hpp"
#include "strata_icer/metrics.hpp"
#include "strata_icer/report_io.hpp"
#include "strata_icer/rng.hpp"
#include "strata_icer/sim_io.hpp"
#include "strata_icer/simulate.hpp"
#include "strata_icer/stats.hpp"
