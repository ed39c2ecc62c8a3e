#pragma once

// Umbrella header.

#include "gpcp/bench.hpp"
#include "gpcp/conformal.hpp"
#include "gpcp/data_io.hpp"
#include "gpcp/experiment.hpp"
#include "gpcp/gp.hpp"
#include "gpcp/interval.hpp"
#include "gpcp/kernels.hpp"
#include "gpcp/loo.hpp"
#include "gpcp/metrics.hpp"
#include "gpcp/optim.hpp"
#include "gpcp/parallel.hpp"
#include "gpcp/report.hpp"
#include "gpcp/rng.hpp"
#include "gpcp/special.hpp"
#include "gpcp/version.hpp"
