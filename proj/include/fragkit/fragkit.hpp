#pragma once

#include "fragkit/airy.hpp"
#include "fragkit/branching_mc.hpp"
#include "fragkit/config.hpp"
#include "fragkit/correlation.hpp"
#include "fragkit/errors.hpp"
#include "fragkit/fokker_planck.hpp"
#include "fragkit/grid.hpp"
#include "fragkit/inverse_cdf.hpp"
#include "fragkit/io.hpp"
#include "fragkit/kernel.hpp"
#include "fragkit/lindblad.hpp"
#include "fragkit/log_master.hpp"
#include "fragkit/parallel.hpp"
#include "fragkit/pbe.hpp"
#include "fragkit/quadrature.hpp"
#include "fragkit/rng.hpp"
#include "fragkit/spectral.hpp"
#include "fragkit/tagged_mc.hpp"
