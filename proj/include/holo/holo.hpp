#pragma once

#include "holo/core_types.hpp"
#include "holo/error.hpp"
#include "holo/forward.hpp"
#include "holo/inference.hpp"
#include "holo/io/cli.hpp"
#include "holo/io/config.hpp"
#include "holo/io/image.hpp"
#include "holo/io/results.hpp"
#include "holo/likelihood.hpp"
#include "holo/mie.hpp"
#include "holo/prior.hpp"
#include "holo/propagation.hpp"
#include "holo/random.hpp"
#include "holo/sampler.hpp"
#include "holo/scatterers.hpp"
#include "holo/summary.hpp"
#include "holo/tracking.hpp"
#include "holo/version.hpp"
