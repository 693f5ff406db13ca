#pragma once

#include "hypolab/error.hpp"
#include "hypolab/model.hpp"
#include "hypolab/linalg.hpp"
#include "hypolab/discretize.hpp"
#include "hypolab/tuning.hpp"
#include "hypolab/corrector.hpp"
#include "hypolab/philox.hpp"
#include "hypolab/evolve.hpp"
#include "hypolab/sampler.hpp"
