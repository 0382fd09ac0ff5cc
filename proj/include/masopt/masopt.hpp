#pragma once

#include "masopt/config.hpp"
#include "masopt/dataset.hpp"
#include "masopt/harness.hpp"
#include "masopt/mlp.hpp"
#include "masopt/optimizers.hpp"
#include "masopt/plot.hpp"
#include "masopt/problems.hpp"
#include "masopt/rng.hpp"
#include "masopt/trace_io.hpp"
#include "masopt/vector.hpp"
