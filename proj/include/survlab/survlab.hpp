#pragma once

// Umbrella header for the whole laboratory: data generation, the four
// survival losses, the shared-embedding network, the bound verifiers, and the
// capacity-sweep harness.

#include "survlab/datagen.hpp"
#include "survlab/discretize.hpp"
#include "survlab/io.hpp"
#include "survlab/losses.hpp"
#include "survlab/mlp.hpp"
#include "survlab/numeric.hpp"
#include "survlab/presets.hpp"
#include "survlab/rng.hpp"
#include "survlab/risk.hpp"
#include "survlab/sweep.hpp"
#include "survlab/svg.hpp"
#include "survlab/theory.hpp"
