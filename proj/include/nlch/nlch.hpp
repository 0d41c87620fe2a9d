#pragma once

#include "nlch/types.hpp"
#include "nlch/mesh.hpp"
#include "nlch/random_fields.hpp"
#include "nlch/nonlocal.hpp"
#include "nlch/potentials.hpp"
#include "nlch/spaces.hpp"
#include "nlch/evolve.hpp"
#include "nlch/stationary.hpp"
#include "nlch/initial.hpp"
#include "nlch/harness/config.hpp"
#include "nlch/harness/io.hpp"
#include "nlch/harness/experiments.hpp"
