#pragma once

#include "onebit/bernoulli.hpp"
#include "onebit/binary_observation.hpp"
#include "onebit/centroid.hpp"
#include "onebit/dataset.hpp"
#include "onebit/error.hpp"
#include "onebit/experiment.hpp"
#include "onebit/gaussian.hpp"
#include "onebit/hamming_forest.hpp"
#include "onebit/nearest_neighbor.hpp"
#include "onebit/netsim.hpp"
