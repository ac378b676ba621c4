#pragma once

#include "otclimb/climbing.hpp"
#include "otclimb/exact.hpp"
#include "otclimb/flow_solver.hpp"
#include "otclimb/geometry.hpp"
#include "otclimb/image_io.hpp"
#include "otclimb/measures.hpp"
#include "otclimb/nearby_flow.hpp"
#include "otclimb/network_simplex.hpp"
#include "otclimb/projection.hpp"
#include "otclimb/wasserstein.hpp"
