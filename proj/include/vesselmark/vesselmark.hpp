#pragma once

#include "attention.hpp"
#include "config.hpp"
#include "density_map.hpp"
#include "gaussian.hpp"
#include "morphology.hpp"
#include "phantoms.hpp"
#include "pipeline.hpp"
#include "raster.hpp"
#include "raster_io.hpp"
#include "serialization.hpp"
#include "tortuosity_map.hpp"
#include "vessel_graph.hpp"
