#pragma once

// Collar grids and residuals, plus the center, sink/threshold and saddle models.
#include "radscat/center.hpp"
#include "radscat/collar.hpp"
#include "radscat/saddle.hpp"
#include "radscat/sink.hpp"
