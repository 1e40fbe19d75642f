#pragma once

#include "radscat/boundary_model.hpp"
#include "radscat/classical.hpp"
#include "radscat/common.hpp"
#include "radscat/eigenfunction_models.hpp"
#include "radscat/legendrian.hpp"
#include "radscat/oracle.hpp"
#include "radscat/pairing.hpp"
#include "radscat/smatrix.hpp"
