#pragma once

#include "wavectrl/baselines.hpp"
#include "wavectrl/errors.hpp"
#include "wavectrl/experiment.hpp"
#include "wavectrl/grid.hpp"
#include "wavectrl/least_squares.hpp"
#include "wavectrl/linear_control.hpp"
#include "wavectrl/nonlinearity.hpp"
#include "wavectrl/norms.hpp"
#include "wavectrl/region.hpp"
#include "wavectrl/residual.hpp"
#include "wavectrl/wave_solver.hpp"
