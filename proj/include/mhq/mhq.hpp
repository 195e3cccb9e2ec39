#pragma once

#include "mhq/diagnostics.hpp"
#include "mhq/energy.hpp"
#include "mhq/error.hpp"
#include "mhq/grid.hpp"
#include "mhq/image.hpp"
#include "mhq/manifolds.hpp"
#include "mhq/mvi.hpp"
#include "mhq/penalties.hpp"
#include "mhq/solver.hpp"
#include "mhq/synth.hpp"
#include "mhq/view.hpp"
