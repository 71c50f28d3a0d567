#pragma once

// Backend-agnostic IMEX time stepping: BE-FE, BE-AB2, the time filter, the
// two error estimators and the adaptive order-1/order-2 controller.

#include "imex12/timestepper/backend.hpp"
#include "imex12/timestepper/controller.hpp"
#include "imex12/timestepper/formulas.hpp"
#include "imex12/timestepper/integrator.hpp"
