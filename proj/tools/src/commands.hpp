#pragma once

#include "params.hpp"

namespace icltool {

int run_validate(const ValidateParams& p);
int run_simulate(const SimulateParams& p);
int run_critical(const CriticalParams& p);
int run_sweep(const SweepParams& p);
int run_basin(const BasinParams& p);
int run_portrait(const PortraitParams& p);

}  // namespace icltool
