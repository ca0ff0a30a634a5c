#include "params.hpp"

#include <limits>

namespace icltool {

iclflow::IntegratorConfig IntegratorParams::to_config() const {
  iclflow::IntegratorConfig cfg;
  if (method == "rk45")
    cfg.method = iclflow::Method::rk45;
  else if (method == "rk4-fixed")
    cfg.method = iclflow::Method::rk4_fixed;
  else
    throw usage_error("unknown --method '" + method +
                      "' (expected rk45 or rk4-fixed)");
  if (!(t_end > 0.0)) throw usage_error("--t-end must be positive");
  if (!(dt > 0.0)) throw usage_error("--dt must be positive");
  if (!(rtol > 0.0) || !(atol > 0.0))
    throw usage_error("--rtol and --atol must be positive");
  if (snapshot_stride < 1)
    throw usage_error("--snapshot-stride must be at least 1");
  cfg.dt = dt;
  cfg.rtol = rtol;
  cfg.atol = atol;
  cfg.t_end = t_end;
  cfg.invariant_budget = invariant_budget > 0.0
                             ? invariant_budget
                             : std::numeric_limits<double>::infinity();
  cfg.convergence_grad_tol = grad_tol;
  cfg.max_steps = max_steps;
  cfg.snapshot_stride = snapshot_stride;
  return cfg;
}

ordered_json IntegratorParams::to_json() const {
  ordered_json j;
  j["method"] = method;
  j["dt"] = dt;
  j["rtol"] = rtol;
  j["atol"] = atol;
  j["t-end"] = t_end;
  j["invariant-budget"] = invariant_budget;
  j["grad-tol"] = grad_tol;
  j["max-steps"] = max_steps;
  j["snapshot-stride"] = snapshot_stride;
  return j;
}

bool OutputParams::csv() const {
  if (format == "csv") return true;
  if (format == "json") return false;
  throw usage_error("unknown --format '" + format + "' (expected json or csv)");
}

}  // namespace icltool
