#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "iclflow/types.hpp"

namespace iclflow {

enum class Method {
  rk4_fixed,  // classical fourth-order rule on a fixed grid
  rk45,       // embedded 5(4) pair with step-size control (FSAL)
};

enum class Terminal {
  converged,        // flow sup-norm stayed below tolerance
  t_end,            // reached the requested horizon
  budget_exceeded,  // conserved quantity drifted beyond the allowed budget
  max_steps,        // step budget exhausted before any of the above
};

struct IntegratorConfig {
  Method method = Method::rk45;
  double dt = 1e-2;  // fixed step for rk4_fixed, initial step for rk45
  double rtol = 1e-8;
  double atol = 1e-10;
  double t_end = 100.0;
  // Allowed relative drift |kappa(t) - kappa(0)| / max(1, |kappa(0)|).
  double invariant_budget = std::numeric_limits<double>::infinity();
  // Convergence declared after the flow sup-norm at three consecutive
  // accepted steps falls to this level; non-positive disables the exit.
  double convergence_grad_tol = 0.0;
  std::uint64_t max_steps = 10'000'000;
  int snapshot_stride = 1;  // record every k-th accepted step
  double dt_min = 1e-12;
  double dt_max = 1.0;
};

inline const char* to_string(Method m) {
  switch (m) {
    case Method::rk4_fixed: return "rk4-fixed";
    case Method::rk45: return "rk45";
  }
  return "?";
}

inline const char* to_string(Terminal t) {
  switch (t) {
    case Terminal::converged: return "converged";
    case Terminal::t_end: return "t_end";
    case Terminal::budget_exceeded: return "budget_exceeded";
    case Terminal::max_steps: return "max_steps";
  }
  return "?";
}

// A first-order autonomous system dx/dt = rhs(x) with its scalar readouts.
struct FlowSystem {
  int dim = 0;
  std::string name;
  std::function<void(const Vec& x, Vec& dxdt)> rhs;
  std::function<double(const Vec& x)> loss;
  std::function<double(const Vec& x)> kappa;
};

// Snapshots along the solution.  Entry 0 is the initial state; the final
// state is always recorded.  All arrays are aligned by index.
struct Trajectory {
  std::vector<double> times;
  std::vector<Vec> states;
  std::vector<double> loss;
  std::vector<double> kappa;
  std::vector<double> grad_inf_norm;  // flow sup-norm at the snapshot
  Terminal terminal = Terminal::t_end;
  std::uint64_t steps_accepted = 0;
  std::uint64_t steps_rejected = 0;
  double final_time = 0.0;
};

// Thrown when the solution leaves the representable range (non-finite state)
// and step-size reduction cannot rescue it.  Carries the last finite state.
class integration_error : public std::runtime_error {
 public:
  integration_error(const std::string& what, Vec last_state, double last_time)
      : std::runtime_error(what),
        last_state(std::move(last_state)),
        last_time(last_time) {}

  Vec last_state;
  double last_time = 0.0;
};

Trajectory integrate(const FlowSystem& system, const Vec& x0,
                     const IntegratorConfig& cfg);

}  // namespace iclflow
