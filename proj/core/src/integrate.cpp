#include "iclflow/integrate.hpp"

#include <algorithm>
#include <cmath>

namespace iclflow {

namespace {

bool all_finite(const Vec& x) {
  for (int i = 0; i < x.size(); ++i)
    if (!std::isfinite(x[i])) return false;
  return true;
}

double sup(const Vec& x) {
  return x.size() ? x.cwiseAbs().maxCoeff() : 0.0;
}

// Dormand-Prince 5(4) tableau.
constexpr double kA21 = 1.0 / 5;
constexpr double kA31 = 3.0 / 40, kA32 = 9.0 / 40;
constexpr double kA41 = 44.0 / 45, kA42 = -56.0 / 15, kA43 = 32.0 / 9;
constexpr double kA51 = 19372.0 / 6561, kA52 = -25360.0 / 2187,
                 kA53 = 64448.0 / 6561, kA54 = -212.0 / 729;
constexpr double kA61 = 9017.0 / 3168, kA62 = -355.0 / 33,
                 kA63 = 46732.0 / 5247, kA64 = 49.0 / 176,
                 kA65 = -5103.0 / 18656;
constexpr double kA71 = 35.0 / 384, kA73 = 500.0 / 1113, kA74 = 125.0 / 192,
                 kA75 = -2187.0 / 6784, kA76 = 11.0 / 84;
// Difference between the 5th- and 4th-order weights (error estimator).
constexpr double kE1 = 71.0 / 57600, kE3 = -71.0 / 16695, kE4 = 71.0 / 1920,
                 kE5 = -17253.0 / 339200, kE6 = 22.0 / 525, kE7 = -1.0 / 40;

}  // namespace

Trajectory integrate(const FlowSystem& system, const Vec& x0,
                     const IntegratorConfig& cfg) {
  if (system.dim <= 0 || !system.rhs)
    throw std::invalid_argument("integrate: system has no dimension or rhs");
  if (x0.size() != system.dim)
    throw std::invalid_argument("integrate: initial state has wrong size");
  if (!all_finite(x0))
    throw std::invalid_argument("integrate: initial state is not finite");
  if (!(cfg.t_end > 0.0))
    throw std::invalid_argument("integrate: t_end must be positive");
  if (!(cfg.dt > 0.0))
    throw std::invalid_argument("integrate: dt must be positive");
  if (cfg.method == Method::rk45 && !(cfg.rtol > 0.0 && cfg.atol > 0.0))
    throw std::invalid_argument("integrate: rtol and atol must be positive");
  if (cfg.snapshot_stride < 1)
    throw std::invalid_argument("integrate: snapshot_stride must be >= 1");

  Trajectory traj;
  const auto record = [&](double t, const Vec& x, double grad_norm) {
    traj.times.push_back(t);
    traj.states.push_back(x);
    traj.loss.push_back(system.loss ? system.loss(x)
                                    : std::numeric_limits<double>::quiet_NaN());
    traj.kappa.push_back(system.kappa
                             ? system.kappa(x)
                             : std::numeric_limits<double>::quiet_NaN());
    traj.grad_inf_norm.push_back(grad_norm);
  };

  double t = 0.0;
  Vec x = x0;
  Vec f(system.dim);
  system.rhs(x, f);
  const double kappa0 =
      system.kappa ? system.kappa(x) : std::numeric_limits<double>::quiet_NaN();
  record(t, x, sup(f));

  const bool convergence_enabled = cfg.convergence_grad_tol > 0.0;
  if (convergence_enabled && sup(f) <= cfg.convergence_grad_tol) {
    traj.terminal = Terminal::converged;
    traj.final_time = 0.0;
    return traj;
  }

  double dt = std::min(cfg.dt, cfg.dt_max);
  int converged_streak = 0;
  int since_snapshot = 0;
  traj.terminal = Terminal::max_steps;

  Vec k2(system.dim), k3(system.dim), k4(system.dim), k5(system.dim),
      k6(system.dim), k7(system.dim), xs(system.dim), xn(system.dim);

  const double t_end_edge = cfg.t_end - 1e-14 * std::max(1.0, std::abs(cfg.t_end));

  while (traj.steps_accepted + traj.steps_rejected < cfg.max_steps) {
    const double h = std::min(dt, cfg.t_end - t);
    bool accepted = false;

    if (cfg.method == Method::rk4_fixed) {
      xs = x + (0.5 * h) * f;
      system.rhs(xs, k2);
      xs = x + (0.5 * h) * k2;
      system.rhs(xs, k3);
      xs = x + h * k3;
      system.rhs(xs, k4);
      xn = x + (h / 6.0) * (f + 2.0 * k2 + 2.0 * k3 + k4);
      if (!all_finite(xn))
        throw integration_error("state became non-finite during a fixed step",
                                x, t);
      t += h;
      x = xn;
      system.rhs(x, f);
      accepted = true;
    } else {
      xs = x + h * (kA21 * f);
      system.rhs(xs, k2);
      xs = x + h * (kA31 * f + kA32 * k2);
      system.rhs(xs, k3);
      xs = x + h * (kA41 * f + kA42 * k2 + kA43 * k3);
      system.rhs(xs, k4);
      xs = x + h * (kA51 * f + kA52 * k2 + kA53 * k3 + kA54 * k4);
      system.rhs(xs, k5);
      xs = x + h * (kA61 * f + kA62 * k2 + kA63 * k3 + kA64 * k4 + kA65 * k5);
      system.rhs(xs, k6);
      xn = x + h * (kA71 * f + kA73 * k3 + kA74 * k4 + kA75 * k5 + kA76 * k6);

      if (!all_finite(xn)) {
        // Blow-up handling: halve the step until it resolves or underflows.
        ++traj.steps_rejected;
        dt = 0.5 * h;
        if (dt < cfg.dt_min)
          throw integration_error(
              "state became non-finite and the step size underflowed", x, t);
        continue;
      }
      system.rhs(xn, k7);

      double err = 0.0;
      for (int i = 0; i < system.dim; ++i) {
        const double e = h * (kE1 * f[i] + kE3 * k3[i] + kE4 * k4[i] +
                              kE5 * k5[i] + kE6 * k6[i] + kE7 * k7[i]);
        const double scale =
            cfg.atol + cfg.rtol * std::max(std::abs(x[i]), std::abs(xn[i]));
        err = std::max(err, std::abs(e) / scale);
      }
      if (!std::isfinite(err)) err = std::numeric_limits<double>::max();

      double factor =
          (err > 0.0) ? 0.9 * std::pow(err, -0.2)
                      : 5.0;
      factor = std::clamp(factor, 0.2, 5.0);
      const double next_dt = std::clamp(h * factor, cfg.dt_min, cfg.dt_max);

      if (err <= 1.0) {
        t += h;
        x = xn;
        f = k7;  // first stage of the next step (FSAL)
        dt = next_dt;
        accepted = true;
      } else {
        ++traj.steps_rejected;
        if (h <= cfg.dt_min * (1.0 + 1e-12))
          throw integration_error(
              "error control failed at the minimum step size", x, t);
        dt = next_dt;
        continue;
      }
    }

    if (accepted) {
      ++traj.steps_accepted;
      const double grad_norm = sup(f);

      if (system.kappa && std::isfinite(cfg.invariant_budget)) {
        const double drift = std::abs(system.kappa(x) - kappa0) /
                             std::max(1.0, std::abs(kappa0));
        if (drift > cfg.invariant_budget) {
          traj.terminal = Terminal::budget_exceeded;
          break;
        }
      }

      if (++since_snapshot >= cfg.snapshot_stride) {
        record(t, x, grad_norm);
        since_snapshot = 0;
      }

      if (convergence_enabled) {
        converged_streak =
            (grad_norm <= cfg.convergence_grad_tol) ? converged_streak + 1 : 0;
        if (converged_streak >= 3) {
          traj.terminal = Terminal::converged;
          break;
        }
      }

      if (t >= t_end_edge) {
        traj.terminal = Terminal::t_end;
        break;
      }
    }
  }

  if (traj.times.empty() || traj.times.back() != t) record(t, x, sup(f));
  traj.final_time = t;
  return traj;
}

}  // namespace iclflow
