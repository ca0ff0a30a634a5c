#pragma once

#include <cstdint>
#include <string>

#include "common.hpp"
#include "iclflow/integrate.hpp"

namespace icltool {

// Flags shared by every command that integrates a flow.
struct IntegratorParams {
  std::string method = "rk45";
  double dt = 1e-2;
  double rtol = 1e-8;
  double atol = 1e-10;
  double t_end = 100.0;
  double invariant_budget = 0.0;  // <= 0 means unlimited
  double grad_tol = 0.0;          // <= 0 disables the convergence exit
  std::uint64_t max_steps = 10'000'000;
  int snapshot_stride = 1;

  iclflow::IntegratorConfig to_config() const;  // throws usage_error
  ordered_json to_json() const;
};

struct OutputParams {
  std::string out = "-";
  std::string format = "json";  // json | csv

  bool csv() const;  // throws usage_error on unknown format
};

struct ValidateParams {
  int d = 1;
  int N = 1;
  std::string lambda = "identity";
  int states = 20;
  std::uint64_t seed = 0;
  double scale = 0.7;
  long mc_batch = 0;   // 0 skips the Monte Carlo check
  double tol = 1e-9;   // relative tolerance against the pairing oracle
  double mc_sigma = 5.0;
  std::string inject_fault;  // term line id; empty = no fault
  double fault_scale = 1.0 + 1e-3;
  OutputParams io;
};

struct SimulateParams {
  std::string system = "simplified";  // full | simplified | d1
  int d = 1;
  int N = 1;
  std::string lambda = "identity";
  std::string init = "random";  // random | zero | path to JSON state
  double init_scale = 1.0;
  std::uint64_t seed = 0;
  bool save_states = false;
  IntegratorParams integ;
  OutputParams io;
};

struct CriticalParams {
  std::string system = "simplified";  // simplified | d1
  int d = 1;
  int N = 1;
  std::string lambda = "identity";
  double kappa = 0.0;
  OutputParams io;
};

struct SweepParams {
  std::string system = "simplified";  // simplified | d1
  int d = 1;
  int N = 1;
  std::string lambda = "identity";
  double kappa_min = -2.0;
  double kappa_max = 2.0;
  int steps = 21;
  OutputParams io;
};

struct BasinParams {
  std::string system = "simplified";  // simplified | d1
  int d = 2;
  int N = 2;
  std::string lambda = "identity";
  int samples = 1000;
  double init_scale = 1.0;
  std::uint64_t seed = 0;
  double hit_tol = 1e-5;
  IntegratorParams integ;
  OutputParams io;

  BasinParams() {
    integ.t_end = 500.0;
    integ.grad_tol = 1e-8;
    // The residual floor of the adaptive method sits near rtol * |state|,
    // so the controller must run below grad_tol for the exit to fire.
    integ.rtol = 1e-10;
    integ.atol = 1e-12;
  }
};

struct PortraitParams {
  int N = 1;
  std::string plane = "Uv";  // Uv | zZ
  double range = 2.0;
  int grid = 21;
  double hit_tol = 1e-4;
  IntegratorParams integ;
  OutputParams io;

  PortraitParams() {
    integ.t_end = 200.0;
    integ.grad_tol = 1e-8;
    integ.rtol = 1e-10;
    integ.atol = 1e-12;
  }
};

}  // namespace icltool
